#include "doctest.h"

#include <cmath>
#include <complex>

#include "qcdiff/piecewise.hpp"

using namespace qcdiff;

namespace {

constexpr double kPi = 3.14159265358979323846;

Window interval(double lo, double hi) {
  WBox b;
  b.lo = {Scalar::fp(lo)};
  b.hi = {Scalar::fp(hi)};
  return Window::from_boxes(1, {b});
}

PiecewiseFn unit_tent() {
  // 1 - |y| on [-1, 1]; integrates to 1
  PolyPiece up{-1.0, 0.0, {cdouble(1.0), cdouble(1.0)}};
  PolyPiece down{0.0, 1.0, {cdouble(1.0), cdouble(-1.0)}};
  return PiecewiseFn::from_pieces({up, down});
}

// Independent oracle: composite Simpson for int f(y) exp(-2 pi i freq y) dy.
cdouble fourier_quadrature(const PiecewiseFn& f, double freq, int per_piece = 4000) {
  cdouble acc(0);
  for (const auto& p : f.pieces()) {
    double h = (p.hi - p.lo) / per_piece;
    cdouble s(0);
    for (int k = 0; k <= per_piece; ++k) {
      double y = p.lo + k * h;
      cdouble val(0);
      double ypow = 1.0;
      for (const auto& c : p.c) {
        val += c * ypow;
        ypow *= y;
      }
      val *= std::exp(cdouble(0, -2.0 * kPi * freq * y));
      double w = (k == 0 || k == per_piece) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w * val;
    }
    acc += s * (h / 3.0);
  }
  return acc;
}

} // namespace

TEST_CASE("indicator transform: mass at zero, zeros at integer frequencies") {
  PiecewiseFn ind = PiecewiseFn::constant_on(interval(0.0, 1.0), 1.0);
  CHECK(std::abs(ind.fourier(0.0) - cdouble(1.0)) < 1e-12);
  CHECK(std::abs(ind.fourier(1.0)) < 1e-12);
  CHECK(std::abs(ind.fourier(-3.0)) < 1e-12);
  // half-integer frequency: closed form -2i/pi
  cdouble got = ind.fourier(0.5);
  CHECK(std::abs(got - cdouble(0.0, -2.0 / kPi)) < 1e-12);
}

TEST_CASE("tent transform: squared sinc values") {
  PiecewiseFn tent = unit_tent();
  CHECK(std::abs(tent.integral() - cdouble(1.0)) < 1e-12);
  CHECK(std::abs(tent.fourier(0.0) - cdouble(1.0)) < 1e-12);
  // (sin(pi f)/(pi f))^2 at f = 0.5
  double expected = std::pow(std::sin(kPi * 0.5) / (kPi * 0.5), 2.0);
  CHECK(std::abs(tent.fourier(0.5) - cdouble(expected)) < 1e-12);
  CHECK(std::abs(tent.fourier(1.0)) < 1e-12); // integer zeros
}

TEST_CASE("transform matches quadrature across the series/recurrence switch") {
  PiecewiseFn tent = unit_tent();
  PolyPiece cubic{0.25, 2.0, {cdouble(0.3, -0.1), cdouble(0), cdouble(1.0), cdouble(-0.25, 0.5)}};
  PiecewiseFn poly = PiecewiseFn::from_pieces({cubic});
  // 0.07 and 0.09 straddle the small-argument series threshold on [-1,1]
  for (double f : {0.0, 1e-6, 0.01, 0.07, 0.09, 0.3, 1.7, -2.4, 15.0}) {
    CAPTURE(f);
    CHECK(std::abs(tent.fourier(f) - fourier_quadrature(tent, f)) < 1e-9);
    CHECK(std::abs(poly.fourier(f) - fourier_quadrature(poly, f)) < 1e-8);
  }
}

TEST_CASE("shift identity: transform picks up a phase") {
  PiecewiseFn tent = unit_tent();
  PiecewiseFn moved = tent.shifted(0.7);
  CHECK(std::abs(moved.eval(0.7) - tent.eval(0.0)) < 1e-12);
  CHECK(std::abs(moved.eval(1.2) - tent.eval(0.5)) < 1e-12);
  for (double f : {0.25, 1.5, -0.6}) {
    cdouble phase = std::exp(cdouble(0, -2.0 * kPi * f * 0.7));
    CHECK(std::abs(moved.fourier(f) - phase * tent.fourier(f)) < 1e-10);
  }
}

TEST_CASE("algebra: plus, times, scaled, conjugated evaluate pointwise") {
  PiecewiseFn a = PiecewiseFn::constant_on(interval(0.0, 2.0), cdouble(1.0, 1.0));
  PiecewiseFn b = unit_tent(); // overlaps [0,1] only
  PiecewiseFn sum = a.plus(b);
  PiecewiseFn prod = a.times(b);
  for (double y : {-0.5, 0.25, 0.75, 1.5}) {
    CAPTURE(y);
    CHECK(std::abs(sum.eval(y) - (a.eval(y) + b.eval(y))) < 1e-12);
    CHECK(std::abs(prod.eval(y) - a.eval(y) * b.eval(y)) < 1e-12);
  }
  CHECK(std::abs(a.scaled(cdouble(0, 2)).eval(1.0) - cdouble(-2.0, 2.0)) < 1e-12);
  CHECK(std::abs(a.conjugated().eval(1.0) - cdouble(1.0, -1.0)) < 1e-12);
  PiecewiseFn cut = b.restricted(interval(0.0, 10.0));
  CHECK(std::abs(cut.eval(-0.5)) == 0.0);
  CHECK(std::abs(cut.eval(0.5) - b.eval(0.5)) < 1e-12);
}

TEST_CASE("variation bound dominates true variation") {
  PiecewiseFn ind = PiecewiseFn::constant_on(interval(0.0, 1.0), 1.0);
  CHECK(ind.total_variation() == doctest::Approx(2.0)); // two unit jumps
  PolyPiece ramp{0.0, 1.0, {cdouble(0.0), cdouble(1.0)}};
  PiecewiseFn r = PiecewiseFn::from_pieces({ramp});
  CHECK(r.total_variation() == doctest::Approx(2.0)); // rise 1, drop 1
  // bound for the tent is loose (4 >= true variation 2) but finite
  CHECK(unit_tent().total_variation() == doctest::Approx(4.0));
  CHECK(unit_tent().total_variation() >= 2.0);
}

TEST_CASE("smoothing an indicator by a box gives the ramp profile") {
  Window w = interval(0.0, 1.0);
  PiecewiseFn box = PiecewiseFn::constant_on(interval(0.0, 1.0), 1.0);
  PiecewiseFn e = convolve_indicator(w, box);
  CHECK(std::abs(e.eval(0.5) - cdouble(0.5)) < 1e-12);
  CHECK(std::abs(e.eval(1.0) - cdouble(1.0)) < 1e-12);
  CHECK(std::abs(e.eval(1.5) - cdouble(0.5)) < 1e-12);
  CHECK(std::abs(e.eval(2.5)) == 0.0);
  CHECK(std::abs(e.integral() - cdouble(1.0)) < 1e-12);
}

TEST_CASE("smoothing a split window, and the product rule in frequency") {
  WBox b1, b2;
  b1.lo = {Scalar::fp(0.0)};
  b1.hi = {Scalar::fp(1.0)};
  b2.lo = {Scalar::fp(2.0)};
  b2.hi = {Scalar::fp(3.0)};
  Window w = Window::from_boxes(1, {b1, b2});
  PolyPiece u{0.0, 0.5, {cdouble(2.0)}}; // uniform density on [0, 0.5]
  PiecewiseFn h = PiecewiseFn::from_pieces({u});
  PiecewiseFn e = convolve_indicator(w, h);
  CHECK(std::abs(e.eval(0.25) - cdouble(0.5)) < 1e-12);
  CHECK(std::abs(e.eval(0.75) - cdouble(1.0)) < 1e-12);
  CHECK(std::abs(e.eval(1.75)) == 0.0);
  CHECK(std::abs(e.integral() - cdouble(2.0)) < 1e-12);
  // transform of the convolution factors exactly
  PiecewiseFn ind = PiecewiseFn::constant_on(w, 1.0);
  for (double f : {0.2, 0.9, 3.3}) {
    CAPTURE(f);
    CHECK(std::abs(e.fourier(f) - ind.fourier(f) * h.fourier(f)) < 1e-10);
  }
}

TEST_CASE("degenerate and empty inputs stay well behaved") {
  PiecewiseFn z = PiecewiseFn::zero();
  CHECK(z.empty());
  CHECK(std::abs(z.fourier(1.3)) == 0.0);
  CHECK(std::abs(z.integral()) == 0.0);
  CHECK(z.total_variation() == 0.0);
  PiecewiseFn tent = unit_tent();
  PiecewiseFn cancelled = tent.plus(tent.scaled(-1.0));
  for (double y : {-0.5, 0.0, 0.5}) CHECK(std::abs(cancelled.eval(y)) < 1e-12);
}
