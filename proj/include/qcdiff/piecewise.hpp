#pragma once

#include <complex>
#include <vector>

#include "qcdiff/window.hpp"

namespace qcdiff {

using cdouble = std::complex<double>;

// One polynomial piece on the half-open interval [lo, hi).
struct PolyPiece {
  double lo = 0.0, hi = 0.0;
  std::vector<cdouble> c; // p(y) = sum_k c[k] y^k
};

// Piecewise polynomial on the line, zero off the listed pieces. This is the
// representation for envelope components: means, covariance envelopes and
// shift densities all live here, and the Fourier transform of every piece
// has a closed form.
class PiecewiseFn {
public:
  PiecewiseFn() = default;
  static PiecewiseFn zero() { return PiecewiseFn(); }
  static PiecewiseFn constant_on(const Window& w1d, cdouble value);
  static PiecewiseFn from_pieces(std::vector<PolyPiece> pieces);

  const std::vector<PolyPiece>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }

  cdouble eval(double y) const;
  PiecewiseFn scaled(cdouble f) const;
  PiecewiseFn plus(const PiecewiseFn& o) const;
  PiecewiseFn times(const PiecewiseFn& o) const;
  PiecewiseFn shifted(double t) const;      // y -> f(y - t)
  PiecewiseFn restricted(const Window& w1d) const;
  PiecewiseFn conjugated() const;

  cdouble integral() const;
  // closed-form integral f(y) exp(-2*pi*i*freq*y) dy
  cdouble fourier(double freq) const;

  // total variation (including the jumps to zero at piece edges); gives the
  // decay bound |fourier(xi)| <= tv / (2*pi*|xi|)
  double total_variation() const;
  double abs_integral_bound() const; // integral of |f| upper bound

  std::vector<double> breakpoints() const;

private:
  std::vector<PolyPiece> pieces_; // sorted by lo, non-overlapping
  void normalize();
};

// exp integral helper: integral over [lo,hi) of y^m exp(-2*pi*i*freq*y) dy
cdouble monomial_fourier(int m, double lo, double hi, double freq);

// (1_W * h)(y) for a 1-D window W and compactly supported piecewise density h
PiecewiseFn convolve_indicator(const Window& w1d, const PiecewiseFn& h);

} // namespace qcdiff
