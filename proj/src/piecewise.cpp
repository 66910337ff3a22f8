#include "qcdiff/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qcdiff {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<cdouble> poly_add(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  std::vector<cdouble> r(std::max(a.size(), b.size()), cdouble(0));
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

std::vector<cdouble> poly_mul(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<cdouble> r(a.size() + b.size() - 1, cdouble(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// coefficients of p(y - t)
std::vector<cdouble> poly_shift(const std::vector<cdouble>& c, double t) {
  std::vector<cdouble> r(c.size(), cdouble(0));
  for (std::size_t k = 0; k < c.size(); ++k) {
    // expand c_k (y - t)^k
    double binom = 1.0;
    double tp = 1.0;
    for (std::size_t j = 0; j <= k; ++j) {
      // term c_k * C(k, k-j) * (-t)^j * y^(k-j)
      r[k - j] += c[k] * binom * tp;
      tp *= -t;
      binom = binom * (double)(k - j) / (double)(j + 1);
    }
  }
  return r;
}

cdouble poly_eval(const std::vector<cdouble>& c, double y) {
  cdouble acc(0);
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * y + c[k];
  return acc;
}

bool poly_is_zero(const std::vector<cdouble>& c) {
  for (const auto& v : c)
    if (v != cdouble(0)) return false;
  return true;
}

} // namespace

void PiecewiseFn::normalize() {
  std::vector<PolyPiece> keep;
  for (auto& p : pieces_) {
    if (!(p.hi > p.lo)) continue;
    while (!p.c.empty() && p.c.back() == cdouble(0)) p.c.pop_back();
    if (p.c.empty()) continue;
    keep.push_back(std::move(p));
  }
  std::sort(keep.begin(), keep.end(),
            [](const PolyPiece& a, const PolyPiece& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < keep.size(); ++i)
    if (keep[i].lo < keep[i - 1].hi - 1e-12)
      throw std::invalid_argument("PiecewiseFn: overlapping pieces");
  pieces_ = std::move(keep);
}

PiecewiseFn PiecewiseFn::from_pieces(std::vector<PolyPiece> pieces) {
  PiecewiseFn f;
  f.pieces_ = std::move(pieces);
  f.normalize();
  return f;
}

PiecewiseFn PiecewiseFn::constant_on(const Window& w1d, cdouble value) {
  if (w1d.dim() != 1) throw std::invalid_argument("PiecewiseFn: window must be 1-D");
  std::vector<PolyPiece> ps;
  for (const auto& b : w1d.boxes()) {
    PolyPiece p;
    p.lo = b.lo[0].to_double();
    p.hi = b.hi[0].to_double();
    p.c = {value};
    ps.push_back(p);
  }
  return from_pieces(std::move(ps));
}

cdouble PiecewiseFn::eval(double y) const {
  for (const auto& p : pieces_)
    if (y >= p.lo && y < p.hi) return poly_eval(p.c, y);
  return cdouble(0);
}

PiecewiseFn PiecewiseFn::scaled(cdouble f) const {
  PiecewiseFn r = *this;
  for (auto& p : r.pieces_)
    for (auto& c : p.c) c *= f;
  r.normalize();
  return r;
}

std::vector<double> PiecewiseFn::breakpoints() const {
  std::vector<double> b;
  for (const auto& p : pieces_) {
    b.push_back(p.lo);
    b.push_back(p.hi);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end(),
                      [](double x, double y) { return std::abs(x - y) < 1e-14; }),
          b.end());
  return b;
}

PiecewiseFn PiecewiseFn::plus(const PiecewiseFn& o) const {
  std::vector<double> knots = breakpoints();
  for (double k : o.breakpoints()) knots.push_back(k);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-14; }),
              knots.end());
  std::vector<PolyPiece> ps;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double mid = 0.5 * (knots[i] + knots[i + 1]);
    std::vector<cdouble> a, b;
    for (const auto& p : pieces_)
      if (mid >= p.lo && mid < p.hi) a = p.c;
    for (const auto& p : o.pieces_)
      if (mid >= p.lo && mid < p.hi) b = p.c;
    if (a.empty() && b.empty()) continue;
    PolyPiece np;
    np.lo = knots[i];
    np.hi = knots[i + 1];
    np.c = poly_add(a, b);
    if (!poly_is_zero(np.c)) ps.push_back(np);
  }
  return from_pieces(std::move(ps));
}

PiecewiseFn PiecewiseFn::times(const PiecewiseFn& o) const {
  std::vector<double> knots = breakpoints();
  for (double k : o.breakpoints()) knots.push_back(k);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-14; }),
              knots.end());
  std::vector<PolyPiece> ps;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double mid = 0.5 * (knots[i] + knots[i + 1]);
    std::vector<cdouble> a, b;
    for (const auto& p : pieces_)
      if (mid >= p.lo && mid < p.hi) a = p.c;
    for (const auto& p : o.pieces_)
      if (mid >= p.lo && mid < p.hi) b = p.c;
    if (a.empty() || b.empty()) continue;
    PolyPiece np;
    np.lo = knots[i];
    np.hi = knots[i + 1];
    np.c = poly_mul(a, b);
    if (!poly_is_zero(np.c)) ps.push_back(np);
  }
  return from_pieces(std::move(ps));
}

PiecewiseFn PiecewiseFn::shifted(double t) const {
  PiecewiseFn r;
  for (const auto& p : pieces_) {
    PolyPiece np;
    np.lo = p.lo + t;
    np.hi = p.hi + t;
    np.c = poly_shift(p.c, t);
    r.pieces_.push_back(np);
  }
  r.normalize();
  return r;
}

PiecewiseFn PiecewiseFn::restricted(const Window& w1d) const {
  if (w1d.dim() != 1) throw std::invalid_argument("PiecewiseFn: window must be 1-D");
  std::vector<PolyPiece> ps;
  for (const auto& p : pieces_)
    for (const auto& b : w1d.boxes()) {
      double lo = std::max(p.lo, b.lo[0].to_double());
      double hi = std::min(p.hi, b.hi[0].to_double());
      if (hi > lo) {
        PolyPiece np;
        np.lo = lo;
        np.hi = hi;
        np.c = p.c;
        ps.push_back(np);
      }
    }
  return from_pieces(std::move(ps));
}

PiecewiseFn PiecewiseFn::conjugated() const {
  PiecewiseFn r = *this;
  for (auto& p : r.pieces_)
    for (auto& c : p.c) c = std::conj(c);
  return r;
}

cdouble PiecewiseFn::integral() const {
  cdouble acc(0);
  for (const auto& p : pieces_) {
    double plo = 1.0, phi = 1.0;
    for (std::size_t k = 0; k < p.c.size(); ++k) {
      plo *= p.lo;
      phi *= p.hi;
      acc += p.c[k] * ((phi - plo) / (double)(k + 1));
    }
  }
  return acc;
}

cdouble monomial_fourier(int m, double lo, double hi, double freq) {
  const cdouble alpha(0.0, -kTwoPi * freq);
  double ymax = std::max(std::abs(lo), std::abs(hi));
  if (std::abs(alpha) * ymax < 0.5) {
    // series in alpha: sum_j alpha^j / j! * (hi^(m+j+1) - lo^(m+j+1)) / (m+j+1)
    cdouble acc(0), apow(1.0);
    double fact = 1.0;
    double lp = std::pow(lo, m + 1), hp = std::pow(hi, m + 1);
    for (int j = 0; j < 40; ++j) {
      cdouble term = apow / fact * ((hp - lp) / (double)(m + j + 1));
      acc += term;
      if (std::abs(term) < 1e-18 * (1.0 + std::abs(acc)) && j > 2) break;
      apow *= alpha;
      fact *= (double)(j + 1);
      lp *= lo;
      hp *= hi;
    }
    return acc;
  }
  // upward recurrence I_m = [y^m e^{alpha y}/alpha] - (m/alpha) I_{m-1}
  cdouble elo = std::exp(alpha * lo), ehi = std::exp(alpha * hi);
  cdouble im = (ehi - elo) / alpha;
  double lp = 1.0, hp = 1.0;
  for (int k = 1; k <= m; ++k) {
    lp *= lo;
    hp *= hi;
    im = (hp * ehi - lp * elo) / alpha - ((double)k / alpha) * im;
  }
  return im;
}

cdouble PiecewiseFn::fourier(double freq) const {
  cdouble acc(0);
  for (const auto& p : pieces_)
    for (std::size_t k = 0; k < p.c.size(); ++k)
      acc += p.c[k] * monomial_fourier((int)k, p.lo, p.hi, freq);
  return acc;
}

double PiecewiseFn::total_variation() const {
  // upper bound: endpoint jumps to zero plus (hi-lo) * max |p'| per piece
  double tv = 0.0;
  for (const auto& p : pieces_) {
    tv += std::abs(poly_eval(p.c, p.lo));
    tv += std::abs(poly_eval(p.c, p.hi)); // polynomial value = inside limit
    double ymax = std::max(std::abs(p.lo), std::abs(p.hi));
    double dmax = 0.0, ypow = 1.0;
    for (std::size_t k = 1; k < p.c.size(); ++k) {
      dmax += (double)k * std::abs(p.c[k]) * ypow;
      ypow *= ymax;
    }
    tv += (p.hi - p.lo) * dmax;
  }
  return tv;
}

double PiecewiseFn::abs_integral_bound() const {
  double acc = 0.0;
  for (const auto& p : pieces_) {
    double ymax = std::max(std::abs(p.lo), std::abs(p.hi));
    double mx = 0.0, ypow = 1.0;
    for (std::size_t k = 0; k < p.c.size(); ++k) {
      mx += std::abs(p.c[k]) * ypow;
      ypow *= ymax;
    }
    acc += (p.hi - p.lo) * mx;
  }
  return acc;
}

PiecewiseFn convolve_indicator(const Window& w1d, const PiecewiseFn& h) {
  if (w1d.dim() != 1) throw std::invalid_argument("convolve_indicator: window must be 1-D");
  if (h.empty() || w1d.empty()) return PiecewiseFn::zero();

  // antiderivative H of h as interval list with constant tails
  struct HPiece {
    double lo, hi;
    std::vector<cdouble> c; // H on [lo, hi)
  };
  std::vector<HPiece> H;
  cdouble cum(0);
  for (const auto& p : h.pieces()) {
    // antiderivative of the piece polynomial
    std::vector<cdouble> P(p.c.size() + 1, cdouble(0));
    for (std::size_t k = 0; k < p.c.size(); ++k) P[k + 1] = p.c[k] / (double)(k + 1);
    cdouble at_lo = poly_eval(P, p.lo);
    HPiece hp;
    hp.lo = p.lo;
    hp.hi = p.hi;
    hp.c = P;
    hp.c[0] += cum - at_lo; // continuity
    cum += poly_eval(P, p.hi) - at_lo;
    H.push_back(std::move(hp));
  }
  const double h_lo = h.pieces().front().lo, h_hi = h.pieces().back().hi;
  const cdouble h_total = cum;

  // evaluate H(x) symbolically as a polynomial valid near x
  auto H_poly_at = [&](double x) -> std::vector<cdouble> {
    if (x < h_lo) return {};             // zero
    if (x >= h_hi) return {h_total};     // constant tail
    for (const auto& hp : H)
      if (x >= hp.lo && x < hp.hi) return hp.c;
    return {h_total};
  };

  // breakpoints of the result: window edges plus h knots
  std::set<double> knotset;
  std::vector<std::pair<double, double>> boxes;
  for (const auto& b : w1d.boxes())
    boxes.emplace_back(b.lo[0].to_double(), b.hi[0].to_double());
  std::vector<double> hknots = h.breakpoints();
  hknots.push_back(h_lo);
  hknots.push_back(h_hi);
  for (const auto& [a, bnd] : boxes)
    for (double t : hknots) {
      knotset.insert(a + t);
      knotset.insert(bnd + t);
    }
  std::vector<double> knots(knotset.begin(), knotset.end());

  std::vector<PolyPiece> out;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double lo = knots[i], hi = knots[i + 1];
    if (!(hi > lo + 1e-15)) continue;
    double mid = 0.5 * (lo + hi);
    std::vector<cdouble> sum;
    for (const auto& [a, bnd] : boxes) {
      // e(y) += H(y - a) - H(y - b)
      std::vector<cdouble> ha = H_poly_at(mid - a);
      std::vector<cdouble> hb = H_poly_at(mid - bnd);
      if (!ha.empty()) sum = poly_add(sum, poly_shift(ha, a));
      if (!hb.empty()) {
        std::vector<cdouble> neg = poly_shift(hb, bnd);
        for (auto& v : neg) v = -v;
        sum = poly_add(sum, neg);
      }
    }
    if (sum.empty() || poly_is_zero(sum)) continue;
    // drop numerically-zero pieces produced outside the support
    cdouble probe = poly_eval(sum, mid);
    double scale = 0.0;
    for (const auto& v : sum) scale += std::abs(v);
    if (std::abs(probe) < 1e-13 * (1.0 + scale) && std::abs(poly_eval(sum, lo)) < 1e-13 * (1.0 + scale))
      continue;
    PolyPiece np;
    np.lo = lo;
    np.hi = hi;
    np.c = std::move(sum);
    out.push_back(np);
  }
  return PiecewiseFn::from_pieces(std::move(out));
}

} // namespace qcdiff
