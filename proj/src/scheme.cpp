#include "qcdiff/scheme.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qcdiff {

Scalar scalar_from_double(double v, bool exact_mode) {
  if (!exact_mode) return Scalar::fp(v);
  if (!std::isfinite(v)) throw std::invalid_argument("scalar_from_double: non-finite value");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v); // shortest round-trip form
  return Scalar::exact(Rat::from_string(std::string_view(buf, res.ptr - buf)));
}

Region Region::box1d(double lo, double hi, bool exact_mode) {
  Region r;
  r.lo.push_back(scalar_from_double(lo, exact_mode));
  r.hi.push_back(scalar_from_double(hi, exact_mode));
  return r;
}

Region Region::centered(std::size_t d, double radius, bool exact_mode) {
  Region r;
  for (std::size_t i = 0; i < d; ++i) {
    r.lo.push_back(scalar_from_double(-radius, exact_mode));
    r.hi.push_back(scalar_from_double(radius, exact_mode));
  }
  return r;
}

double Region::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i].to_double() - lo[i].to_double();
  return v;
}

bool Region::contains(const ScalarVec& x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i].cmp(lo[i]) < 0 || hi[i].cmp(x[i]) < 0) return false;
  return true;
}

Scheme Scheme::fibonacci() {
  // tau = (1+sqrt5)/2; columns (1,1) and (tau, 1-tau)
  Scheme s;
  s.d_ = s.e_ = 1;
  s.exact_ = true;
  s.root_ = 5;
  s.name_ = "fibonacci";
  Rat half(1, 2);
  Scalar tau = Scalar::exact(half, half, 5);
  Scalar one = Scalar::exact_int(1);
  s.basis_ = ScalarMat(2, 2);
  s.basis_.at(0, 0) = one;
  s.basis_.at(0, 1) = tau;
  s.basis_.at(1, 0) = one;
  s.basis_.at(1, 1) = one - tau;
  s.finish_init();
  return s;
}

Scheme Scheme::silver_mean() {
  // lambda = 1+sqrt2; columns (1,1) and (lambda, 1-sqrt2)
  Scheme s;
  s.d_ = s.e_ = 1;
  s.exact_ = true;
  s.root_ = 2;
  s.name_ = "silver_mean";
  Scalar lam = Scalar::exact(Rat(1), Rat(1), 2);
  Scalar conj = Scalar::exact(Rat(1), Rat(-1), 2);
  Scalar one = Scalar::exact_int(1);
  s.basis_ = ScalarMat(2, 2);
  s.basis_.at(0, 0) = one;
  s.basis_.at(0, 1) = lam;
  s.basis_.at(1, 0) = one;
  s.basis_.at(1, 1) = conj;
  s.finish_init();
  return s;
}

Scheme Scheme::custom(std::size_t d, std::size_t e,
                      const std::vector<std::vector<double>>& rows) {
  Scheme s;
  s.d_ = d;
  s.e_ = e;
  s.exact_ = false;
  s.name_ = "custom";
  std::size_t n = d + e;
  if (rows.size() != n) throw std::invalid_argument("scheme.matrix: expected d+e rows");
  s.basis_ = ScalarMat(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw std::invalid_argument("scheme.matrix: expected d+e columns");
    for (std::size_t j = 0; j < n; ++j) s.basis_.at(i, j) = Scalar::fp(rows[i][j]);
  }
  s.notes_.push_back("custom scheme: internal projection density not verifiable, "
                     "results assume it; membership uses 1e-9 tolerance reporting");
  s.finish_init();
  return s;
}

Scheme Scheme::custom_exact(std::size_t d, std::size_t e, ScalarMat basis, std::int64_t root) {
  if (root < 0) throw std::invalid_argument("scheme.root: must be nonnegative");
  for (std::int64_t p = 2; p * p <= root; ++p)
    if (root % (p * p) == 0)
      throw std::invalid_argument("scheme.root: must be square-free");
  Scheme s;
  s.d_ = d;
  s.e_ = e;
  s.exact_ = true;
  s.root_ = root;
  s.name_ = "custom";
  if (basis.rows() != d + e || basis.cols() != d + e)
    throw std::invalid_argument("scheme.matrix: expected (d+e)x(d+e)");
  s.basis_ = std::move(basis);
  s.finish_init();
  return s;
}

void Scheme::finish_init() {
  std::size_t n = d_ + e_;
  try {
    basis_inv_ = basis_.inverse();
  } catch (const std::domain_error&) {
    throw std::invalid_argument("scheme.matrix: basis is singular");
  }
  Scalar det = basis_.det();
  covol_ = det.sign() < 0 ? -det : det;

  // The physical projection must be injective on the lattice, i.e. no
  // nonzero integer vector may project to physical zero.
  if (exact_) {
    // split each physical row into rational and sqrt parts; an integer
    // kernel vector must kill both, so test the stacked rational matrix
    std::vector<std::vector<Rat>> rows;
    for (std::size_t i = 0; i < d_; ++i) {
      std::vector<Rat> ra(n), rb(n);
      for (std::size_t j = 0; j < n; ++j) {
        ra[j] = basis_.at(i, j).rat_part();
        rb[j] = basis_.at(i, j).irr_part();
      }
      rows.push_back(ra);
      rows.push_back(rb);
    }
    if (has_nonzero_rational_kernel(rows, n))
      throw std::invalid_argument(
          "scheme.matrix: physical projection is not injective on the lattice");
  } else {
    // heuristic search over small integer vectors
    std::vector<std::int64_t> v(n, -6);
    while (true) {
      bool zero = true;
      for (auto x : v) zero = zero && x == 0;
      if (!zero) {
        double worst = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += basis_.at(i, j).to_double() * (double)v[j];
          worst = std::max(worst, std::abs(acc));
        }
        if (worst < 1e-9)
          throw std::invalid_argument(
              "scheme.matrix: physical projection is not injective on the lattice");
      }
      std::size_t k = 0;
      while (k < n && v[k] == 6) { v[k] = -6; ++k; }
      if (k == n) break;
      ++v[k];
    }
  }
}

ScalarVec Scheme::physical(const Coords& c) const {
  ScalarVec full = basis_.matvec(c);
  return ScalarVec(full.begin(), full.begin() + d_);
}

ScalarVec Scheme::star(const Coords& c) const {
  ScalarVec full = basis_.matvec(c);
  return ScalarVec(full.begin() + d_, full.end());
}

LatticePoint Scheme::make_point(const Coords& c) const {
  LatticePoint p;
  p.coords = c;
  ScalarVec full = basis_.matvec(c);
  p.physical.assign(full.begin(), full.begin() + d_);
  p.internal.assign(full.begin() + d_, full.end());
  for (const auto& s : p.physical) p.physical_d.push_back(s.to_double());
  for (const auto& s : p.internal) p.internal_d.push_back(s.to_double());
  return p;
}

std::vector<LatticePoint> enumerate_points(const Scheme& scheme, const Window& window,
                                           const Region& region, EnumerationStats* stats) {
  std::size_t d = scheme.physical_dim(), e = scheme.internal_dim(), n = d + e;
  if (window.dim() != e) throw std::invalid_argument("enumerate: window dimension != e");
  if (region.lo.size() != d) throw std::invalid_argument("enumerate: region dimension != d");
  std::vector<LatticePoint> out;
  auto hull = window.hull();
  if (!hull) return out;

  // target box in (physical x internal) coordinates, as doubles
  std::vector<double> tlo(n), thi(n);
  for (std::size_t i = 0; i < d; ++i) {
    tlo[i] = region.lo[i].to_double();
    thi[i] = region.hi[i].to_double();
  }
  for (std::size_t i = 0; i < e; ++i) {
    tlo[d + i] = hull->lo[i].to_double();
    thi[d + i] = hull->hi[i].to_double();
  }

  std::vector<std::vector<double>> binv(n, std::vector<double>(n));
  std::vector<std::vector<double>> b(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      binv[i][j] = scheme.basis_inverse().at(i, j).to_double();
      b[i][j] = scheme.basis().at(i, j).to_double();
    }

  // integer ranges per coordinate from the corners of the target box
  std::vector<double> clo(n, INFINITY), chi(n, -INFINITY);
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    std::vector<double> corner(n);
    for (std::size_t i = 0; i < n; ++i) corner[i] = (mask >> i) & 1 ? thi[i] : tlo[i];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += binv[i][j] * corner[j];
      clo[i] = std::min(clo[i], acc);
      chi[i] = std::max(chi[i], acc);
    }
  }
  std::vector<std::int64_t> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = (std::int64_t)std::floor(clo[i] - 1.0);
    hi[i] = (std::int64_t)std::ceil(chi[i] + 1.0);
  }

  // odometer over the outer n-1 coordinates; the last coordinate's range is
  // tightened against every output constraint before the exact filter runs
  Coords c(n, 0);
  std::vector<std::int64_t> cur(n);
  for (std::size_t i = 0; i + 1 < n; ++i) cur[i] = lo[i];
  bool outer_done = n == 1;
  while (true) {
    double llo = (double)lo[n - 1], lhi = (double)hi[n - 1];
    for (std::size_t j = 0; j < n; ++j) {
      double coeff = b[j][n - 1];
      if (std::abs(coeff) < 1e-12) continue;
      double fixed = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) fixed += b[j][k] * (double)cur[k];
      double a = (tlo[j] - fixed) / coeff, bnd = (thi[j] - fixed) / coeff;
      if (a > bnd) std::swap(a, bnd);
      llo = std::max(llo, a);
      lhi = std::min(lhi, bnd);
    }
    std::int64_t from = (std::int64_t)std::floor(llo - 1.0);
    std::int64_t to = (std::int64_t)std::ceil(lhi + 1.0);
    for (std::int64_t v = from; v <= to; ++v) {
      for (std::size_t k = 0; k + 1 < n; ++k) c[k] = cur[k];
      c[n - 1] = v;
      if (stats) ++stats->candidates_checked;
      LatticePoint p = scheme.make_point(c);
      if (!region.contains(p.physical)) continue;
      if (stats && !scheme.exact() && window.boundary_distance(p.internal) < 1e-9)
        ++stats->near_boundary;
      if (!window.contains(p.internal)) continue;
      out.push_back(std::move(p));
    }
    if (outer_done) break;
    std::size_t k = 0;
    while (k + 1 < n && cur[k] == hi[k]) { cur[k] = lo[k]; ++k; }
    if (k + 1 >= n) break;
    ++cur[k];
  }

  std::sort(out.begin(), out.end(), [](const LatticePoint& x, const LatticePoint& y) {
    for (std::size_t i = 0; i < x.physical.size(); ++i) {
      int cpp = x.physical[i].cmp(y.physical[i]);
      if (cpp != 0) return cpp < 0;
    }
    return x.coords < y.coords;
  });
  return out;
}

double density(const Scheme& scheme, const Window& window) {
  return (window.measure() / scheme.covolume()).to_double();
}

double min_gap(const std::vector<LatticePoint>& pts, std::size_t d) {
  if (pts.size() < 2) throw std::invalid_argument("min_gap: need at least two points");
  if (d == 1) {
    std::vector<double> xs;
    xs.reserve(pts.size());
    for (const auto& p : pts) xs.push_back(p.physical_d[0]);
    std::sort(xs.begin(), xs.end());
    double best = INFINITY;
    for (std::size_t i = 1; i < xs.size(); ++i) best = std::min(best, xs[i] - xs[i - 1]);
    return best;
  }
  double best = INFINITY;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double t = pts[i].physical_d[k] - pts[j].physical_d[k];
        acc += t * t;
      }
      best = std::min(best, std::sqrt(acc));
    }
  return best;
}

double max_gap(const std::vector<LatticePoint>& pts, std::size_t d, const Region& region,
               std::size_t grid_steps) {
  if (pts.size() < 2) throw std::invalid_argument("max_gap: need at least two points");
  if (d == 1) {
    std::vector<double> xs;
    xs.reserve(pts.size());
    for (const auto& p : pts) xs.push_back(p.physical_d[0]);
    std::sort(xs.begin(), xs.end());
    double best = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) best = std::max(best, xs[i] - xs[i - 1]);
    return best;
  }
  // largest empty ball radius, coarse grid scan
  std::vector<double> lo(d), step(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = region.lo[i].to_double();
    step[i] = (region.hi[i].to_double() - lo[i]) / (double)grid_steps;
  }
  double best = 0.0;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    std::vector<double> g(d);
    for (std::size_t i = 0; i < d; ++i) g[i] = lo[i] + step[i] * (double)idx[i];
    double nearest = INFINITY;
    for (const auto& p : pts) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double t = g[k] - p.physical_d[k];
        acc += t * t;
      }
      nearest = std::min(nearest, acc);
    }
    best = std::max(best, std::sqrt(nearest));
    std::size_t k = 0;
    while (k < d && idx[k] == grid_steps) { idx[k] = 0; ++k; }
    if (k == d) break;
    ++idx[k];
  }
  return best;
}

void VanHoveSeq::validate() const {
  if (radii.empty()) throw std::invalid_argument("vanhove.radii: must be nonempty");
  double prev = 0.0;
  for (double r : radii) {
    if (!(r > prev))
      throw std::invalid_argument("vanhove.radii: must be positive and strictly increasing");
    prev = r;
  }
}

Region VanHoveSeq::box(std::size_t n, bool exact_mode) const {
  if (n >= radii.size()) throw std::out_of_range("vanhove: index out of range");
  return Region::centered(dim, radii[n], exact_mode);
}

double VanHoveSeq::volume(std::size_t n) const {
  if (n >= radii.size()) throw std::out_of_range("vanhove: index out of range");
  return std::pow(2.0 * radii[n], (double)dim);
}

double thick_boundary_ratio(const VanHoveSeq& seq, std::size_t n, double k_halfwidth) {
  if (k_halfwidth < 0) throw std::invalid_argument("thick_boundary_ratio: negative halfwidth");
  if (n >= seq.radii.size()) throw std::out_of_range("vanhove: index out of range");
  double r = seq.radii[n];
  double outer = std::pow(2.0 * (r + k_halfwidth), (double)seq.dim);
  double inner = std::pow(std::max(2.0 * (r - k_halfwidth), 0.0), (double)seq.dim);
  return (outer - inner) / std::pow(2.0 * r, (double)seq.dim);
}

} // namespace qcdiff
