#include "qcdiff/diffract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace qcdiff {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double checked_volume(const Region& dn) {
  double vol = dn.volume();
  if (!(vol > 0.0)) throw std::invalid_argument("diffract: averaging region has zero volume");
  return vol;
}

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// chunked worker pool; chunk boundaries depend only on (count, threads)
void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t)>& body) {
  std::size_t t = std::min(threads == 0 ? 1 : threads, count);
  if (t <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < t; ++w) {
    std::size_t lo = count * w / t, hi = count * (w + 1) / t;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// solve M x = b in place by Gaussian elimination with partial pivoting
std::vector<double> solve_dense(std::vector<std::vector<double>> m, std::vector<double> b) {
  std::size_t n = b.size();
  double scale = 1.0;
  for (const auto& row : m)
    for (double v : row) scale = std::max(scale, std::abs(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
    if (std::abs(m[piv][col]) < 1e-10 * scale)
      throw std::invalid_argument(
          "fit_background: rank-deficient design (k grid resonant with candidates)");
    std::swap(m[col], m[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t i = col + 1; i < n; ++i) {
      double f = m[i][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m[i][j] -= f * m[col][j];
      b[i] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= m[i][j] * x[j];
    x[i] = acc / m[i][i];
  }
  return x;
}

} // namespace

cdouble fourier_window(const PiecewiseFn& fn, const Window& window, double freq) {
  return fn.restricted(window).fourier(freq);
}

double pp_intensity(const DualScheme& dual, const PiecewiseFn& mean_fn, const Window& window,
                    const Coords& dual_coords) {
  if (dual_coords.size() != dual.lattice().total_dim())
    throw std::invalid_argument("pp_intensity: character coordinates have the wrong dimension");
  LatticePoint chi = dual.lattice().make_point(dual_coords);
  cdouble hat = fourier_window(mean_fn, window, chi.internal_d[0]);
  double covol = dual.parent().covolume().to_double();
  return std::norm(hat) / (covol * covol);
}

cdouble ag_theoretical(const Envelope& env, const Scheme& scheme, const Window& window,
                       const Coords& g, std::string* note) {
  if (!env.dset.contains(g)) {
    if (note) *note = "lag outside the dependency set; coefficient is zero";
    return cdouble(0.0);
  }
  const PiecewiseFn* cg = env.cov_for(g);
  if (cg == nullptr || cg->empty()) return cdouble(0.0);
  Window overlap = window.intersect(window.translated(scheme.star(g)));
  if (overlap.empty()) return cdouble(0.0);
  return cg->restricted(overlap).integral() / scheme.covolume().to_double();
}

const AcRow* AcCoefficients::find(const Coords& g) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), g,
                             [](const AcRow& r, const Coords& c) { return r.g < c; });
  if (it == rows.end() || it->g != g) return nullptr;
  return &*it;
}

AcCoefficients theoretical_coefficients(const Envelope& env, const Scheme& scheme,
                                        const Window& window) {
  AcCoefficients out;
  out.provenance = "theoretical";
  for (const auto& g : env.dset.elems()) {
    AcRow row;
    row.g = g;
    row.g_phys = scheme.make_point(g).physical_d;
    row.a = ag_theoretical(env, scheme, window, g);
    out.rows.push_back(std::move(row));
  }
  return out;
}

double ac_density(const AcCoefficients& coeffs, const std::vector<double>& k) {
  double total_abs = 0.0;
  for (const auto& row : coeffs.rows) {
    const AcRow* mirror = coeffs.find(coords_neg(row.g));
    if (mirror == nullptr || std::abs(mirror->a - std::conj(row.a)) > 1e-12)
      throw std::invalid_argument("ac_density: coefficient table is not Hermitian");
    total_abs += std::abs(row.a);
  }
  cdouble acc(0.0);
  for (const auto& row : coeffs.rows) {
    double theta = -kTwoPi * dot(k, row.g_phys);
    acc += row.a * cdouble(std::cos(theta), std::sin(theta));
  }
  if (std::abs(acc.imag()) > 1e-12 * std::max(1.0, total_abs))
    throw std::logic_error("ac_density: imaginary residue survived the Hermitian sum");
  return acc.real();
}

std::vector<double> periodogram(const WeightedComb& comb, const Region& dn,
                                const std::vector<std::vector<double>>& k_list,
                                std::size_t threads) {
  double vol = checked_volume(dn);
  const PointSet& sup = *comb.support;
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < sup.size(); ++i)
    if (dn.contains(sup[i].physical)) sites.push_back(i);

  std::vector<double> out(k_list.size(), 0.0);
  parallel_chunks(k_list.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ki = lo; ki < hi; ++ki) {
      const auto& k = k_list[ki];
      KahanSum re, im;
      for (std::size_t i : sites) {
        double theta = -kTwoPi * dot(k, sup[i].physical_d);
        double c = std::cos(theta), s = std::sin(theta);
        cdouble w = comb.weights[i];
        re.add(w.real() * c - w.imag() * s);
        im.add(w.real() * s + w.imag() * c);
      }
      out[ki] = (re.value() * re.value() + im.value() * im.value()) / vol;
    }
  });
  return out;
}

DiffractionReport measure_peaks_and_background(const FieldSampler& sampler, const Scheme& scheme,
                                               const Window& window, const Region& dn,
                                               const std::vector<FourierModulePoint>& peak_list,
                                               const std::vector<std::vector<double>>& k_grid,
                                               std::size_t num_seeds, std::uint64_t base_seed,
                                               std::size_t threads) {
  if (num_seeds == 0) throw std::invalid_argument("diffract: need at least one seed");
  double vol = checked_volume(dn);

  Window eff = sampler.effective_window(scheme, window);
  auto support = PointSet::build(enumerate_points(scheme, eff, dn));
  PiecewiseFn mean = sampler.mean_fn(scheme, window);

  std::vector<std::vector<double>> all_k;
  all_k.reserve(peak_list.size() + k_grid.size());
  for (const auto& p : peak_list) all_k.push_back(p.chi);
  for (const auto& k : k_grid) all_k.push_back(k);

  std::vector<double> det = periodogram(expectation_comb(mean, support), dn, all_k, threads);

  std::vector<std::vector<double>> slot(num_seeds);
  parallel_chunks(num_seeds, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto comb = sampler.sample(scheme, window, support, base_seed + i);
      slot[i] = periodogram(comb, dn, all_k, 1);
    }
  });

  DiffractionReport rep;
  rep.scheme_name = scheme.name();
  rep.sampler_kind = sampler.kind();
  rep.region_volume = vol;
  rep.support_size = support->size();
  rep.seeds = num_seeds;

  DualScheme dual = annihilator(scheme);
  for (std::size_t pi = 0; pi < peak_list.size(); ++pi) {
    DiffractionReport::PeakRow row;
    row.point = peak_list[pi];
    row.predicted = pp_intensity(dual, mean, eff, peak_list[pi].dual_coords);
    KahanSum acc;
    for (std::size_t i = 0; i < num_seeds; ++i) acc.add(slot[i][pi] / vol);
    row.measured = acc.value() / (double)num_seeds;
    row.rel_error = row.predicted > 0.0 ? (row.measured - row.predicted) / row.predicted : 0.0;
    rep.peaks.push_back(std::move(row));
  }

  auto env = sampler.envelope(scheme, window);
  AcCoefficients coeffs;
  if (env.has_value()) {
    coeffs = theoretical_coefficients(*env, scheme, eff);
  } else {
    rep.notes.push_back("sampler provides no envelope; predicted background left at zero");
  }
  for (std::size_t gi = 0; gi < k_grid.size(); ++gi) {
    std::size_t ki = peak_list.size() + gi;
    DiffractionReport::BackgroundRow row;
    row.k = k_grid[gi];
    row.predicted = env.has_value() ? ac_density(coeffs, k_grid[gi]) : 0.0;
    KahanSum acc;
    for (std::size_t i = 0; i < num_seeds; ++i) acc.add(slot[i][ki] - det[ki]);
    row.measured = acc.value() / (double)num_seeds;
    rep.background.push_back(std::move(row));
  }
  return rep;
}

BackgroundFit fit_background(const std::vector<std::vector<double>>& k_grid,
                             const std::vector<double>& values,
                             const std::vector<Coords>& candidates, const Scheme& scheme,
                             double noise_floor_frac) {
  if (k_grid.size() != values.size())
    throw std::invalid_argument("fit_background: grid and value counts differ");
  if (candidates.empty()) throw std::invalid_argument("fit_background: no candidate lags");
  if (k_grid.size() < 2 * candidates.size())
    throw std::invalid_argument(
        "fit_background: need at least twice as many grid points as candidates");

  std::vector<Coords> cands = candidates;
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  bool has_zero = false;
  std::vector<Coords> reps; // lex-larger member of each +-g pair
  for (const auto& g : cands) {
    if (coords_is_zero(g)) {
      has_zero = true;
      continue;
    }
    Coords r = std::max(g, coords_neg(g));
    if (std::find(reps.begin(), reps.end(), r) == reps.end()) reps.push_back(r);
  }

  std::size_t n = (has_zero ? 1 : 0) + 2 * reps.size();
  std::vector<std::vector<double>> phys;
  for (const auto& r : reps) phys.push_back(scheme.make_point(r).physical_d);

  // model: y(k) = A_0 + sum_p 2 Re(A_p) cos(theta_p) + 2 Im(A_p) sin(theta_p)
  auto design_row = [&](const std::vector<double>& k) {
    std::vector<double> x;
    x.reserve(n);
    if (has_zero) x.push_back(1.0);
    for (std::size_t p = 0; p < reps.size(); ++p) {
      double theta = kTwoPi * dot(k, phys[p]);
      x.push_back(2.0 * std::cos(theta));
      x.push_back(2.0 * std::sin(theta));
    }
    return x;
  };

  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    auto x = design_row(k_grid[ki]);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] += x[i] * values[ki];
      for (std::size_t j = i; j < n; ++j) m[i][j] += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m[i][j] = m[j][i];

  std::vector<double> beta = solve_dense(m, b);

  BackgroundFit fit;
  fit.coeffs.provenance = "empirical";
  double a0 = has_zero ? beta[0] : 0.0;
  if (has_zero) {
    AcRow row;
    row.g = Coords(scheme.total_dim(), 0);
    row.g_phys = std::vector<double>(scheme.physical_dim(), 0.0);
    row.a = a0;
    fit.coeffs.rows.push_back(std::move(row));
  }
  for (std::size_t p = 0; p < reps.size(); ++p) {
    cdouble a(beta[(has_zero ? 1 : 0) + 2 * p], beta[(has_zero ? 1 : 0) + 2 * p + 1]);
    AcRow pos{reps[p], phys[p], a};
    AcRow neg{coords_neg(reps[p]), scheme.make_point(coords_neg(reps[p])).physical_d,
              std::conj(a)};
    fit.coeffs.rows.push_back(std::move(pos));
    fit.coeffs.rows.push_back(std::move(neg));
  }
  std::sort(fit.coeffs.rows.begin(), fit.coeffs.rows.end(),
            [](const AcRow& x, const AcRow& y) { return x.g < y.g; });

  KahanSum rss;
  for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
    auto x = design_row(k_grid[ki]);
    double r = values[ki] - dot(x, beta);
    rss.add(r * r);
  }
  fit.rms_residual = std::sqrt(rss.value() / (double)k_grid.size());

  fit.noise_floor = noise_floor_frac * std::abs(a0);
  for (const auto& row : fit.coeffs.rows)
    if (std::abs(row.a) > fit.noise_floor) fit.support.push_back(row.g);
  return fit;
}

AmplitudeFn amplitude_from_mean(const PiecewiseFn& mean_fn, const Window& window) {
  PiecewiseFn restricted = mean_fn.restricted(window);
  double tv = restricted.total_variation();
  AmplitudeFn amp;
  amp.value = [restricted](const std::vector<double>& chi_star) {
    return std::abs(restricted.fourier(chi_star.at(0)));
  };
  amp.cutoff_radius = [tv](double t) {
    if (t <= 0.0) return std::numeric_limits<double>::infinity();
    return tv / (kTwoPi * t);
  };
  return amp;
}

} // namespace qcdiff
