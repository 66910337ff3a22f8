// Acceptance gate: one line per criterion, exit code = number of failures.
// Tolerances and run sizes are pinned here on purpose; do not read them
// from the environment.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "qcdiff/autocorr.hpp"
#include "qcdiff/decomp.hpp"
#include "qcdiff/diffract.hpp"
#include "qcdiff/dual.hpp"

using namespace qcdiff;

namespace {

int g_failures = 0;

void line(int idx, const char* name, bool pass, const std::string& detail, double secs) {
  std::printf("%s %d %-46s %s [%.1fs]\n", pass ? "PASS" : "FAIL", idx, name, detail.c_str(),
              secs);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

Window unit_window() {
  WBox b;
  b.lo = {Scalar::exact(Rat(0))};
  b.hi = {Scalar::exact(Rat(1))};
  return Window::from_boxes(1, {b});
}

std::vector<std::vector<double>> grid1d(double lo, double hi, std::size_t count) {
  std::vector<std::vector<double>> g;
  for (std::size_t j = 0; j < count; ++j)
    g.push_back({lo + (hi - lo) * (double)j / (double)(count - 1)});
  return g;
}

double grid_mean_measured(const DiffractionReport& rep) {
  double acc = 0.0;
  for (const auto& row : rep.background) acc += row.measured;
  return acc / (double)rep.background.size();
}

// criterion 3 hands its Bernoulli background level to criterion 8
double g_bernoulli_level = 0.0;

// 1. Point density over a large centered region matches measure(W)/covolume.
void criterion_density() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto pts = enumerate_points(fib, w, Region::centered(1, 500.0));
  double measured = (double)pts.size() / 1000.0;
  double want = density(fib, w);
  double rel = std::abs(measured - want) / want;
  double secs = seconds_since(t0);
  line(1, "density matches the projection formula", rel < 0.01 && secs < 1.0,
       fmt("rel_err=%.5f (tol 0.01)", rel), secs);
}

// 2. Constant weights: the ten strongest peaks match the dual-point formula.
void criterion_peaks() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto det = make_deterministic(0.5);

  DualScheme dual = annihilator(fib);
  AmplitudeFn amp = amplitude_from_mean(det->mean_fn(fib, w), w);
  auto cands = bragg_candidates(dual, Region::box1d(-0.001, 1.0), amp, 0.05);
  std::vector<FourierModulePoint> top(cands.begin(),
                                      cands.begin() + std::min<std::size_t>(10, cands.size()));

  auto rep = measure_peaks_and_background(*det, fib, w, Region::centered(1, 10000.0), top,
                                          grid1d(0.013, 0.987, 2), 1, 1);
  double worst = 0.0;
  double zero_peak = 0.0;
  for (const auto& row : rep.peaks) {
    worst = std::max(worst, std::abs(row.rel_error));
    if (row.point.dual_coords == Coords{0, 0}) zero_peak = row.measured;
  }
  double zero_rel = std::abs(zero_peak - 0.05) / 0.05;
  double secs = seconds_since(t0);
  line(2, "strongest peaks match the dual formula",
       top.size() == 10 && worst < 0.05 && zero_rel < 0.05 && secs < 30.0,
       fmt("worst_rel=%.5f zero_peak_rel=%.6f (tol 0.05)", worst, zero_rel), secs);
}

// 3. Independent Bernoulli(1/2) weights: background level p(1-p)*density,
//    read as the k-grid mean; empirical covariances vanish off lag zero.
void criterion_flat_background() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto bern = make_bernoulli(0.5);

  auto rep = measure_peaks_and_background(*bern, fib, w, Region::centered(1, 10000.0), {},
                                          grid1d(0.013, 0.987, 200), 50, 20000);
  double level = grid_mean_measured(rep);
  g_bernoulli_level = level;
  double want = 0.25 / std::sqrt(5.0);
  double rel = std::abs(level - want) / want;

  auto gs = candidate_differences(fib, w, 3.0);
  auto sup = PointSet::build(enumerate_points(fib, w, Region::centered(1, 10004.0)));
  auto ests = ag_empirical(*bern, fib, w, sup, Region::centered(1, 10000.0), gs, 50, 20000);
  bool lags_zero = true;
  for (const auto& est : ests) {
    if (coords_is_zero(est.g)) continue;
    if (std::abs(est.eta_diff) > 4.0 * est.eta_diff_se + 1e-12) lags_zero = false;
  }
  double secs = seconds_since(t0);
  line(3, "independent weights give a flat background",
       rel < 0.10 && lags_zero && secs < 300.0,
       fmt("grid_mean=%.5f want=%.5f rel=%.4f (tol 0.10)", level, want, rel), secs);
}

// 4. Two-tap moving average: the fitted background reproduces
//    2/sqrt5 + (2(tau-1)/sqrt5) cos(2 pi k (1+tau)) and nothing else.
void criterion_oscillating_background() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto ma = make_moving_average({{0, 0}, {1, 1}}, {1.0, 1.0}, 1.0);
  Window eff = ma->effective_window(fib, w);

  auto grid = grid1d(0.013, 0.987, 80);
  auto rep = measure_peaks_and_background(*ma, fib, w, Region::centered(1, 3000.0), {}, grid,
                                          200, 31000);
  std::vector<double> vals;
  for (const auto& row : rep.background) vals.push_back(row.measured);
  auto cands = candidate_differences(fib, eff, 3.0);
  auto fit = fit_background(grid, vals, cands, fib);

  const double a0 = 2.0 / std::sqrt(5.0);                        // 0.89443
  const double a1 = (std::sqrt(5.0) - 1.0) / 2.0 / std::sqrt(5.0); // 0.27639
  double gphys = fib.make_point({1, 1}).physical_d[0];             // 1+tau

  bool support_ok = fit.support == std::vector<Coords>{{-1, -1}, {0, 0}, {1, 1}};
  double spurious = 0.0;
  for (const auto& row : fit.coeffs.rows)
    if (!coords_is_zero(row.g) && row.g != Coords{1, 1} && row.g != Coords{-1, -1})
      spurious = std::max(spurious, std::abs(row.a));

  double dev = 0.0;
  for (const auto& k : grid1d(0.013, 0.987, 400)) {
    double fitted = ac_density(fit.coeffs, k);
    double closed = a0 + 2.0 * a1 * std::cos(2.0 * 3.141592653589793 * k[0] * gphys);
    dev = std::max(dev, std::abs(fitted - closed));
  }
  double secs = seconds_since(t0);
  line(4, "two-tap background oscillates as predicted",
       support_ok && spurious < 0.05 * a0 && dev < 0.10 * a0 && secs < 600.0,
       fmt("max_dev=%.5f (tol %.5f) spurious=%.5f", dev, 0.10 * a0, spurious), secs);
}

// 5. The coset-level partition covers the model set exactly and every cell
//    passes the pairwise separation predicate.
void criterion_partition() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  DependencySet d = DependencySet::from_elems({{-1, -1}, {0, 0}, {1, 1}});
  Region reg = Region::box1d(0.0, 1000.0);

  Partition part = partition(fib, w, d, {1, 1}, reg);
  PartitionCheck check = check_partition(part, fib, w, d, reg);
  bool cells_ok = true;
  for (const auto& cell : part.cells)
    if (!verify_cell_separation(cell, {1, 1}, d)) cells_ok = false;
  double secs = seconds_since(t0);
  line(5, "partition covers exactly and separates",
       check.exact_cover && check.separation_ok && cells_ok && secs < 5.0,
       fmt("points=%.0f cells=%.0f", (double)check.lattice_points, (double)part.cells.size()),
       secs);
}

// 6. Monte-Carlo moments match the declared mean/covariance envelopes at
//    every site and lag, and the envelopes are Hermitian.
void criterion_envelopes() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();

  // block translates need a window narrow enough that the copies stay disjoint
  WBox narrow;
  narrow.lo = {Scalar::exact(Rat(0))};
  narrow.hi = {Scalar::exact(Rat(3, 10))};
  Window block_w = Window::from_boxes(1, {narrow});

  std::vector<std::pair<std::unique_ptr<FieldSampler>, Window>> samplers;
  samplers.emplace_back(make_bernoulli(0.3), w);
  samplers.emplace_back(make_block({{0, 0}, {1, 1}}, {1.0, 2.0}, {{1.0, 0.5}, {0.5, 1.0}}),
                        block_w);
  samplers.emplace_back(make_shifted_window(Scalar::exact(Rat(0)), Scalar::exact(Rat(1)),
                                            ShiftDensity::uniform),
                        w);
  samplers.emplace_back(make_moving_average({{0, 0}, {1, 1}}, {1.0, 1.0}, 1.0), w);

  bool all_ok = true;
  double worst_pull = 0.0, worst_defect = 0.0;
  for (const auto& [sampler, base] : samplers) {
    auto env = sampler->envelope(fib, base);
    if (!env) {
      all_ok = false;
      continue;
    }
    worst_defect = std::max(worst_defect, envelope_hermitian_defect(*env, fib, 100));

    Window eff = sampler->effective_window(fib, base);
    auto pts = enumerate_points(fib, eff, Region::centered(1, 70.0));
    pts.resize(std::min<std::size_t>(pts.size(), 50));
    auto sup = PointSet::build(std::move(pts));

    auto stats = mc_moments(*sampler, fib, base, *sup, env->dset.elems(), 10000, 60000);
    for (std::size_t i = 0; i < sup->size(); ++i) {
      double want = env->mean.eval((*sup)[i].internal_d[0]).real();
      double gap = std::abs(stats.mean[i].real() - want);
      if (stats.mean_se[i] > 0.0)
        worst_pull = std::max(worst_pull, gap / stats.mean_se[i]);
      if (gap > 4.0 * stats.mean_se[i] + 1e-9) all_ok = false;
    }
    for (const auto& row : stats.cov_rows) {
      const PiecewiseFn* cg = env->cov_for(row.g);
      if (!cg) {
        all_ok = false;
        continue;
      }
      for (std::size_t m = 0; m < row.sites.size(); ++m) {
        double want = cg->eval((*sup)[row.sites[m]].internal_d[0]).real();
        double gap = std::abs(row.cov[m].real() - want);
        if (row.se[m] > 0.0) worst_pull = std::max(worst_pull, gap / row.se[m]);
        if (gap > 4.0 * row.se[m] + 1e-9) all_ok = false;
      }
    }
  }
  double secs = seconds_since(t0);
  line(6, "sampled moments match the declared envelopes",
       all_ok && worst_defect < 1e-9,
       fmt("worst_pull=%.2f (tol 4) hermitian_defect=%.1e", worst_pull, worst_defect), secs);
}

// 7. The eta-difference and covariance-sum estimators of A_g agree within
//    four combined standard errors on every candidate lag.
void criterion_estimators_agree() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto ma = make_moving_average({{0, 0}, {1, 1}}, {1.0, 1.0}, 1.0);
  Window eff = ma->effective_window(fib, w);

  auto gs = candidate_differences(fib, eff, 3.0);
  auto sup = PointSet::build(enumerate_points(fib, eff, Region::centered(1, 10004.0)));
  auto ests = ag_empirical(*ma, fib, w, sup, Region::centered(1, 10000.0), gs, 12, 70000);
  bool all_ok = true;
  double worst = 0.0;
  for (const auto& est : ests) {
    if (!est.consistent) all_ok = false;
    double se = std::sqrt(est.eta_diff_se * est.eta_diff_se + est.cov_sum_se * est.cov_sum_se);
    if (se > 0.0) worst = std::max(worst, std::abs(est.eta_diff - est.cov_sum) / se);
  }
  double secs = seconds_since(t0);
  line(7, "both covariance estimators agree", all_ok,
       fmt("lags=%.0f worst_gap=%.2fse (tol 4)", (double)ests.size(), worst), secs);
}

// 8. Weights read off one continuous path on the window: the diffuse part
//    stays an order below the Bernoulli level and shrinks as the region grows.
void criterion_path_weights() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto ou = make_ou_path(0.25, 0.35355339059327373, 0.5); // stationary site variance 1/4

  auto grid = grid1d(0.013, 0.987, 200);
  auto rep1 = measure_peaks_and_background(*ou, fib, w, Region::centered(1, 10000.0), {},
                                           grid, 50, 80000);
  auto rep2 = measure_peaks_and_background(*ou, fib, w, Region::centered(1, 20000.0), {},
                                           grid, 50, 80000);
  double b1 = grid_mean_measured(rep1);
  double b2 = grid_mean_measured(rep2);
  double secs = seconds_since(t0);
  line(8, "path weights leave no diffuse background",
       g_bernoulli_level > 0.0 && std::abs(b1) < 0.10 * g_bernoulli_level &&
           std::abs(b2) < std::abs(b1),
       fmt("level=%.6f (tol %.6f) doubled_region=%.6f", b1, 0.10 * g_bernoulli_level, b2),
       secs);
}

// 9. Structural suite: exact character residuals, constant minimal gap,
//    bounded maximal gap, boundary-to-volume ratio halving.
void criterion_structure() {
  auto t0 = std::chrono::steady_clock::now();
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  DualScheme dual = annihilator(fib);

  bool residuals_zero = true;
  for (std::int64_t i = 0; i < 2; ++i)
    for (std::int64_t j = 0; j < 2; ++j) {
      Coords m{0, 0}, n{0, 0};
      m[(std::size_t)i] = 1;
      n[(std::size_t)j] = 1;
      if (character_residual(dual, m, n) != 0.0) residuals_zero = false;
    }

  std::vector<double> mins, maxs;
  for (double r : {100.0, 200.0, 400.0}) {
    auto pts = enumerate_points(fib, w, Region::centered(1, r));
    mins.push_back(min_gap(pts, 1));
    maxs.push_back(max_gap(pts, 1, Region::centered(1, r)));
  }
  double min_spread = *std::max_element(mins.begin(), mins.end()) -
                      *std::min_element(mins.begin(), mins.end());
  double max_worst = *std::max_element(maxs.begin(), maxs.end());
  bool gaps_ok = min_spread < 1e-9 && max_worst < 2.0 * mins[0] + 1e-9;

  VanHoveSeq seq{1, {100.0, 200.0, 400.0}};
  bool halves = true;
  for (std::size_t n = 0; n + 1 < seq.radii.size(); ++n) {
    double ratio = thick_boundary_ratio(seq, n + 1, 1.0) / thick_boundary_ratio(seq, n, 1.0);
    if (std::abs(ratio - 0.5) > 1e-12) halves = false;
  }
  double secs = seconds_since(t0);
  line(9, "residuals, gaps and boundary ratios behave", residuals_zero && gaps_ok && halves,
       fmt("min_spread=%.1e max_gap=%.4f", min_spread, max_worst), secs);
}

} // namespace

int main() {
  criterion_density();
  criterion_peaks();
  criterion_flat_background();
  criterion_oscillating_background();
  criterion_partition();
  criterion_envelopes();
  criterion_estimators_agree();
  criterion_path_weights();
  criterion_structure();
  return g_failures;
}
