#include "stages.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "qcdiff/autocorr.hpp"
#include "qcdiff/decomp.hpp"
#include "qcdiff/diffract.hpp"
#include "qcdiff/dual.hpp"

namespace qcdiff::cli {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct CsvFile {
  std::ofstream out;
  CsvFile(const std::filesystem::path& path, const std::string& hash,
          const std::vector<std::string>& columns) {
    out.open(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }
};

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<std::string> coord_columns(const std::string& prefix, std::size_t n) {
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < n; ++i) cols.push_back(prefix + std::to_string(i));
  return cols;
}

json window_to_json(const Window& w) {
  json boxes = json::array();
  for (const auto& b : w.boxes()) {
    json box = json::array();
    for (std::size_t i = 0; i < b.lo.size(); ++i)
      box.push_back({b.lo[i].to_double(), b.hi[i].to_double()});
    boxes.push_back(std::move(box));
  }
  return boxes;
}

// Shared state threaded through the stages of one invocation.
struct RunContext {
  const ExperimentConfig& cfg;
  const RunOptions& opt;
  std::ostream& log;
  std::filesystem::path out;
  std::uint64_t seed_base;
  json report;
  std::vector<std::string> strict_failures;
  bool verify_failed = false;

  double rmax() const { return cfg.radii.back(); }
  Region region(double r) const {
    return Region::centered(cfg.scheme.physical_dim(), r, cfg.scheme.exact());
  }
  DependencySet dset() const {
    if (cfg.partition_dset) return *cfg.partition_dset;
    if (auto d = cfg.sampler->dependency_set(cfg.scheme)) return *d;
    return DependencySet::from_elems({Coords(cfg.scheme.total_dim(), 0)});
  }
  Coords partition_g(const DependencySet& d) const {
    if (cfg.partition_g) return *cfg.partition_g;
    return d.elems().back(); // lex-largest element; 0 for the trivial set
  }
  std::vector<std::vector<double>> k_grid() const {
    std::vector<std::vector<double>> grid;
    for (std::size_t j = 0; j < cfg.k_count; ++j) {
      std::vector<double> k(cfg.scheme.physical_dim(), 0.0);
      k[0] = cfg.k_min + (cfg.k_max - cfg.k_min) * (double)j / (double)(cfg.k_count - 1);
      grid.push_back(std::move(k));
    }
    return grid;
  }
};

void stage_generate(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  auto pts = enumerate_points(s, ctx.cfg.window, ctx.region(ctx.rmax()));

  auto cols = coord_columns("n_", s.total_dim());
  for (auto& c : coord_columns("physical_", s.physical_dim())) cols.push_back(c);
  for (auto& c : coord_columns("internal_", s.internal_dim())) cols.push_back(c);
  CsvFile csv(ctx.out / "points.csv", ctx.cfg.hash_hex, cols);
  for (const auto& p : pts) {
    std::vector<std::string> row;
    for (auto c : p.coords) row.push_back(std::to_string(c));
    for (double v : p.physical_d) row.push_back(fmt17(v));
    for (double v : p.internal_d) row.push_back(fmt17(v));
    csv.row(row);
  }

  double vol = ctx.region(ctx.rmax()).volume();
  double measured = (double)pts.size() / vol;
  double predicted = density(s, ctx.cfg.window);
  ctx.report["points"] = {{"count", pts.size()},
                          {"region_radius", ctx.rmax()},
                          {"measured_density", measured},
                          {"predicted_density", predicted},
                          {"rel_error", std::abs(measured - predicted) / predicted}};
  ctx.log << "generate: " << pts.size() << " points, density " << measured << " vs "
          << predicted << "\n";
}

void stage_sample(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  Window eff = ctx.cfg.sampler->effective_window(s, ctx.cfg.window);
  auto sup = PointSet::build(enumerate_points(s, eff, ctx.region(ctx.rmax())));

  std::size_t n = std::min<std::size_t>(3, ctx.cfg.seed_count);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t seed = ctx.seed_base + i;
    auto comb = ctx.cfg.sampler->sample(s, ctx.cfg.window, sup, seed);
    auto cols = coord_columns("n_", s.total_dim());
    for (auto& c : coord_columns("physical_", s.physical_dim())) cols.push_back(c);
    for (auto& c : coord_columns("internal_", s.internal_dim())) cols.push_back(c);
    cols.push_back("re_weight");
    cols.push_back("im_weight");
    CsvFile csv(ctx.out / ("sample_" + std::to_string(seed) + ".csv"), ctx.cfg.hash_hex, cols);
    for (std::size_t p = 0; p < sup->size(); ++p) {
      std::vector<std::string> row;
      for (auto c : (*sup)[p].coords) row.push_back(std::to_string(c));
      for (double v : (*sup)[p].physical_d) row.push_back(fmt17(v));
      for (double v : (*sup)[p].internal_d) row.push_back(fmt17(v));
      row.push_back(fmt17(comb.weights[p].real()));
      row.push_back(fmt17(comb.weights[p].imag()));
      csv.row(row);
    }
  }
  ctx.report["sample"] = {{"support_points", sup->size()}, {"seeds_written", n}};
  ctx.log << "sample: wrote " << n << " seed files over " << sup->size() << " sites\n";
}

void stage_partition(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  DependencySet d = ctx.dset();
  Coords g = ctx.partition_g(d);
  Region reg = ctx.region(ctx.rmax());

  Partition part = partition(s, ctx.cfg.window, d, g, reg);
  PartitionCheck check = check_partition(part, s, ctx.cfg.window, d, reg);

  double vol = reg.volume();
  json cells = json::array();
  for (const auto& cell : part.cells) {
    bool sep = verify_cell_separation(cell, g, d);
    cells.push_back({{"coset", cell.coset},
                     {"level", cell.level},
                     {"representative", cell.representative},
                     {"window", window_to_json(cell.window)},
                     {"point_count", cell.points.size()},
                     {"density_estimate", (double)cell.points.size() / vol},
                     {"separation_ok", sep}});
  }
  json delta = json::array();
  for (const auto& v : part.family.delta) delta.push_back(v.to_double());
  json pj = {{"config_hash", ctx.cfg.hash_hex},
             {"scheme", s.name()},
             {"g", g},
             {"dset", d.elems()},
             {"k", part.sub.k},
             {"ell", part.family.ell},
             {"delta", std::move(delta)},
             {"cells", std::move(cells)},
             {"exact_cover", check.exact_cover},
             {"separation_ok", check.separation_ok},
             {"lattice_points", check.lattice_points},
             {"cell_points", check.cell_points}};
  if (!check.missing.empty()) pj["missing"] = check.missing;
  if (!check.extra.empty()) pj["extra"] = check.extra;
  if (!check.duplicated.empty()) pj["duplicated"] = check.duplicated;
  write_json(ctx.out / "partition.json", pj);

  ctx.report["partition"] = {{"cells", part.cells.size()},
                             {"exact_cover", check.exact_cover},
                             {"separation_ok", check.separation_ok},
                             {"points", check.lattice_points}};
  ctx.log << "partition: " << part.cells.size() << " cells over " << check.lattice_points
          << " points, exact_cover=" << (check.exact_cover ? "yes" : "no") << "\n";
}

void stage_autocorr(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  Window eff = ctx.cfg.sampler->effective_window(s, ctx.cfg.window);
  auto gs = candidate_differences(s, eff, ctx.cfg.candidate_radius);

  if (ctx.cfg.seed_count < 2) {
    ctx.report["autocorr"] = {{"skipped", "needs at least two seeds"}};
    ctx.log << "autocorr: skipped (needs at least two seeds)\n";
    return;
  }

  // integral pad: exact-mode regions keep small denominators
  double pad = 1.0;
  for (const auto& g : gs) {
    auto p = s.make_point(g);
    double norm = 0.0;
    for (double v : p.physical_d) norm = std::max(norm, std::abs(v));
    pad = std::max(pad, std::ceil(norm) + 1.0);
  }

  auto cols = coord_columns("g_", s.total_dim());
  for (auto& c : coord_columns("g_physical_", s.physical_dim())) cols.push_back(c);
  for (auto& c : {"re_eta", "im_eta", "re_Ag", "im_Ag", "stderr", "n"})
    cols.push_back(c);
  CsvFile csv(ctx.out / "autocorr.csv", ctx.cfg.hash_hex, cols);

  json summary = json::array();
  for (double r : ctx.cfg.radii) {
    auto sup = PointSet::build(enumerate_points(s, eff, ctx.region(r + pad)));
    auto ests = ag_empirical(*ctx.cfg.sampler, s, ctx.cfg.window, sup, ctx.region(r), gs,
                             ctx.cfg.seed_count, ctx.seed_base);
    for (const auto& est : ests) {
      std::vector<std::string> row;
      for (auto c : est.g) row.push_back(std::to_string(c));
      for (double v : s.make_point(est.g).physical_d) row.push_back(fmt17(v));
      row.push_back(fmt17(est.eta_mean.real()));
      row.push_back(fmt17(est.eta_mean.imag()));
      row.push_back(fmt17(est.eta_diff.real()));
      row.push_back(fmt17(est.eta_diff.imag()));
      row.push_back(fmt17(est.eta_diff_se));
      row.push_back(fmt17(r));
      csv.row(row);
    }
    if (r == ctx.cfg.radii.back()) {
      for (const auto& est : ests) {
        summary.push_back({{"g", est.g},
                           {"re_Ag", est.eta_diff.real()},
                           {"im_Ag", est.eta_diff.imag()},
                           {"stderr", est.eta_diff_se},
                           {"pairs", est.pairs},
                           {"consistent", est.consistent}});
        if (!est.consistent)
          ctx.strict_failures.push_back("autocorr: estimators disagree at a lag");
      }
    }
  }
  ctx.report["autocorr"] = {{"lags", gs.size()}, {"estimates", std::move(summary)}};
  ctx.log << "autocorr: " << gs.size() << " lags over " << ctx.cfg.radii.size()
          << " regions\n";
}

void stage_diffract(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  Window eff = ctx.cfg.sampler->effective_window(s, ctx.cfg.window);
  DualScheme dual = annihilator(s);
  AmplitudeFn amp = amplitude_from_mean(ctx.cfg.sampler->mean_fn(s, ctx.cfg.window), eff);

  Region k_range;
  for (std::size_t i = 0; i < s.physical_dim(); ++i) {
    k_range.lo.push_back(scalar_from_double(ctx.cfg.k_min, s.exact()));
    k_range.hi.push_back(scalar_from_double(ctx.cfg.k_max, s.exact()));
  }
  auto peaks = bragg_candidates(dual, k_range, amp, ctx.cfg.peak_threshold);
  auto grid = ctx.k_grid();

  auto rep = measure_peaks_and_background(*ctx.cfg.sampler, s, ctx.cfg.window,
                                          ctx.region(ctx.rmax()), peaks, grid,
                                          ctx.cfg.seed_count, ctx.seed_base, ctx.opt.threads);

  {
    auto cols = coord_columns("m_", s.total_dim());
    for (auto& c : coord_columns("chi_", s.physical_dim())) cols.push_back(c);
    for (auto& c : coord_columns("chi_star_", s.internal_dim())) cols.push_back(c);
    for (auto& c : {"predicted_intensity", "measured_intensity", "rel_error"})
      cols.push_back(c);
    CsvFile csv(ctx.out / "peaks.csv", ctx.cfg.hash_hex, cols);
    for (const auto& row : rep.peaks) {
      std::vector<std::string> cells;
      for (auto c : row.point.dual_coords) cells.push_back(std::to_string(c));
      for (double v : row.point.chi) cells.push_back(fmt17(v));
      for (double v : row.point.chi_star) cells.push_back(fmt17(v));
      cells.push_back(fmt17(row.predicted));
      cells.push_back(fmt17(row.measured));
      cells.push_back(fmt17(row.rel_error));
      csv.row(cells);
    }
  }
  {
    auto cols = coord_columns("k_", s.physical_dim());
    cols.push_back("predicted");
    cols.push_back("measured");
    CsvFile csv(ctx.out / "background.csv", ctx.cfg.hash_hex, cols);
    for (const auto& row : rep.background) {
      std::vector<std::string> cells;
      for (double v : row.k) cells.push_back(fmt17(v));
      cells.push_back(fmt17(row.predicted));
      cells.push_back(fmt17(row.measured));
      csv.row(cells);
    }
  }

  double pred_mean = 0.0, meas_mean = 0.0;
  std::size_t within = 0;
  for (const auto& row : rep.background) {
    pred_mean += row.predicted;
    meas_mean += row.measured;
    if (row.predicted > 0.0 && std::abs(row.measured - row.predicted) <= 0.1 * row.predicted)
      ++within;
  }
  pred_mean /= (double)rep.background.size();
  meas_mean /= (double)rep.background.size();

  json jpeaks = json::array();
  for (const auto& row : rep.peaks)
    jpeaks.push_back({{"dual_coords", row.point.dual_coords},
                      {"chi", row.point.chi},
                      {"predicted", row.predicted},
                      {"measured", row.measured},
                      {"rel_error", row.rel_error}});
  json jd = {{"peaks", std::move(jpeaks)},
             {"background", {{"predicted_mean", pred_mean},
                             {"measured_grid_mean", meas_mean},
                             {"within_10pct_fraction",
                              (double)within / (double)rep.background.size()}}},
             {"support_points", rep.support_size},
             {"seeds", rep.seeds},
             {"notes", rep.notes}};

  auto cands = candidate_differences(s, eff, ctx.cfg.candidate_radius);
  if (grid.size() >= 2 * cands.size()) {
    std::vector<double> vals;
    for (const auto& row : rep.background) vals.push_back(row.measured);
    auto fit = fit_background(grid, vals, cands, s);
    json jfit = {{"support", fit.support},
                 {"noise_floor", fit.noise_floor},
                 {"rms_residual", fit.rms_residual}};
    json jrows = json::array();
    for (const auto& row : fit.coeffs.rows)
      jrows.push_back({{"g", row.g}, {"re", row.a.real()}, {"im", row.a.imag()}});
    jfit["coefficients"] = std::move(jrows);
    jd["fit"] = std::move(jfit);
  } else {
    jd["fit"] = {{"skipped", "k grid smaller than twice the candidate count"}};
  }
  ctx.report["diffract"] = std::move(jd);

  if (!rep.peaks.empty() && rep.peaks[0].predicted > 0.0 &&
      std::abs(rep.peaks[0].rel_error) > 0.05)
    ctx.strict_failures.push_back("diffract: strongest peak off prediction by more than 5%");
  if (pred_mean > 0.0 && std::abs(meas_mean - pred_mean) > 0.1 * pred_mean)
    ctx.strict_failures.push_back("diffract: background grid mean off prediction by more than 10%");
  if (ctx.cfg.sampler_kind == "deterministic")
    for (const auto& row : rep.background)
      if (row.measured != 0.0) {
        ctx.strict_failures.push_back("diffract: deterministic background not exactly zero");
        break;
      }

  ctx.log << "diffract: " << rep.peaks.size() << " peaks, grid mean " << meas_mean << " vs "
          << pred_mean << "\n";
}

void stage_verify(RunContext& ctx) {
  const Scheme& s = ctx.cfg.scheme;
  json checks = json::array();
  auto add = [&](const std::string& name, bool pass, const std::string& witness) {
    checks.push_back({{"check", name}, {"pass", pass}, {"witness", witness}});
    ctx.log << (pass ? "PASS " : "FAIL ") << name;
    if (!pass && !witness.empty()) ctx.log << ": " << witness;
    ctx.log << "\n";
    if (!pass) ctx.verify_failed = true;
  };

  {
    DualScheme dual = annihilator(s);
    double worst = 0.0;
    std::string at;
    std::size_t n = s.total_dim();
    Coords m(n, 0), v(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::int64_t a = -2; a <= 2; ++a)
          for (std::int64_t b = -2; b <= 2; ++b) {
            std::fill(m.begin(), m.end(), 0);
            std::fill(v.begin(), v.end(), 0);
            m[i] = a;
            v[j] = b;
            double r = character_residual(dual, m, v);
            if (r > worst) {
              worst = r;
              at = "m[" + std::to_string(i) + "]=" + std::to_string(a) + " n[" +
                   std::to_string(j) + "]=" + std::to_string(b);
            }
          }
    bool pass = s.exact() ? worst == 0.0 : worst < 1e-9;
    add("character_residual", pass, pass ? "" : "residual " + fmt17(worst) + " at " + at);
  }

  {
    DependencySet d = ctx.dset();
    Coords g = ctx.partition_g(d);
    Region reg = ctx.region(std::min(ctx.rmax(), 500.0));
    Partition part = partition(s, ctx.cfg.window, d, g, reg);
    PartitionCheck check = check_partition(part, s, ctx.cfg.window, d, reg);
    std::string witness;
    auto cite = [&](const char* tag, const std::vector<Coords>& pts) {
      if (pts.empty()) return;
      witness += std::string(tag) + " (";
      for (std::size_t i = 0; i < pts[0].size(); ++i)
        witness += (i ? "," : "") + std::to_string(pts[0][i]);
      witness += ") ";
    };
    cite("missing", check.missing);
    cite("extra", check.extra);
    cite("duplicated", check.duplicated);
    add("partition_exact_cover", check.exact_cover, witness);
    add("cell_separation", check.separation_ok, "");
  }

  if (auto env = ctx.cfg.sampler->envelope(s, ctx.cfg.window)) {
    double defect = envelope_hermitian_defect(*env, s, 100);
    add("envelope_hermitian", defect < 1e-9, "defect " + fmt17(defect));
  } else {
    add("envelope_hermitian", true, "no envelope to check");
  }

  {
    std::vector<double> probe;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, ctx.cfg.radii.size()); ++i)
      probe.push_back(ctx.cfg.radii[i]);
    std::vector<double> mins, maxs;
    for (double r : probe) {
      auto pts = enumerate_points(s, ctx.cfg.window, ctx.region(r));
      mins.push_back(min_gap(pts, s.physical_dim()));
      maxs.push_back(max_gap(pts, s.physical_dim(), ctx.region(r)));
    }
    double dmin = *std::max_element(mins.begin(), mins.end()) -
                  *std::min_element(mins.begin(), mins.end());
    bool const_min = dmin < 1e-9;
    add("uniform_discreteness", const_min,
        const_min ? "" : "min gap drifts by " + fmt17(dmin));
    double worst_max = *std::max_element(maxs.begin(), maxs.end());
    double best_max = *std::min_element(maxs.begin(), maxs.end());
    bool bounded = worst_max > 0.0 && worst_max <= 1.5 * best_max;
    add("relative_density", bounded,
        bounded ? "" : "max gap grows from " + fmt17(best_max) + " to " + fmt17(worst_max));
  }

  {
    double r = ctx.cfg.radii.back();
    VanHoveSeq seq{s.physical_dim(), {r, 2.0 * r}};
    double ratio = thick_boundary_ratio(seq, 1, 1.0) / thick_boundary_ratio(seq, 0, 1.0);
    bool halves = std::abs(ratio - 0.5) < 0.1;
    add("thick_boundary_halving", halves, "ratio " + fmt17(ratio));
  }

  ctx.report["verify"] = std::move(checks);
}

} // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"generate", "sample",   "partition",
                                                 "autocorr", "diffract", "verify"};
  return names;
}

int run_stages(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  RunContext ctx{cfg, opt, log, opt.out_override.value_or(cfg.out_dir),
                 opt.seed_override.value_or(cfg.seed_base), json::object(), {}, false};
  std::filesystem::create_directories(ctx.out);

  ctx.report["config_hash"] = cfg.hash_hex;
  ctx.report["scheme"] = {{"name", cfg.scheme.name()},
                          {"covolume", cfg.scheme.covolume().to_double()},
                          {"density", density(cfg.scheme, cfg.window)}};
  ctx.report["sampler"] = cfg.sampler_kind;

  json ran = json::array();
  for (const auto& name : stage_names()) {
    if (!opt.stages.empty() && !opt.stages.count(name)) continue;
    if (name == "generate") stage_generate(ctx);
    else if (name == "sample") stage_sample(ctx);
    else if (name == "partition") stage_partition(ctx);
    else if (name == "autocorr") stage_autocorr(ctx);
    else if (name == "diffract") stage_diffract(ctx);
    else if (name == "verify") stage_verify(ctx);
    ran.push_back(name);
  }
  ctx.report["stages"] = std::move(ran);
  if (!ctx.strict_failures.empty()) ctx.report["strict_failures"] = ctx.strict_failures;
  write_json(ctx.out / "report.json", ctx.report);

  if (ctx.verify_failed) {
    log << "verification failed\n";
    return 3;
  }
  if (opt.strict && !ctx.strict_failures.empty()) {
    for (const auto& f : ctx.strict_failures) log << "strict: " << f << "\n";
    return 4;
  }
  return 0;
}

} // namespace qcdiff::cli
