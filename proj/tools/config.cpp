#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qcdiff::cli {

using nlohmann::json;

namespace {

std::int64_t parse_int(const std::string& s, const std::string& field) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(field, "not an integer: '" + s + "'");
  return v;
}

// rational literal: "3", "-3/4" or "0.25"; decimals become exact tenths
Rat parse_rat(const std::string& raw, const std::string& field) {
  std::string s = raw;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::int64_t num = parse_int(s.substr(0, slash), field);
    std::int64_t den = parse_int(s.substr(slash + 1), field);
    if (den == 0) throw ConfigError(field, "zero denominator");
    return Rat(num, den);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.empty() || tail.size() > 15) throw ConfigError(field, "bad decimal: '" + s + "'");
    bool neg = !head.empty() && head[0] == '-';
    std::int64_t whole = head.empty() || head == "-" ? 0 : parse_int(head, field);
    std::int64_t frac = parse_int(tail, field);
    if (frac < 0) throw ConfigError(field, "bad decimal: '" + s + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < tail.size(); ++i) den *= 10;
    std::int64_t num = std::abs(whole) * den + frac;
    return Rat(neg || whole < 0 ? -num : num, den);
  }
  return Rat(parse_int(s, field));
}

// scalar literal: JSON number, rational string, or {"a":..,"b":..} meaning
// a + b*sqrt(root) in the scheme's quadratic field
Scalar parse_scalar(const json& v, const Scheme& scheme, const std::string& field) {
  if (v.is_number()) return scalar_from_double(v.get<double>(), scheme.exact());
  if (v.is_string()) {
    Rat r = parse_rat(v.get<std::string>(), field);
    return scheme.exact() ? Scalar::exact(r) : Scalar::fp(r.to_double());
  }
  if (v.is_object()) {
    if (!v.contains("a") || !v.contains("b"))
      throw ConfigError(field, "quadratic literal needs fields 'a' and 'b'");
    if (!scheme.exact() || scheme.root() == 0)
      throw ConfigError(field, "quadratic literal requires an exact scheme");
    Rat a = parse_rat(v.at("a").is_string() ? v.at("a").get<std::string>()
                                            : v.at("a").dump(),
                      field + ".a");
    Rat b = parse_rat(v.at("b").is_string() ? v.at("b").get<std::string>()
                                            : v.at("b").dump(),
                      field + ".b");
    return Scalar::exact(a, b, scheme.root());
  }
  throw ConfigError(field, "expected a number, rational string or {a,b} object");
}

const json& need(const json& j, const std::string& key, const std::string& field) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(field, "missing");
  return j.at(key);
}

double need_num(const json& j, const std::string& key, const std::string& field) {
  const json& v = need(j, key, field);
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field, "not finite");
  return d;
}

std::vector<double> num_list(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a nonempty array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(field, "expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Coords parse_coords(const json& v, std::size_t dim, const std::string& field) {
  if (!v.is_array() || v.size() != dim)
    throw ConfigError(field, "expected " + std::to_string(dim) + " integer coordinates");
  Coords c;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(field, "expected integers");
    c.push_back(e.get<std::int64_t>());
  }
  return c;
}

std::vector<Coords> parse_coords_list(const json& v, std::size_t dim, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a nonempty array");
  std::vector<Coords> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(parse_coords(v[i], dim, field + "[" + std::to_string(i) + "]"));
  return out;
}

Scheme parse_scheme(const json& j) {
  const json& s = need(j, "scheme", "scheme");
  if (s.contains("preset")) {
    std::string p = s.at("preset").get<std::string>();
    if (p == "fibonacci") return Scheme::fibonacci();
    if (p == "silver_mean") return Scheme::silver_mean();
    throw ConfigError("scheme.preset", "unknown preset '" + p + "'");
  }
  if (s.contains("custom")) {
    const json& c = s.at("custom");
    auto d = (std::size_t)need_num(c, "physical_dim", "scheme.custom.physical_dim");
    auto e = (std::size_t)need_num(c, "internal_dim", "scheme.custom.internal_dim");
    const json& rows = need(c, "rows", "scheme.custom.rows");
    if (!rows.is_array() || rows.size() != d + e)
      throw ConfigError("scheme.custom.rows", "expected " + std::to_string(d + e) + " rows");
    if (c.contains("root")) {
      std::int64_t root = c.at("root").get<std::int64_t>();
      ScalarMat m(d + e, d + e);
      for (std::size_t i = 0; i < d + e; ++i) {
        if (!rows[i].is_array() || rows[i].size() != d + e)
          throw ConfigError("scheme.custom.rows", "row " + std::to_string(i) + " has wrong size");
        for (std::size_t k2 = 0; k2 < d + e; ++k2) {
          const json& cell = rows[i][k2];
          std::string field = "scheme.custom.rows[" + std::to_string(i) + "]";
          if (cell.is_object()) {
            Rat a = parse_rat(cell.at("a").get<std::string>(), field);
            Rat b = parse_rat(cell.at("b").get<std::string>(), field);
            m.at(i, k2) = Scalar::exact(a, b, root);
          } else if (cell.is_string()) {
            m.at(i, k2) = Scalar::exact(parse_rat(cell.get<std::string>(), field));
          } else if (cell.is_number()) {
            m.at(i, k2) = scalar_from_double(cell.get<double>(), true);
          } else {
            throw ConfigError(field, "bad matrix entry");
          }
        }
      }
      return Scheme::custom_exact(d, e, std::move(m), root);
    }
    std::vector<std::vector<double>> m;
    for (std::size_t i = 0; i < d + e; ++i)
      m.push_back(num_list(rows[i], "scheme.custom.rows[" + std::to_string(i) + "]"));
    return Scheme::custom(d, e, m);
  }
  throw ConfigError("scheme", "needs 'preset' or 'custom'");
}

Window parse_window(const json& j, const Scheme& scheme) {
  const json& wj = need(j, "window", "window");
  if (!wj.is_array() || wj.empty()) throw ConfigError("window", "expected a nonempty box list");
  std::size_t e = scheme.internal_dim();
  std::vector<WBox> boxes;
  for (std::size_t b = 0; b < wj.size(); ++b) {
    std::string field = "window[" + std::to_string(b) + "]";
    const json& bj = wj[b];
    if (!bj.is_array() || bj.size() != e)
      throw ConfigError(field, "expected " + std::to_string(e) + " intervals");
    WBox box;
    for (const auto& iv : bj) {
      if (!iv.is_array() || iv.size() != 2) throw ConfigError(field, "interval needs [lo, hi]");
      box.lo.push_back(parse_scalar(iv[0], scheme, field));
      box.hi.push_back(parse_scalar(iv[1], scheme, field));
    }
    if (box.degenerate()) throw ConfigError(field, "degenerate interval (hi <= lo)");
    boxes.push_back(std::move(box));
  }
  try {
    return Window::from_boxes(e, std::move(boxes));
  } catch (const std::exception& ex) {
    throw ConfigError("window", ex.what());
  }
}

std::shared_ptr<FieldSampler> parse_sampler(const json& j, const Scheme& scheme,
                                            std::string& kind_out) {
  const json& s = need(j, "sampler", "sampler");
  std::string kind = need(s, "kind", "sampler.kind").get<std::string>();
  kind_out = kind;
  std::size_t n = scheme.total_dim();
  try {
    if (kind == "bernoulli") {
      double p = need_num(s, "p", "sampler.p");
      if (p < 0.0 || p > 1.0) throw ConfigError("sampler.p", "needs 0 <= p <= 1");
      return make_bernoulli(p);
    }
    if (kind == "gaussian")
      return make_gaussian(need_num(s, "mean", "sampler.mean"), need_num(s, "sd", "sampler.sd"));
    if (kind == "deterministic") return make_deterministic(need_num(s, "value", "sampler.value"));
    if (kind == "block") {
      auto trans = parse_coords_list(need(s, "translations", "sampler.translations"), n,
                                     "sampler.translations");
      auto mean = num_list(need(s, "mean", "sampler.mean"), "sampler.mean");
      const json& cj = need(s, "cov", "sampler.cov");
      if (!cj.is_array()) throw ConfigError("sampler.cov", "expected a matrix");
      std::vector<std::vector<double>> cov;
      for (const auto& row : cj) cov.push_back(num_list(row, "sampler.cov"));
      return make_block(std::move(trans), std::move(mean), std::move(cov));
    }
    if (kind == "shifted_window") {
      Scalar lo = parse_scalar(need(s, "lo", "sampler.lo"), scheme, "sampler.lo");
      Scalar hi = parse_scalar(need(s, "hi", "sampler.hi"), scheme, "sampler.hi");
      std::string d = need(s, "density", "sampler.density").get<std::string>();
      if (d != "uniform" && d != "tent")
        throw ConfigError("sampler.density", "expected 'uniform' or 'tent'");
      return make_shifted_window(lo, hi, d == "tent" ? ShiftDensity::tent : ShiftDensity::uniform);
    }
    if (kind == "moving_average") {
      auto stencil =
          parse_coords_list(need(s, "stencil", "sampler.stencil"), n, "sampler.stencil");
      auto coeffs = num_list(need(s, "coeffs", "sampler.coeffs"), "sampler.coeffs");
      return make_moving_average(std::move(stencil), std::move(coeffs),
                                 need_num(s, "mean", "sampler.mean"));
    }
    if (kind == "ou_path") {
      double frac = s.contains("max_step_fraction")
                        ? need_num(s, "max_step_fraction", "sampler.max_step_fraction")
                        : 1e-3;
      return make_ou_path(need_num(s, "rate", "sampler.rate"),
                          need_num(s, "volatility", "sampler.volatility"),
                          need_num(s, "mean", "sampler.mean"), frac);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    // factory rejected the parameters; still a config problem
    throw ConfigError("sampler", ex.what());
  }
  throw ConfigError("sampler.kind", "unknown kind '" + kind + "'");
}

} // namespace

std::string config_hash_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError("(syntax)", ex.what());
  }

  ExperimentConfig cfg;
  cfg.hash_hex = config_hash_hex(text);
  cfg.scheme = parse_scheme(j);
  cfg.window = parse_window(j, cfg.scheme);
  cfg.sampler = parse_sampler(j, cfg.scheme, cfg.sampler_kind);

  cfg.radii = num_list(need(need(j, "vanhove", "vanhove"), "radii", "vanhove.radii"),
                       "vanhove.radii");
  for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
    if (cfg.radii[i] <= 0.0) throw ConfigError("vanhove.radii", "radii must be positive");
    if (i > 0 && cfg.radii[i] <= cfg.radii[i - 1])
      throw ConfigError("vanhove.radii", "radii must be strictly increasing");
  }

  const json& kg = need(j, "k_grid", "k_grid");
  cfg.k_min = need_num(kg, "min", "k_grid.min");
  cfg.k_max = need_num(kg, "max", "k_grid.max");
  double count = need_num(kg, "count", "k_grid.count");
  if (count < 2.0 || count != std::floor(count))
    throw ConfigError("k_grid.count", "needs an integer >= 2");
  cfg.k_count = (std::size_t)count;
  if (!(cfg.k_min < cfg.k_max)) throw ConfigError("k_grid", "needs min < max");

  if (j.contains("peaks")) {
    cfg.peak_threshold = need_num(j.at("peaks"), "threshold", "peaks.threshold");
    if (cfg.peak_threshold < 0.0) throw ConfigError("peaks.threshold", "must be >= 0");
  }
  if (j.contains("candidates")) {
    cfg.candidate_radius = need_num(j.at("candidates"), "radius", "candidates.radius");
    if (cfg.candidate_radius <= 0.0) throw ConfigError("candidates.radius", "must be > 0");
  }

  const json& seeds = need(j, "seeds", "seeds");
  double sc = need_num(seeds, "count", "seeds.count");
  if (sc < 1.0 || sc != std::floor(sc)) throw ConfigError("seeds.count", "needs an integer >= 1");
  cfg.seed_count = (std::size_t)sc;
  const json& base = need(seeds, "base", "seeds.base");
  if (!base.is_number_integer() && !base.is_number_unsigned())
    throw ConfigError("seeds.base", "needs an integer");
  cfg.seed_base = base.get<std::uint64_t>();

  cfg.out_dir = need(j, "out", "out").get<std::string>();
  if (cfg.out_dir.empty()) throw ConfigError("out", "empty output directory");

  if (j.contains("partition")) {
    const json& p = j.at("partition");
    if (p.contains("dset")) {
      auto elems =
          parse_coords_list(p.at("dset"), cfg.scheme.total_dim(), "partition.dset");
      try {
        cfg.partition_dset = DependencySet::from_elems(std::move(elems));
      } catch (const std::exception& ex) {
        throw ConfigError("partition.dset", ex.what());
      }
    }
    if (p.contains("g"))
      cfg.partition_g = parse_coords(p.at("g"), cfg.scheme.total_dim(), "partition.g");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("(file)", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

} // namespace qcdiff::cli
