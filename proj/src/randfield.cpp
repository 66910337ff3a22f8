#include "qcdiff/randfield.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qcdiff/rng.hpp"

namespace qcdiff {

namespace {
// stream tags keep the draw families of different sampler kinds disjoint
constexpr std::uint64_t kStreamSite = 1;
constexpr std::uint64_t kStreamBlock = 2;
constexpr std::uint64_t kStreamShift = 3;
constexpr std::uint64_t kStreamInnovation = 4;
constexpr std::uint64_t kStreamPath = 5;
} // namespace

DependencySet DependencySet::from_elems(std::vector<Coords> elems) {
  if (elems.empty()) throw std::invalid_argument("dependency set: must be nonempty");
  std::set<Coords> s(elems.begin(), elems.end());
  std::size_t dim = elems.front().size();
  Coords zero(dim, 0);
  if (!s.count(zero)) throw std::invalid_argument("dependency set: must contain 0");
  for (const auto& c : s) {
    if (c.size() != dim) throw std::invalid_argument("dependency set: mixed dimensions");
    if (!s.count(coords_neg(c)))
      throw std::invalid_argument("dependency set: must be closed under negation");
  }
  DependencySet d;
  d.elems_.assign(s.begin(), s.end());
  return d;
}

DependencySet DependencySet::difference_closure(const std::vector<Coords>& elems) {
  if (elems.empty()) throw std::invalid_argument("dependency set: empty generator list");
  std::set<Coords> s;
  for (const auto& a : elems)
    for (const auto& b : elems) s.insert(coords_sub(a, b));
  DependencySet d;
  d.elems_.assign(s.begin(), s.end());
  return d;
}

bool DependencySet::contains(const Coords& c) const {
  return std::binary_search(elems_.begin(), elems_.end(), c);
}

std::int64_t DependencySet::max_abs_coord() const {
  std::int64_t m = 0;
  for (const auto& c : elems_)
    for (auto v : c) m = std::max(m, std::abs(v));
  return m;
}

bool separation_check(const std::vector<Coords>& p, const std::vector<Coords>& q,
                      const DependencySet& d) {
  for (const auto& a : p)
    for (const auto& b : q)
      if (d.contains(coords_sub(a, b))) return false;
  return true;
}

std::shared_ptr<const PointSet> PointSet::build(std::vector<LatticePoint> pts) {
  auto ps = std::make_shared<PointSet>();
  ps->pts = std::move(pts);
  ps->index.reserve(ps->pts.size() * 2);
  for (std::size_t i = 0; i < ps->pts.size(); ++i) ps->index.emplace(ps->pts[i].coords, i);
  return ps;
}

std::size_t PointSet::find(const Coords& c) const {
  auto it = index.find(c);
  return it == index.end() ? npos : it->second;
}

const PiecewiseFn* Envelope::cov_for(const Coords& g) const {
  for (const auto& [gc, fn] : cov)
    if (gc == g) return &fn;
  return nullptr;
}

double envelope_hermitian_defect(const Envelope& env, const Scheme& scheme,
                                 std::size_t probes_per_g) {
  double worst = 0.0;
  KeyedRng rng(0xe37, {}, 0);
  for (const auto& [g, cg] : env.cov) {
    const PiecewiseFn* cneg = env.cov_for(coords_neg(g));
    double gstar = scheme.star(g)[0].to_double();
    if (cg.empty()) continue;
    double lo = cg.pieces().front().lo, hi = cg.pieces().back().hi;
    for (std::size_t i = 0; i < probes_per_g; ++i) {
      double y = lo + (hi - lo) * rng.next_uniform();
      // avoid probing right at a breakpoint; indicators are half-open there
      if (cg.breakpoints().size() > 1) {
        bool near = false;
        for (double b : cg.breakpoints())
          if (std::abs(y - b) < 1e-9) near = true;
        if (near) continue;
      }
      cdouble rhs = std::conj(cg.eval(y));
      cdouble lhs = cneg ? cneg->eval(y - gstar) : cdouble(0);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

Window FieldSampler::effective_window(const Scheme&, const Window& base) const {
  return base;
}

PiecewiseFn FieldSampler::mean_fn(const Scheme& scheme, const Window& base) const {
  auto env = envelope(scheme, base);
  if (!env) throw std::logic_error("sampler has neither envelope nor mean function");
  return env->mean;
}

WeightedComb FieldSampler::sample(const Scheme& scheme, const Window& base,
                                  std::shared_ptr<const PointSet> support,
                                  std::uint64_t seed) const {
  WeightedComb comb;
  comb.support = support;
  comb.weights = sample_weights(scheme, base, *support, seed);
  comb.provenance = kind() + " seed=" + std::to_string(seed);
  return comb;
}

// ---------------------------------------------------------------------------
// independent per-site laws

namespace {

class IndependentSampler final : public FieldSampler {
public:
  enum class Law { bernoulli, gaussian, constant };
  IndependentSampler(Law law, double a, double b) : law_(law), a_(a), b_(b) {
    if (law == Law::bernoulli && (a < 0.0 || a > 1.0))
      throw std::invalid_argument("sampler.p: must be in [0,1]");
    if (law == Law::gaussian && b < 0.0)
      throw std::invalid_argument("sampler.sd: must be nonnegative");
  }

  std::string kind() const override {
    switch (law_) {
      case Law::bernoulli: return "bernoulli";
      case Law::gaussian: return "gaussian";
      default: return "deterministic";
    }
  }

  std::optional<DependencySet> dependency_set(const Scheme& scheme) const override {
    return DependencySet::from_elems({Coords(scheme.total_dim(), 0)});
  }

  std::optional<Envelope> envelope(const Scheme& scheme, const Window& base) const override {
    Envelope env;
    double var = law_ == Law::bernoulli ? a_ * (1.0 - a_)
                 : law_ == Law::gaussian ? b_ * b_
                                         : 0.0;
    env.mean = PiecewiseFn::constant_on(base, a_);
    env.cov.emplace_back(Coords(scheme.total_dim(), 0),
                         PiecewiseFn::constant_on(base, var));
    env.dset = *dependency_set(scheme);
    env.mean_continuous = false;
    return env;
  }

  std::vector<cdouble> sample_weights(const Scheme&, const Window&, const PointSet& support,
                                      std::uint64_t seed) const override {
    std::vector<cdouble> w(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      KeyedRng rng(seed, support[i].coords, kStreamSite);
      switch (law_) {
        case Law::bernoulli: w[i] = rng.next_uniform() < a_ ? 1.0 : 0.0; break;
        case Law::gaussian: w[i] = a_ + b_ * rng.next_gaussian(); break;
        case Law::constant: w[i] = a_; break;
      }
    }
    return w;
  }

private:
  Law law_;
  double a_, b_;
};

// ---------------------------------------------------------------------------
// block fields: one multivariate draw per base point, spread over translates

class BlockSampler final : public FieldSampler {
public:
  BlockSampler(std::vector<Coords> translations, std::vector<double> mean,
               std::vector<std::vector<double>> cov)
      : c_(std::move(translations)), mean_(std::move(mean)), cov_(std::move(cov)) {
    std::size_t n = c_.size();
    if (n == 0) throw std::invalid_argument("sampler.translations: must be nonempty");
    if (mean_.size() != n) throw std::invalid_argument("sampler.mean: size mismatch");
    if (cov_.size() != n) throw std::invalid_argument("sampler.cov: size mismatch");
    for (const auto& row : cov_)
      if (row.size() != n) throw std::invalid_argument("sampler.cov: not square");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (std::abs(cov_[i][j] - cov_[j][i]) > 1e-12)
          throw std::invalid_argument("sampler.cov: not symmetric");
    chol_ = cholesky(cov_);
  }

  std::string kind() const override { return "block"; }

  Window effective_window(const Scheme& scheme, const Window& base) const override {
    Window out(base.dim());
    bool first = true;
    for (const auto& p : c_) {
      Window t = base.translated(scheme.star(p));
      out = first ? t : out.unite(t);
      first = false;
    }
    return out;
  }

  std::optional<DependencySet> dependency_set(const Scheme&) const override {
    return DependencySet::difference_closure(c_);
  }

  std::optional<Envelope> envelope(const Scheme& scheme, const Window& base) const override {
    validate_disjoint(scheme, base);
    Envelope env;
    env.mean = PiecewiseFn::zero();
    std::vector<Window> shifted;
    for (const auto& p : c_) shifted.push_back(base.translated(scheme.star(p)));
    for (std::size_t i = 0; i < c_.size(); ++i)
      env.mean = env.mean.plus(PiecewiseFn::constant_on(shifted[i], mean_[i]));
    // c_g picks up S_ij on W + p_i* for every pair with p_i - p_j = g
    std::vector<std::pair<Coords, PiecewiseFn>> cov;
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < c_.size(); ++j) {
        Coords g = coords_sub(c_[i], c_[j]);
        PiecewiseFn term = PiecewiseFn::constant_on(shifted[i], cov_[i][j]);
        bool found = false;
        for (auto& [gc, fn] : cov)
          if (gc == g) {
            fn = fn.plus(term);
            found = true;
          }
        if (!found) cov.emplace_back(g, term);
      }
    env.cov = std::move(cov);
    env.dset = *dependency_set(scheme);
    env.mean_continuous = false;
    return env;
  }

  std::vector<cdouble> sample_weights(const Scheme& scheme, const Window& base,
                                      const PointSet& support,
                                      std::uint64_t seed) const override {
    std::size_t n = c_.size();
    std::vector<cdouble> w(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) {
      // unique decomposition s = t + p_i with star(t) in the base window
      std::size_t which = n;
      Coords anchor;
      for (std::size_t i = 0; i < n; ++i) {
        Coords t = coords_sub(support[s].coords, c_[i]);
        if (base.contains(scheme.star(t))) {
          if (which != n)
            throw std::domain_error("block sampler: ambiguous block decomposition "
                                    "(translated windows overlap)");
          which = i;
          anchor = t;
        }
      }
      if (which == n)
        throw std::domain_error("block sampler: site outside every translated window");
      KeyedRng rng(seed, anchor, kStreamBlock);
      std::vector<double> z(n);
      for (auto& v : z) v = rng.next_gaussian();
      double acc = mean_[which];
      for (std::size_t k = 0; k <= which; ++k) acc += chol_[which][k] * z[k];
      w[s] = acc;
    }
    return w;
  }

private:
  std::vector<Coords> c_;
  std::vector<double> mean_;
  std::vector<std::vector<double>> cov_;
  std::vector<std::vector<double>> chol_;

  void validate_disjoint(const Scheme& scheme, const Window& base) const {
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = i + 1; j < c_.size(); ++j) {
        Window a = base.translated(scheme.star(c_[i]));
        Window b = base.translated(scheme.star(c_[j]));
        if (!a.intersect(b).empty())
          throw std::invalid_argument(
              "sampler.translations: translated windows overlap; blocks are ill-defined");
      }
  }

  static std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& a) {
    std::size_t n = a.size();
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double acc = a[i][j];
        for (std::size_t k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
        if (i == j) {
          if (acc < -1e-12)
            throw std::invalid_argument("sampler.cov: not positive semidefinite");
          l[i][j] = std::sqrt(std::max(acc, 0.0));
        } else {
          l[i][j] = l[j][j] > 0.0 ? acc / l[j][j] : 0.0;
        }
      }
    return l;
  }
};

// ---------------------------------------------------------------------------
// shifted-window indicators: per-site random window shift

class ShiftedWindowSampler final : public FieldSampler {
public:
  ShiftedWindowSampler(Scalar lo, Scalar hi, ShiftDensity density)
      : lo_(lo), hi_(hi), density_(density) {
    if (!(lo.cmp(hi) < 0)) throw std::invalid_argument("sampler.shift: empty range");
  }

  std::string kind() const override { return "shifted_window"; }

  Window effective_window(const Scheme&, const Window& base) const override {
    WBox b;
    b.lo = {lo_};
    b.hi = {hi_};
    return base.minkowski(b);
  }

  std::optional<DependencySet> dependency_set(const Scheme& scheme) const override {
    return DependencySet::from_elems({Coords(scheme.total_dim(), 0)});
  }

  std::optional<Envelope> envelope(const Scheme& scheme, const Window& base) const override {
    Envelope env;
    env.mean = convolve_indicator(base, shift_density());
    Window eff = effective_window(scheme, base);
    // Bernoulli given the shift: c_0 = e (1 - e)
    PiecewiseFn one = PiecewiseFn::constant_on(eff, 1.0);
    env.cov.emplace_back(Coords(scheme.total_dim(), 0),
                         env.mean.times(one.plus(env.mean.scaled(-1.0))));
    env.dset = *dependency_set(scheme);
    env.mean_continuous = true;
    return env;
  }

  std::vector<cdouble> sample_weights(const Scheme&, const Window& base,
                                      const PointSet& support,
                                      std::uint64_t seed) const override {
    double lo = lo_.to_double(), span = hi_.to_double() - lo_.to_double();
    std::vector<cdouble> w(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      KeyedRng rng(seed, support[i].coords, kStreamShift);
      double u = rng.next_uniform();
      double x; // normalized shift in [0,1)
      if (density_ == ShiftDensity::uniform) {
        x = u;
      } else {
        x = u < 0.5 ? std::sqrt(u / 2.0) : 1.0 - std::sqrt((1.0 - u) / 2.0);
      }
      double y = lo + span * x;
      ScalarVec probe{Scalar::fp(support[i].internal_d[0] - y)};
      w[i] = base.contains(probe) ? 1.0 : 0.0;
    }
    return w;
  }

private:
  Scalar lo_, hi_;
  ShiftDensity density_;

  PiecewiseFn shift_density() const {
    double lo = lo_.to_double(), hi = hi_.to_double(), span = hi - lo;
    if (density_ == ShiftDensity::uniform) {
      PolyPiece p;
      p.lo = lo;
      p.hi = hi;
      p.c = {1.0 / span};
      return PiecewiseFn::from_pieces({p});
    }
    // symmetric triangle integrating to 1: h(t) = 4/span^2 * min(t-lo, hi-t)
    double mid = lo + span / 2.0, k = 4.0 / (span * span);
    PolyPiece up, down;
    up.lo = lo;
    up.hi = mid;
    up.c = {-k * lo, k};
    down.lo = mid;
    down.hi = hi;
    down.c = {k * hi, -k};
    return PiecewiseFn::from_pieces({up, down});
  }
};

// ---------------------------------------------------------------------------
// moving average over keyed innovations on the full lattice

class MovingAverageSampler final : public FieldSampler {
public:
  MovingAverageSampler(std::vector<Coords> stencil, std::vector<double> coeffs, double mean)
      : stencil_(std::move(stencil)), coeffs_(std::move(coeffs)), mean_(mean) {
    if (stencil_.empty()) throw std::invalid_argument("sampler.stencil: must be nonempty");
    if (stencil_.size() != coeffs_.size())
      throw std::invalid_argument("sampler.coeffs: size mismatch with stencil");
    std::set<Coords> uniq(stencil_.begin(), stencil_.end());
    if (uniq.size() != stencil_.size())
      throw std::invalid_argument("sampler.stencil: repeated offsets");
  }

  std::string kind() const override { return "moving_average"; }

  std::optional<DependencySet> dependency_set(const Scheme&) const override {
    return DependencySet::difference_closure(stencil_);
  }

  std::optional<Envelope> envelope(const Scheme& scheme, const Window& base) const override {
    Envelope env;
    env.mean = PiecewiseFn::constant_on(base, mean_);
    auto dset = *dependency_set(scheme);
    for (const auto& g : dset.elems()) {
      double kappa = 0.0;
      for (std::size_t i = 0; i < stencil_.size(); ++i)
        for (std::size_t j = 0; j < stencil_.size(); ++j)
          if (coords_sub(stencil_[i], stencil_[j]) == g) kappa += coeffs_[i] * coeffs_[j];
      if (kappa == 0.0) continue;
      Window overlap = base.intersect(base.translated(scheme.star(g)));
      if (overlap.empty()) continue;
      env.cov.emplace_back(g, PiecewiseFn::constant_on(overlap, kappa));
    }
    env.dset = std::move(dset);
    env.mean_continuous = false;
    return env;
  }

  std::vector<cdouble> sample_weights(const Scheme&, const Window&, const PointSet& support,
                                      std::uint64_t seed) const override {
    std::vector<cdouble> w(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      double acc = mean_;
      for (std::size_t k = 0; k < stencil_.size(); ++k) {
        Coords t = coords_sub(support[i].coords, stencil_[k]);
        KeyedRng rng(seed, t, kStreamInnovation);
        acc += coeffs_[k] * rng.next_gaussian();
      }
      w[i] = acc;
    }
    return w;
  }

private:
  std::vector<Coords> stencil_;
  std::vector<double> coeffs_;
  double mean_;
};

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck path over the window, shared by all sites of a sample

class OuPathSampler final : public FieldSampler {
public:
  OuPathSampler(double rate, double volatility, double mean, double max_step_fraction)
      : rate_(rate), vol_(volatility), mean_(mean), step_frac_(max_step_fraction) {
    if (rate <= 0.0) throw std::invalid_argument("sampler.rate: must be positive");
    if (volatility < 0.0) throw std::invalid_argument("sampler.volatility: must be nonnegative");
    if (max_step_fraction <= 0.0 || max_step_fraction > 1e-2)
      throw std::invalid_argument("sampler.step_fraction: must be in (0, 1e-2]");
  }

  std::string kind() const override { return "ou_path"; }

  std::optional<DependencySet> dependency_set(const Scheme&) const override {
    return std::nullopt; // continuous path: no finite dependency set exists
  }

  std::optional<Envelope> envelope(const Scheme&, const Window&) const override {
    return std::nullopt;
  }

  PiecewiseFn mean_fn(const Scheme&, const Window& base) const override {
    return PiecewiseFn::constant_on(base, mean_);
  }

  std::vector<cdouble> sample_weights(const Scheme&, const Window& base,
                                      const PointSet& support,
                                      std::uint64_t seed) const override {
    auto hull = base.hull();
    if (!hull) throw std::invalid_argument("ou sampler: empty window");
    double lo = hull->lo[0].to_double(), hi = hull->hi[0].to_double();
    double step_cap = step_frac_ * base.measure().to_double();
    std::size_t n = (std::size_t)std::ceil((hi - lo) / step_cap) + 1;
    double h = (hi - lo) / (double)(n - 1);

    // exact stationary recursion on the grid
    std::vector<double> path(n);
    KeyedRng rng(seed, {}, kStreamPath);
    double sd_stat = vol_ / std::sqrt(2.0 * rate_);
    double decay = std::exp(-rate_ * h);
    double sd_step = sd_stat * std::sqrt(1.0 - decay * decay);
    path[0] = mean_ + sd_stat * rng.next_gaussian();
    for (std::size_t i = 1; i < n; ++i)
      path[i] = mean_ + (path[i - 1] - mean_) * decay + sd_step * rng.next_gaussian();

    std::vector<cdouble> w(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      double y = support[i].internal_d[0];
      double t = std::clamp((y - lo) / h, 0.0, (double)(n - 1));
      std::size_t j = std::min((std::size_t)t, n - 2);
      double frac = t - (double)j;
      w[i] = path[j] * (1.0 - frac) + path[j + 1] * frac;
    }
    return w;
  }

private:
  double rate_, vol_, mean_, step_frac_;
};

} // namespace

std::unique_ptr<FieldSampler> make_bernoulli(double p) {
  return std::make_unique<IndependentSampler>(IndependentSampler::Law::bernoulli, p, 0.0);
}
std::unique_ptr<FieldSampler> make_gaussian(double mean, double sd) {
  return std::make_unique<IndependentSampler>(IndependentSampler::Law::gaussian, mean, sd);
}
std::unique_ptr<FieldSampler> make_deterministic(double value) {
  return std::make_unique<IndependentSampler>(IndependentSampler::Law::constant, value, 0.0);
}
std::unique_ptr<FieldSampler> make_block(std::vector<Coords> translations,
                                         std::vector<double> mean,
                                         std::vector<std::vector<double>> cov) {
  return std::make_unique<BlockSampler>(std::move(translations), std::move(mean), std::move(cov));
}
std::unique_ptr<FieldSampler> make_shifted_window(Scalar shift_lo, Scalar shift_hi,
                                                  ShiftDensity density) {
  return std::make_unique<ShiftedWindowSampler>(shift_lo, shift_hi, density);
}
std::unique_ptr<FieldSampler> make_moving_average(std::vector<Coords> stencil,
                                                  std::vector<double> coeffs, double mean) {
  return std::make_unique<MovingAverageSampler>(std::move(stencil), std::move(coeffs), mean);
}
std::unique_ptr<FieldSampler> make_ou_path(double rate, double volatility, double mean,
                                           double max_step_fraction) {
  return std::make_unique<OuPathSampler>(rate, volatility, mean, max_step_fraction);
}

MomentStats mc_moments(const FieldSampler& sampler, const Scheme& scheme, const Window& base,
                       const PointSet& support, const std::vector<Coords>& lags,
                       std::size_t num_seeds, std::uint64_t base_seed) {
  if (num_seeds < 2) throw std::invalid_argument("mc_moments: need at least two seeds");
  std::size_t n = support.size();
  MomentStats out;
  out.seeds = num_seeds;
  std::vector<cdouble> sum(n, 0.0);
  std::vector<double> sumsq(n, 0.0);

  struct Row {
    Coords g;
    std::vector<std::size_t> site, partner;
    std::vector<cdouble> psum;
    std::vector<double> psumsq;
  };
  std::vector<Row> rows;
  for (const auto& g : lags) {
    Row r;
    r.g = g;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = support.find(coords_sub(support[i].coords, g));
      if (j != PointSet::npos) {
        r.site.push_back(i);
        r.partner.push_back(j);
      }
    }
    r.psum.assign(r.site.size(), 0.0);
    r.psumsq.assign(r.site.size(), 0.0);
    rows.push_back(std::move(r));
  }

  for (std::size_t k = 0; k < num_seeds; ++k) {
    auto w = sampler.sample_weights(scheme, base, support, base_seed + k);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += w[i];
      sumsq[i] += std::norm(w[i]);
    }
    for (auto& r : rows)
      for (std::size_t m = 0; m < r.site.size(); ++m) {
        cdouble p = w[r.site[m]] * std::conj(w[r.partner[m]]);
        r.psum[m] += p;
        r.psumsq[m] += std::norm(p);
      }
  }

  double fk = (double)num_seeds;
  out.mean.resize(n);
  out.mean_se.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.mean[i] = sum[i] / fk;
    double var = std::max(0.0, sumsq[i] / fk - std::norm(out.mean[i]));
    out.mean_se[i] = std::sqrt(var / fk);
  }
  for (auto& r : rows) {
    MomentStats::CovRow cr;
    cr.g = r.g;
    cr.sites = r.site;
    for (std::size_t m = 0; m < r.site.size(); ++m) {
      cdouble pmean = r.psum[m] / fk;
      cdouble cov = (pmean - out.mean[r.site[m]] * std::conj(out.mean[r.partner[m]])) *
                    (fk / (fk - 1.0));
      double pvar = std::max(0.0, r.psumsq[m] / fk - std::norm(pmean));
      cr.cov.push_back(cov);
      cr.se.push_back(std::sqrt(pvar / fk));
    }
    out.cov_rows.push_back(std::move(cr));
  }
  return out;
}

} // namespace qcdiff
