#include "qcdiff/autocorr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcdiff {

namespace {

std::vector<char> region_mask(const PointSet& sup, const Region& dn) {
  std::vector<char> in(sup.size(), 0);
  for (std::size_t i = 0; i < sup.size(); ++i) in[i] = dn.contains(sup[i].physical) ? 1 : 0;
  return in;
}

double region_volume_checked(const Region& dn) {
  double vol = dn.volume();
  if (!(vol > 0.0)) throw std::invalid_argument("autocorr: averaging region has zero volume");
  return vol;
}

} // namespace

cdouble eta_n(const WeightedComb& comb, const Region& dn, const Coords& g) {
  double vol = region_volume_checked(dn);
  const PointSet& sup = *comb.support;
  auto in = region_mask(sup, dn);
  cdouble acc(0);
  for (std::size_t i = 0; i < sup.size(); ++i) {
    if (!in[i]) continue;
    std::size_t j = sup.find(coords_sub(sup[i].coords, g));
    if (j == PointSet::npos || !in[j]) continue;
    acc += comb.weights[i] * std::conj(comb.weights[j]);
  }
  return acc / vol;
}

WeightedComb expectation_comb(const PiecewiseFn& mean, std::shared_ptr<const PointSet> points) {
  WeightedComb comb;
  comb.support = points;
  comb.weights.resize(points->size());
  for (std::size_t i = 0; i < points->size(); ++i)
    comb.weights[i] = mean.eval((*points)[i].internal_d[0]);
  comb.provenance = "expectation";
  return comb;
}

WeightedComb expectation_comb(const Envelope& env, std::shared_ptr<const PointSet> points) {
  return expectation_comb(env.mean, points);
}

std::vector<AgEstimate> ag_empirical(const FieldSampler& sampler, const Scheme& scheme,
                                     const Window& base,
                                     std::shared_ptr<const PointSet> points, const Region& dn,
                                     const std::vector<Coords>& gs, std::size_t num_seeds,
                                     std::uint64_t base_seed) {
  if (num_seeds < 2) throw std::invalid_argument("autocorr: need at least two seeds");
  double vol = region_volume_checked(dn);
  const PointSet& sup = *points;
  auto in = region_mask(sup, dn);

  PiecewiseFn mean = sampler.mean_fn(scheme, base);
  std::vector<cdouble> e(sup.size());
  for (std::size_t i = 0; i < sup.size(); ++i) e[i] = mean.eval(sup[i].internal_d[0]);

  struct Lag {
    std::vector<std::size_t> s, t;
    cdouble det_eta{0};
    cdouble sum_eta{0}, sum_diff{0}, sum_cov{0};
    double sq_eta = 0.0, sq_diff = 0.0, sq_cov = 0.0;
  };
  std::vector<Lag> lags(gs.size());
  for (std::size_t k = 0; k < gs.size(); ++k) {
    for (std::size_t i = 0; i < sup.size(); ++i) {
      if (!in[i]) continue;
      std::size_t j = sup.find(coords_sub(sup[i].coords, gs[k]));
      if (j == PointSet::npos || !in[j]) continue;
      lags[k].s.push_back(i);
      lags[k].t.push_back(j);
    }
    cdouble det(0);
    for (std::size_t m = 0; m < lags[k].s.size(); ++m)
      det += e[lags[k].s[m]] * std::conj(e[lags[k].t[m]]);
    lags[k].det_eta = det / vol;
  }

  for (std::size_t seed = 0; seed < num_seeds; ++seed) {
    auto w = sampler.sample_weights(scheme, base, sup, base_seed + seed);
    for (auto& lag : lags) {
      cdouble raw(0), cen(0);
      for (std::size_t m = 0; m < lag.s.size(); ++m) {
        std::size_t i = lag.s[m], j = lag.t[m];
        raw += w[i] * std::conj(w[j]);
        cen += (w[i] - e[i]) * std::conj(w[j] - e[j]);
      }
      cdouble eta = raw / vol;
      cdouble diff = eta - lag.det_eta;
      cdouble cov = cen / vol;
      lag.sum_eta += eta;
      lag.sq_eta += std::norm(eta);
      lag.sum_diff += diff;
      lag.sq_diff += std::norm(diff);
      lag.sum_cov += cov;
      lag.sq_cov += std::norm(cov);
    }
  }

  double fk = (double)num_seeds;
  auto finish = [&](cdouble sum, double sq, cdouble& mean_out, double& se_out) {
    mean_out = sum / fk;
    double var = std::max(0.0, sq / fk - std::norm(mean_out));
    se_out = std::sqrt(var / fk);
  };
  std::vector<AgEstimate> out(gs.size());
  for (std::size_t k = 0; k < gs.size(); ++k) {
    AgEstimate& a = out[k];
    a.g = gs[k];
    a.pairs = lags[k].s.size();
    a.seeds = num_seeds;
    finish(lags[k].sum_eta, lags[k].sq_eta, a.eta_mean, a.eta_mean_se);
    finish(lags[k].sum_diff, lags[k].sq_diff, a.eta_diff, a.eta_diff_se);
    finish(lags[k].sum_cov, lags[k].sq_cov, a.cov_sum, a.cov_sum_se);
    double gap = std::abs(a.eta_diff - a.cov_sum);
    double band = 4.0 * std::sqrt(a.eta_diff_se * a.eta_diff_se + a.cov_sum_se * a.cov_sum_se);
    a.consistent = gap <= band + 1e-12;
  }
  return out;
}

AgEstimate ag_empirical_one(const FieldSampler& sampler, const Scheme& scheme,
                            const Window& base, std::shared_ptr<const PointSet> points,
                            const Region& dn, const Coords& g, std::size_t num_seeds,
                            std::uint64_t base_seed) {
  return ag_empirical(sampler, scheme, base, points, dn, {g}, num_seeds, base_seed)[0];
}

std::vector<Coords> candidate_differences(const Scheme& scheme, const Window& window,
                                          double radius) {
  // difference body of the window: union over box pairs of [lo-hi', hi-lo')
  std::size_t e = window.dim();
  std::vector<WBox> diffs;
  for (const auto& a : window.boxes())
    for (const auto& b : window.boxes()) {
      WBox d;
      d.lo.resize(e);
      d.hi.resize(e);
      for (std::size_t i = 0; i < e; ++i) {
        d.lo[i] = a.lo[i] - b.hi[i];
        d.hi[i] = a.hi[i] - b.lo[i];
      }
      diffs.push_back(std::move(d));
    }
  Window diff_window = Window::from_boxes(e, std::move(diffs));
  Region reg = Region::centered(scheme.physical_dim(), radius, scheme.exact());
  std::vector<Coords> out;
  for (auto& p : enumerate_points(scheme, diff_window, reg)) out.push_back(std::move(p.coords));
  // the true difference body is symmetric and open; half-open boxes can let
  // one unattainable boundary lag through, so keep negation-closed lags only
  std::sort(out.begin(), out.end());
  std::vector<Coords> sym;
  for (const auto& g : out)
    if (std::binary_search(out.begin(), out.end(), coords_neg(g))) sym.push_back(g);
  return sym;
}

} // namespace qcdiff
