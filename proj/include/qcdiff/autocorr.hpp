#pragma once

#include "qcdiff/randfield.hpp"
#include "qcdiff/scheme.hpp"

namespace qcdiff {

// Volume-averaged correlation coefficient of a weighted comb at lag g:
// sum of w_s conj(w_{s-g}) over pairs with both endpoints inside the
// averaging region, divided by the region volume. Restricting both ends
// first makes the Hermitian symmetry eta(-g) = conj(eta(g)) exact.
cdouble eta_n(const WeightedComb& comb, const Region& dn, const Coords& g);

// Comb carrying the site means e(s*) instead of sampled weights.
WeightedComb expectation_comb(const PiecewiseFn& mean, std::shared_ptr<const PointSet> points);
WeightedComb expectation_comb(const Envelope& env, std::shared_ptr<const PointSet> points);

// Two estimators of the averaged covariance A_g, sharing the same seeds:
// the difference eta(sample) - eta(means), and the centered covariance sum.
// They have the same expectation; disagreement beyond 4 combined standard
// errors clears the `consistent` flag.
struct AgEstimate {
  Coords g;
  cdouble eta_mean;  // seed-mean of eta_n of the sampled comb
  double eta_mean_se = 0.0;
  cdouble eta_diff;  // seed-mean of eta_n(sample) - eta_n(expectation)
  double eta_diff_se = 0.0;
  cdouble cov_sum;   // seed-mean of the centered covariance sum / volume
  double cov_sum_se = 0.0;
  std::size_t pairs = 0; // lag partners inside the averaging region
  std::size_t seeds = 0;
  bool consistent = true;
};

std::vector<AgEstimate> ag_empirical(const FieldSampler& sampler, const Scheme& scheme,
                                     const Window& base,
                                     std::shared_ptr<const PointSet> points, const Region& dn,
                                     const std::vector<Coords>& gs, std::size_t num_seeds,
                                     std::uint64_t base_seed);

AgEstimate ag_empirical_one(const FieldSampler& sampler, const Scheme& scheme,
                            const Window& base, std::shared_ptr<const PointSet> points,
                            const Region& dn, const Coords& g, std::size_t num_seeds,
                            std::uint64_t base_seed);

// Lattice vectors realizable as differences of two window points, with
// physical part inside the given radius. Finite by local finiteness; the
// natural candidate set for lag tables.
std::vector<Coords> candidate_differences(const Scheme& scheme, const Window& window,
                                          double radius);

} // namespace qcdiff
