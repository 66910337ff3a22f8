#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include "qcdiff/piecewise.hpp"
#include "qcdiff/scheme.hpp"

namespace qcdiff {

// Finite symmetric set of lattice vectors containing 0. Weights at sites
// whose pairwise differences avoid the set are independent.
class DependencySet {
public:
  static DependencySet from_elems(std::vector<Coords> elems);
  // closure {a - b : a, b in elems}; used for stencils and block offsets
  static DependencySet difference_closure(const std::vector<Coords>& elems);

  const std::vector<Coords>& elems() const { return elems_; }
  bool contains(const Coords& c) const;
  std::size_t size() const { return elems_.size(); }
  std::int64_t max_abs_coord() const;

private:
  std::vector<Coords> elems_; // sorted
};

// (P - Q) disjoint from D: the independence criterion for site packs
bool separation_check(const std::vector<Coords>& p, const std::vector<Coords>& q,
                      const DependencySet& d);

// Immutable enumerated support shared by all samples drawn on it.
struct PointSet {
  std::vector<LatticePoint> pts;
  std::unordered_map<Coords, std::size_t, CoordsHash> index;

  static std::shared_ptr<const PointSet> build(std::vector<LatticePoint> pts);
  const LatticePoint& operator[](std::size_t i) const { return pts[i]; }
  std::size_t size() const { return pts.size(); }
  // index of the point with these lattice coordinates, or npos
  static constexpr std::size_t npos = (std::size_t)-1;
  std::size_t find(const Coords& c) const;
};

struct WeightedComb {
  std::shared_ptr<const PointSet> support;
  std::vector<cdouble> weights;
  std::string provenance;
};

// First and second moment structure of a field: mean function e and the
// covariance envelopes c_g with c_g supported in W cap (W + g*).
struct Envelope {
  PiecewiseFn mean;
  std::vector<std::pair<Coords, PiecewiseFn>> cov;
  DependencySet dset;
  bool mean_continuous = false;

  const PiecewiseFn* cov_for(const Coords& g) const;
};

// max probe defect of the symmetry c_{-g}(y) = conj(c_g(y + g*))
double envelope_hermitian_defect(const Envelope& env, const Scheme& scheme,
                                 std::size_t probes_per_g = 100);

class FieldSampler {
public:
  virtual ~FieldSampler() = default;
  virtual std::string kind() const = 0;

  // window the comb lives on; block and shifted-window samplers enlarge it
  virtual Window effective_window(const Scheme& scheme, const Window& base) const;
  // nullopt when the field has no finite dependency set (ou_path)
  virtual std::optional<DependencySet> dependency_set(const Scheme& scheme) const = 0;
  virtual std::optional<Envelope> envelope(const Scheme& scheme, const Window& base) const = 0;
  // mean function; available even when the full envelope is not
  virtual PiecewiseFn mean_fn(const Scheme& scheme, const Window& base) const;

  virtual std::vector<cdouble> sample_weights(const Scheme& scheme, const Window& base,
                                              const PointSet& support,
                                              std::uint64_t seed) const = 0;

  WeightedComb sample(const Scheme& scheme, const Window& base,
                      std::shared_ptr<const PointSet> support, std::uint64_t seed) const;
};

enum class ShiftDensity { uniform, tent };

std::unique_ptr<FieldSampler> make_bernoulli(double p);
std::unique_ptr<FieldSampler> make_gaussian(double mean, double sd);
std::unique_ptr<FieldSampler> make_deterministic(double value);
std::unique_ptr<FieldSampler> make_block(std::vector<Coords> translations,
                                         std::vector<double> mean,
                                         std::vector<std::vector<double>> cov);
std::unique_ptr<FieldSampler> make_shifted_window(Scalar shift_lo, Scalar shift_hi,
                                                  ShiftDensity density);
std::unique_ptr<FieldSampler> make_moving_average(std::vector<Coords> stencil,
                                                  std::vector<double> coeffs, double mean);
std::unique_ptr<FieldSampler> make_ou_path(double rate, double volatility, double mean,
                                           double max_step_fraction = 1e-3);

// Monte Carlo moments across seeds, with standard errors. Covariances are
// reported per (site, lag) for sites whose lagged partner is also present;
// the SE convention is sd(per-seed product)/sqrt(seeds).
struct MomentStats {
  std::vector<cdouble> mean;
  std::vector<double> mean_se;
  struct CovRow {
    Coords g;
    std::vector<std::size_t> sites;   // site index with partner present
    std::vector<cdouble> cov;
    std::vector<double> se;
  };
  std::vector<CovRow> cov_rows;
  std::size_t seeds = 0;
};

MomentStats mc_moments(const FieldSampler& sampler, const Scheme& scheme, const Window& base,
                       const PointSet& support, const std::vector<Coords>& lags,
                       std::size_t num_seeds, std::uint64_t base_seed);

} // namespace qcdiff
