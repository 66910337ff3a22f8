#pragma once

#include <functional>

#include "qcdiff/scheme.hpp"

namespace qcdiff {

// Dual lattice of a scheme, wrapped as a scheme of its own so the point
// enumerator can walk it. Characters are written x -> exp(2 pi i <k, x>),
// so the dual basis is the inverse transpose of the parent basis.
class DualScheme {
public:
  const Scheme& parent() const { return parent_; }
  const Scheme& lattice() const { return lattice_; }
  const ScalarMat& dual_basis() const { return lattice_.basis(); }

private:
  DualScheme(Scheme parent, Scheme lattice)
      : parent_(std::move(parent)), lattice_(std::move(lattice)) {}
  friend DualScheme annihilator(const Scheme& scheme);

  Scheme parent_, lattice_;
};

DualScheme annihilator(const Scheme& scheme);

// Distance from <chi, s> + <chi*, s*> to the nearest integer. Zero for every
// pair of integer vectors exactly when the dual lattice annihilates the
// parent; exact mode returns literal 0.0.
double character_residual(const DualScheme& dual, const Coords& dual_coords,
                          const Coords& lattice_coords);

struct FourierModulePoint {
  Coords dual_coords;
  std::vector<double> chi;      // physical frequency
  std::vector<double> chi_star; // internal frequency
  double amplitude = 0.0;       // value of the amplitude function at chi_star
};

// Peak amplitude as a function of the internal frequency, together with a
// radius bound: |chi*| > cutoff_radius(t) must imply amplitude < t. The
// bound is what makes the candidate search finite.
struct AmplitudeFn {
  std::function<double(const std::vector<double>&)> value;
  std::function<double(double)> cutoff_radius;
};

// All dual-lattice points with physical frequency in k_range and amplitude
// at least threshold, sorted by descending amplitude (coordinate order on
// ties). Throws if threshold < 0 or the cutoff radius is unbounded.
std::vector<FourierModulePoint> bragg_candidates(const DualScheme& dual, const Region& k_range,
                                                 const AmplitudeFn& amp, double threshold);

} // namespace qcdiff
