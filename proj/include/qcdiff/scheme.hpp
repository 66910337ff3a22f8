#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcdiff/linalg.hpp"
#include "qcdiff/window.hpp"

namespace qcdiff {

// Closed box in physical space, endpoints kept exact so membership of
// lattice points is decided without tolerance in exact mode.
struct Region {
  ScalarVec lo, hi;
  static Region box1d(double lo, double hi, bool exact_mode = true);
  static Region centered(std::size_t d, double radius, bool exact_mode = true);
  double volume() const;
  bool contains(const ScalarVec& x) const;
};

// Converts a double to a Scalar; in exact mode this goes through the
// shortest decimal form, so config values like 0.3 become 3/10.
Scalar scalar_from_double(double v, bool exact_mode);

struct LatticePoint {
  Coords coords;          // integer coordinates in the lattice basis
  ScalarVec physical;     // projection to the physical space (d comps)
  ScalarVec internal;     // projection to the internal space (e comps)
  std::vector<double> physical_d, internal_d;
};

// Cut-and-project scheme: a (d+e)x(d+e) basis whose columns span the
// lattice, with the first d rows projecting to physical space and the last
// e rows to internal space. Presets carry exact Q(sqrt(n)) entries.
class Scheme {
public:
  static Scheme fibonacci();   // golden ratio chain, Q(sqrt 5)
  static Scheme silver_mean(); // 1+sqrt(2) chain, Q(sqrt 2)
  static Scheme custom(std::size_t d, std::size_t e,
                       const std::vector<std::vector<double>>& rows);
  static Scheme custom_exact(std::size_t d, std::size_t e, ScalarMat basis,
                             std::int64_t root);

  std::size_t physical_dim() const { return d_; }
  std::size_t internal_dim() const { return e_; }
  std::size_t total_dim() const { return d_ + e_; }
  bool exact() const { return exact_; }
  std::int64_t root() const { return root_; }
  const std::string& name() const { return name_; }

  const ScalarMat& basis() const { return basis_; }
  const ScalarMat& basis_inverse() const { return basis_inv_; }
  Scalar covolume() const { return covol_; }

  ScalarVec physical(const Coords& n) const;
  ScalarVec star(const Coords& n) const; // internal projection
  LatticePoint make_point(const Coords& n) const;

  const std::vector<std::string>& notes() const { return notes_; }

private:
  Scheme() = default;
  void finish_init(); // inverse, covolume, injectivity validation

  std::size_t d_ = 0, e_ = 0;
  bool exact_ = true;
  std::int64_t root_ = 0;
  std::string name_;
  ScalarMat basis_, basis_inv_;
  Scalar covol_;
  std::vector<std::string> notes_;
};

struct EnumerationStats {
  std::size_t candidates_checked = 0;
  std::size_t near_boundary = 0; // floating mode: points within 1e-9 of a window facet
};

// All lattice points whose internal projection lies in `window` and whose
// physical projection lies in `region`, sorted by physical coordinate
// (lexicographic for d > 1).
std::vector<LatticePoint> enumerate_points(const Scheme& scheme, const Window& window,
                                           const Region& region,
                                           EnumerationStats* stats = nullptr);

// theta(W) / covolume: the asymptotic number of points per unit volume.
double density(const Scheme& scheme, const Window& window);

// Gap statistics of a finite patch. d == 1 uses exact-sorted neighbors; in
// higher dimension min is the nearest-neighbor distance and max the largest
// empty-ball radius found by a grid scan (resolution `grid_steps`).
double min_gap(const std::vector<LatticePoint>& pts, std::size_t d);
double max_gap(const std::vector<LatticePoint>& pts, std::size_t d, const Region& region,
               std::size_t grid_steps = 200);

// Nested centered boxes [-r_n, r_n]^d with strictly increasing radii.
struct VanHoveSeq {
  std::size_t dim = 1;
  std::vector<double> radii;

  void validate() const;
  Region box(std::size_t n, bool exact_mode = true) const;
  double volume(std::size_t n) const;
};

// |boundary thickened by [-k,k]^d| / |D_n| for the centered box D_n; the
// closed form ((2r+2k)^d - max(2r-2k,0)^d) / (2r)^d.
double thick_boundary_ratio(const VanHoveSeq& seq, std::size_t n, double k_halfwidth);

} // namespace qcdiff
