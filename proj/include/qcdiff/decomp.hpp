#pragma once

#include <unordered_map>

#include "qcdiff/randfield.hpp"
#include "qcdiff/scheme.hpp"

namespace qcdiff {

// Longest run s, s-x, ..., s-kx staying inside the window; 0 when x = 0.
// Returns -1 when s itself is outside (callers feed window points only).
std::int64_t ell_steps(const Window& window, const ScalarVec& x, const ScalarVec& s);

// Index-k sublattice M = kL with a complete residue system that contains
// the dependency set. k = 2 max|coord| + 1 keeps a symmetric set injective
// into L/M; elements of the dependency set come first in the list.
struct SubScheme {
  SubScheme(std::int64_t k, Scheme lattice, std::vector<Coords> representatives);

  std::int64_t k;
  Scheme lattice; // parent basis scaled by k
  std::vector<Coords> representatives;

  Coords residue_of(const Coords& c) const; // componentwise residue in [0, k)
  std::size_t rep_index_of(const Coords& c) const;

private:
  std::unordered_map<Coords, std::size_t, CoordsHash> residue_to_rep_;
};

SubScheme build_subscheme(const Scheme& scheme, const DependencySet& dset);

// W_k = {y in W : run length of delta from y is exactly k}, as exact box
// unions. Disjoint, and their union gives back W.
struct LevelSetFamily {
  ScalarVec delta;
  std::int64_t ell = 0;     // maximal level
  std::vector<Window> sets; // ell + 1 windows, some possibly empty
};

LevelSetFamily level_sets(const Window& window, const ScalarVec& delta);

struct PartitionCell {
  std::size_t coset = 0;
  std::int64_t level = 0;
  Coords representative;
  Window window{0};                 // level-set window pulled back by the representative
  std::vector<LatticePoint> points; // parent-lattice points inside the region
};

struct Partition {
  SubScheme sub;
  LevelSetFamily family;
  Coords g;
  std::size_t g_rep = 0; // representative congruent to g
  std::vector<PartitionCell> cells;
  std::vector<std::string> notes;
};

// Splits the model set over `region` into cells on which pairs (s, s-g)
// separate: distinct cell members never collide through the dependency set.
Partition partition(const Scheme& scheme, const Window& window, const DependencySet& dset,
                    const Coords& g, const Region& region);

// ({s, s-g} - {t, t-g}) misses the dependency set for all distinct s, t.
bool verify_cell_separation(const PartitionCell& cell, const Coords& g,
                            const DependencySet& dset);

// Exact structural audit of a computed partition against a fresh
// enumeration: multiset cover plus per-cell separation.
struct PartitionCheck {
  bool exact_cover = false;
  bool separation_ok = false;
  std::size_t lattice_points = 0;
  std::size_t cell_points = 0;
  std::vector<Coords> missing;    // enumerated but in no cell
  std::vector<Coords> extra;      // in a cell but not enumerated
  std::vector<Coords> duplicated; // in more than one cell
};

PartitionCheck check_partition(const Partition& part, const Scheme& scheme,
                               const Window& window, const DependencySet& dset,
                               const Region& region);

} // namespace qcdiff
