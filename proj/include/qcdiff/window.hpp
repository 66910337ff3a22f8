#pragma once

#include <optional>
#include <vector>

#include "qcdiff/linalg.hpp"

namespace qcdiff {

// Half-open axis-aligned box  prod_i [lo_i, hi_i).
struct WBox {
  ScalarVec lo, hi;
  bool degenerate() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i].cmp(lo[i]) <= 0) return true;
    return false;
  }
};

// Finite union of half-open boxes, kept pairwise disjoint. Half-openness
// makes all set algebra exact: boundaries carry no measure and no points.
class Window {
public:
  explicit Window(std::size_t dim) : dim_(dim) {}
  static Window from_boxes(std::size_t dim, std::vector<WBox> boxes);

  std::size_t dim() const { return dim_; }
  const std::vector<WBox>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }

  Scalar measure() const;
  bool contains(const ScalarVec& y) const;
  // smallest distance from y to any box facet, in doubles; drives the
  // floating-mode boundary warnings
  double boundary_distance(const ScalarVec& y) const;

  Window translated(const ScalarVec& t) const;
  Window intersect(const Window& o) const;
  Window subtract(const Window& o) const;
  Window unite(const Window& o) const;
  // Minkowski sum with a single box
  Window minkowski(const WBox& b) const;

  std::optional<WBox> hull() const;

private:
  std::size_t dim_;
  std::vector<WBox> boxes_;
};

std::optional<WBox> box_intersect(const WBox& a, const WBox& b);
std::vector<WBox> box_subtract(const WBox& a, const WBox& b);

} // namespace qcdiff
