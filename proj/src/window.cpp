#include "qcdiff/window.hpp"

#include <cmath>
#include <stdexcept>

namespace qcdiff {

std::optional<WBox> box_intersect(const WBox& a, const WBox& b) {
  WBox r;
  r.lo.resize(a.lo.size());
  r.hi.resize(a.lo.size());
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    r.lo[i] = a.lo[i].cmp(b.lo[i]) >= 0 ? a.lo[i] : b.lo[i];
    r.hi[i] = a.hi[i].cmp(b.hi[i]) <= 0 ? a.hi[i] : b.hi[i];
    if (r.hi[i].cmp(r.lo[i]) <= 0) return std::nullopt;
  }
  return r;
}

// a \ b as disjoint boxes: carve slabs of a outside b axis by axis, then
// drop the remaining core (which lies inside b).
std::vector<WBox> box_subtract(const WBox& a, const WBox& b) {
  if (!box_intersect(a, b)) return {a};
  std::vector<WBox> out;
  WBox core = a;
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    if (core.lo[i].cmp(b.lo[i]) < 0) {
      WBox slab = core;
      slab.hi[i] = b.lo[i];
      if (!slab.degenerate()) out.push_back(slab);
      core.lo[i] = b.lo[i];
    }
    if (b.hi[i].cmp(core.hi[i]) < 0) {
      WBox slab = core;
      slab.lo[i] = b.hi[i];
      if (!slab.degenerate()) out.push_back(slab);
      core.hi[i] = b.hi[i];
    }
  }
  return out;
}

Window Window::from_boxes(std::size_t dim, std::vector<WBox> boxes) {
  Window w(dim);
  for (auto& b : boxes) {
    if (b.lo.size() != dim || b.hi.size() != dim)
      throw std::invalid_argument("Window: box dimension mismatch");
    if (b.degenerate()) continue;
    std::vector<WBox> pieces{b};
    for (const auto& existing : w.boxes_) {
      std::vector<WBox> next;
      for (const auto& p : pieces) {
        auto sub = box_subtract(p, existing);
        next.insert(next.end(), sub.begin(), sub.end());
      }
      pieces = std::move(next);
      if (pieces.empty()) break;
    }
    w.boxes_.insert(w.boxes_.end(), pieces.begin(), pieces.end());
  }
  return w;
}

Scalar Window::measure() const {
  Scalar total = Scalar::exact_int(0);
  for (const auto& b : boxes_) {
    Scalar vol = Scalar::exact_int(1);
    for (std::size_t i = 0; i < dim_; ++i) vol *= b.hi[i] - b.lo[i];
    total += vol;
  }
  return total;
}

bool Window::contains(const ScalarVec& y) const {
  for (const auto& b : boxes_) {
    bool in = true;
    for (std::size_t i = 0; i < dim_ && in; ++i)
      in = b.lo[i].cmp(y[i]) <= 0 && y[i].cmp(b.hi[i]) < 0;
    if (in) return true;
  }
  return false;
}

double Window::boundary_distance(const ScalarVec& y) const {
  double best = INFINITY;
  for (const auto& b : boxes_) {
    for (std::size_t i = 0; i < dim_; ++i) {
      double v = y[i].to_double();
      best = std::min(best, std::abs(v - b.lo[i].to_double()));
      best = std::min(best, std::abs(v - b.hi[i].to_double()));
    }
  }
  return best;
}

Window Window::translated(const ScalarVec& t) const {
  Window w(dim_);
  w.boxes_ = boxes_;
  for (auto& b : w.boxes_)
    for (std::size_t i = 0; i < dim_; ++i) {
      b.lo[i] += t[i];
      b.hi[i] += t[i];
    }
  return w;
}

Window Window::intersect(const Window& o) const {
  std::vector<WBox> out;
  for (const auto& a : boxes_)
    for (const auto& b : o.boxes_)
      if (auto r = box_intersect(a, b)) out.push_back(*r);
  Window w(dim_);
  w.boxes_ = std::move(out); // pairwise disjoint already
  return w;
}

Window Window::subtract(const Window& o) const {
  std::vector<WBox> pieces = boxes_;
  for (const auto& b : o.boxes_) {
    std::vector<WBox> next;
    for (const auto& p : pieces) {
      auto sub = box_subtract(p, b);
      next.insert(next.end(), sub.begin(), sub.end());
    }
    pieces = std::move(next);
  }
  Window w(dim_);
  w.boxes_ = std::move(pieces);
  return w;
}

Window Window::unite(const Window& o) const {
  std::vector<WBox> all = boxes_;
  all.insert(all.end(), o.boxes_.begin(), o.boxes_.end());
  return from_boxes(dim_, std::move(all));
}

Window Window::minkowski(const WBox& b) const {
  std::vector<WBox> out;
  for (const auto& a : boxes_) {
    WBox s;
    s.lo.resize(dim_);
    s.hi.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      s.lo[i] = a.lo[i] + b.lo[i];
      s.hi[i] = a.hi[i] + b.hi[i];
    }
    out.push_back(s);
  }
  return from_boxes(dim_, std::move(out));
}

std::optional<WBox> Window::hull() const {
  if (boxes_.empty()) return std::nullopt;
  WBox h = boxes_[0];
  for (const auto& b : boxes_)
    for (std::size_t i = 0; i < dim_; ++i) {
      if (b.lo[i].cmp(h.lo[i]) < 0) h.lo[i] = b.lo[i];
      if (b.hi[i].cmp(h.hi[i]) > 0) h.hi[i] = b.hi[i];
    }
  return h;
}

bool has_nonzero_rational_kernel(const std::vector<std::vector<Rat>>& a, std::size_t ncols) {
  // Gaussian elimination over Q; kernel is nonzero iff rank < ncols.
  std::vector<std::vector<Rat>> m = a;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < ncols && rank < m.size(); ++col) {
    std::size_t piv = rank;
    while (piv < m.size() && m[piv][col].is_zero()) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i == rank || m[i][col].is_zero()) continue;
      Rat f = m[i][col] / m[rank][col];
      for (std::size_t j = col; j < ncols; ++j) m[i][j] -= f * m[rank][j];
    }
    ++rank;
  }
  return rank < ncols;
}

} // namespace qcdiff
