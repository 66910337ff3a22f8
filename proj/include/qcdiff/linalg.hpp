#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qcdiff/scalar.hpp"

namespace qcdiff {

using Coords = std::vector<std::int64_t>; // integer coordinates w.r.t. a lattice basis
using ScalarVec = std::vector<Scalar>;

struct CoordsHash {
  std::size_t operator()(const Coords& c) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (auto v : c) {
      std::uint64_t x = (std::uint64_t)v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      x *= 0xbf58476d1ce4e5b9ull;
      x ^= x >> 27;
      h ^= x;
    }
    return (std::size_t)h;
  }
};

inline Coords coords_add(const Coords& a, const Coords& b) {
  Coords r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}
inline Coords coords_sub(const Coords& a, const Coords& b) {
  Coords r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}
inline Coords coords_neg(const Coords& a) {
  Coords r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}
inline bool coords_is_zero(const Coords& a) {
  for (auto v : a) if (v != 0) return false;
  return true;
}

// Dense matrix of Scalars. Sizes stay tiny ((d+e) square), so plain
// Gauss-Jordan with exact pivoting is all we need.
class ScalarMat {
public:
  ScalarMat() : rows_(0), cols_(0) {}
  ScalarMat(std::size_t r, std::size_t c) : rows_(r), cols_(c), data_(r * c) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Scalar& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Scalar& at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  static ScalarMat identity(std::size_t n) {
    ScalarMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Scalar::exact_int(1);
    return m;
  }

  ScalarMat transposed() const {
    ScalarMat m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m.at(j, i) = at(i, j);
    return m;
  }

  ScalarVec matvec(const ScalarVec& v) const {
    if (v.size() != cols_) throw std::invalid_argument("ScalarMat: size mismatch");
    ScalarVec out(rows_, Scalar());
    for (std::size_t i = 0; i < rows_; ++i) {
      Scalar acc;
      for (std::size_t j = 0; j < cols_; ++j) acc += at(i, j) * v[j];
      out[i] = acc;
    }
    return out;
  }

  ScalarVec matvec(const Coords& n) const {
    ScalarVec v(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) v[i] = Scalar::exact_int(n[i]);
    return matvec(v);
  }

  ScalarMat mul(const ScalarMat& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("ScalarMat: size mismatch");
    ScalarMat m(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < o.cols_; ++j) {
        Scalar acc;
        for (std::size_t k = 0; k < cols_; ++k) acc += at(i, k) * o.at(k, j);
        m.at(i, j) = acc;
      }
    return m;
  }

  Scalar det() const {
    if (rows_ != cols_) throw std::invalid_argument("ScalarMat: det of non-square");
    ScalarMat m = *this;
    std::size_t n = rows_;
    Scalar d = Scalar::exact_int(1);
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      while (piv < n && m.at(piv, col).is_zero()) ++piv;
      if (piv == n) return Scalar::exact_int(0) * d; // keeps mode of inputs
      if (piv != col) {
        for (std::size_t j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(col, j));
        d = -d;
      }
      d *= m.at(col, col);
      for (std::size_t i = col + 1; i < n; ++i) {
        if (m.at(i, col).is_zero()) continue;
        Scalar f = m.at(i, col) / m.at(col, col);
        for (std::size_t j = col; j < n; ++j) m.at(i, j) -= f * m.at(col, j);
      }
    }
    return d;
  }

  ScalarMat inverse() const {
    if (rows_ != cols_) throw std::invalid_argument("ScalarMat: inverse of non-square");
    std::size_t n = rows_;
    ScalarMat m = *this, inv = identity(n);
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      if (m.at(piv, col).is_exact()) {
        while (piv < n && m.at(piv, col).is_zero()) ++piv;
      } else {
        double best = 0.0;
        piv = n;
        for (std::size_t i = col; i < n; ++i) {
          double a = std::abs(m.at(i, col).to_double());
          if (a > best) { best = a; piv = i; }
        }
      }
      if (piv >= n) throw std::domain_error("ScalarMat: singular matrix");
      if (piv != col)
        for (std::size_t j = 0; j < n; ++j) {
          std::swap(m.at(piv, j), m.at(col, j));
          std::swap(inv.at(piv, j), inv.at(col, j));
        }
      Scalar p = m.at(col, col);
      for (std::size_t j = 0; j < n; ++j) {
        m.at(col, j) = m.at(col, j) / p;
        inv.at(col, j) = inv.at(col, j) / p;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (i == col || m.at(i, col).is_zero()) continue;
        Scalar f = m.at(i, col);
        for (std::size_t j = 0; j < n; ++j) {
          m.at(i, j) -= f * m.at(col, j);
          inv.at(i, j) -= f * inv.at(col, j);
        }
      }
    }
    return inv;
  }

private:
  std::size_t rows_, cols_;
  std::vector<Scalar> data_;
};

// Exact rational nullspace test for the integer kernel questions the schemes
// need: rows are Scalars split into rational and sqrt parts beforehand.
// Returns true iff A*x = 0 has a nonzero rational solution.
bool has_nonzero_rational_kernel(const std::vector<std::vector<Rat>>& a, std::size_t ncols);

} // namespace qcdiff
