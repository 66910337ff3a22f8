#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "qcdiff/rational.hpp"

namespace qcdiff {

// Number in Q(sqrt(root)) stored as a + b*sqrt(root), or a plain double.
// Exact scalars give tolerance-free window membership and lattice algebra;
// floating ones back arbitrary user matrices. Mixing the two demotes to
// floating. Two exact scalars with different nonzero roots do not mix.
class Scalar {
public:
  Scalar() : exact_(true), a_(0), b_(0), root_(0), fp_(0.0) {}

  static Scalar exact(Rat a, Rat b = Rat(0), std::int64_t root = 0) {
    if (root < 0) throw std::domain_error("Scalar: negative root");
    Scalar s;
    s.exact_ = true;
    s.a_ = a;
    s.b_ = (root == 0) ? Rat(0) : b;
    if (root == 0 && !b.is_zero())
      throw std::domain_error("Scalar: sqrt term without a root");
    s.root_ = s.b_.is_zero() ? 0 : root;
    return s;
  }
  static Scalar exact_int(std::int64_t n) { return exact(Rat(n)); }
  static Scalar fp(double v) {
    Scalar s;
    s.exact_ = false;
    s.fp_ = v;
    return s;
  }

  bool is_exact() const { return exact_; }
  const Rat& rat_part() const { return a_; }
  const Rat& irr_part() const { return b_; }
  std::int64_t root() const { return root_; }

  double to_double() const {
    if (!exact_) return fp_;
    double v = a_.to_double();
    if (!b_.is_zero()) v += b_.to_double() * std::sqrt((double)root_);
    return v;
  }

  Scalar operator-() const {
    if (!exact_) return fp(-fp_);
    return exact(-a_, -b_, root_);
  }

  Scalar operator+(const Scalar& o) const {
    if (exact_ && o.exact_) {
      std::int64_t r = join_root(o);
      return exact(a_ + o.a_, b_ + o.b_, r);
    }
    return fp(to_double() + o.to_double());
  }
  Scalar operator-(const Scalar& o) const { return *this + (-o); }

  Scalar operator*(const Scalar& o) const {
    if (exact_ && o.exact_) {
      std::int64_t r = join_root(o);
      Rat a = a_ * o.a_ + b_ * o.b_ * Rat(r);
      Rat b = a_ * o.b_ + b_ * o.a_;
      return exact(a, b, r);
    }
    return fp(to_double() * o.to_double());
  }

  Scalar operator/(const Scalar& o) const {
    if (exact_ && o.exact_) {
      std::int64_t r = join_root(o);
      Rat norm = o.a_ * o.a_ - o.b_ * o.b_ * Rat(r);
      if (norm.is_zero()) throw std::domain_error("Scalar: division by zero");
      // (a + b rt)(c - d rt) / (c^2 - d^2 r)
      Rat a = (a_ * o.a_ - b_ * o.b_ * Rat(r)) / norm;
      Rat b = (b_ * o.a_ - a_ * o.b_) / norm;
      return exact(a, b, r);
    }
    return fp(to_double() / o.to_double());
  }

  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }

  bool is_zero() const { return exact_ ? (a_.is_zero() && b_.is_zero()) : fp_ == 0.0; }

  int sign() const {
    if (!exact_) return fp_ > 0 ? 1 : (fp_ < 0 ? -1 : 0);
    if (b_.is_zero()) return a_.sign();
    if (a_.is_zero()) return b_.sign();
    int sa = a_.sign(), sb = b_.sign();
    if (sa == sb) return sa;
    // a and b*sqrt(r) compete: compare a^2 against r*b^2
    Rat lhs = a_ * a_, rhs = b_ * b_ * Rat(root_);
    int c = lhs.cmp(rhs);
    if (c == 0) return 0; // only if root is a perfect square; cannot happen for square-free root
    return c > 0 ? sa : sb;
  }

  int cmp(const Scalar& o) const {
    if (exact_ && o.exact_) return (*this - o).sign();
    double x = to_double(), y = o.to_double();
    return x > y ? 1 : (x < y ? -1 : 0);
  }
  bool operator<(const Scalar& o) const { return cmp(o) < 0; }
  bool operator<=(const Scalar& o) const { return cmp(o) <= 0; }
  bool operator==(const Scalar& o) const { return cmp(o) == 0; }
  bool operator!=(const Scalar& o) const { return cmp(o) != 0; }

  std::string str() const {
    if (!exact_) return std::to_string(fp_);
    if (b_.is_zero()) return a_.str();
    return a_.str() + "+" + b_.str() + "*rt" + std::to_string(root_);
  }

private:
  bool exact_;
  Rat a_, b_;
  std::int64_t root_;
  double fp_;

  std::int64_t join_root(const Scalar& o) const {
    if (root_ == 0) return o.root_;
    if (o.root_ == 0) return root_;
    if (root_ != o.root_)
      throw std::domain_error("Scalar: mixing distinct quadratic fields");
    return root_;
  }
};

} // namespace qcdiff
