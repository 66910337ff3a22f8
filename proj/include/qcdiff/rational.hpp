#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qcdiff {

// Exact rational on int64 with __int128 intermediates. Overflow throws
// rather than wrapping; desk-scale geometry never gets near the limit.
class Rat {
public:
  Rat() : num_(0), den_(1) {}
  Rat(std::int64_t n) : num_(n), den_(1) {}
  Rat(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  static Rat make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("Rat: zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    Rat r;
    r.num_ = narrow(n);
    r.den_ = narrow(d);
    return r;
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  Rat operator-() const { return make(-(__int128)num_, den_); }
  Rat operator+(const Rat& o) const {
    return make((__int128)num_ * o.den_ + (__int128)o.num_ * den_,
                (__int128)den_ * o.den_);
  }
  Rat operator-(const Rat& o) const { return *this + (-o); }
  Rat operator*(const Rat& o) const {
    return make((__int128)num_ * o.num_, (__int128)den_ * o.den_);
  }
  Rat operator/(const Rat& o) const {
    if (o.num_ == 0) throw std::domain_error("Rat: division by zero");
    return make((__int128)num_ * o.den_, (__int128)den_ * o.num_);
  }
  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

  // sign of (*this - o) without materializing the difference
  int cmp(const Rat& o) const {
    __int128 lhs = (__int128)num_ * o.den_;
    __int128 rhs = (__int128)o.num_ * den_;
    return lhs > rhs ? 1 : (lhs < rhs ? -1 : 0);
  }
  bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const { return cmp(o) < 0; }
  bool operator<=(const Rat& o) const { return cmp(o) <= 0; }

  double to_double() const { return (double)num_ / (double)den_; }

  // "3", "-3/4", "0.25", "-1.5e-3" -> exact value of the decimal literal
  static Rat from_string(std::string_view s);

  std::string str() const {
    std::string out = std::to_string(num_);
    if (den_ != 1) out += "/" + std::to_string(den_);
    return out;
  }

private:
  std::int64_t num_, den_;

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    return a < 0 ? -a : a;
  }
  static std::int64_t narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN)
      throw std::overflow_error("Rat: 64-bit overflow");
    return (std::int64_t)v;
  }
};

inline Rat Rat::from_string(std::string_view s) {
  // strip spaces
  std::string t;
  for (char c : s) if (c != ' ') t += c;
  if (t.empty()) throw std::invalid_argument("Rat: empty literal");
  auto slash = t.find('/');
  if (slash != std::string::npos) {
    Rat n = from_string(t.substr(0, slash));
    Rat d = from_string(t.substr(slash + 1));
    return n / d;
  }
  // decimal with optional exponent
  bool neg = false;
  size_t i = 0;
  if (t[i] == '+' || t[i] == '-') { neg = t[i] == '-'; ++i; }
  __int128 mant = 0;
  long frac_digits = 0, exp10 = 0;
  bool seen_dot = false, seen_digit = false;
  for (; i < t.size(); ++i) {
    char c = t[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("Rat: bad literal '" + t + "'");
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      exp10 = std::stol(t.substr(i + 1));
      break;
    } else if (c >= '0' && c <= '9') {
      mant = mant * 10 + (c - '0');
      if (mant > (__int128)1 << 100) throw std::overflow_error("Rat: literal too long");
      if (seen_dot) ++frac_digits;
      seen_digit = true;
    } else {
      throw std::invalid_argument("Rat: bad literal '" + t + "'");
    }
  }
  if (!seen_digit) throw std::invalid_argument("Rat: bad literal '" + t + "'");
  if (neg) mant = -mant;
  long net = exp10 - frac_digits;
  __int128 num = mant, den = 1;
  for (long k = 0; k < net; ++k) num *= 10;
  for (long k = 0; k > net; --k) den *= 10;
  return make(num, den);
}

} // namespace qcdiff
