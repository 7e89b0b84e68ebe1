#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace moco {

/// Closed interval [lo, hi]; unbounded ends are infinities.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval point(double v) { return {v, v}; }
  static Interval whole() { return {}; }

  bool is_point() const { return lo == hi; }
  bool is_bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool nonnegative() const { return lo >= 0.0; }
  bool nonpositive() const { return hi <= 0.0; }
};

namespace detail {
// Product of endpoints with the 0 * inf := 0 convention.
inline double iv_mul(double x, double y) {
  if (x == 0.0 || y == 0.0) return 0.0;
  return x * y;
}
}  // namespace detail

inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator+(const Interval& a, const Interval& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return {a.lo - b.hi, a.hi - b.lo};
}

inline Interval operator*(const Interval& a, const Interval& b) {
  using detail::iv_mul;
  const double p1 = iv_mul(a.lo, b.lo);
  const double p2 = iv_mul(a.lo, b.hi);
  const double p3 = iv_mul(a.hi, b.lo);
  const double p4 = iv_mul(a.hi, b.hi);
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

/// Reciprocal; undefined (whole line) when the interval spans zero.
inline Interval reciprocal(const Interval& a) {
  if (a.contains_zero()) return Interval::whole();
  return {1.0 / a.hi, 1.0 / a.lo};
}

/// Quotient; spans-zero denominators yield the whole line (callers decide
/// whether that is an error or merely a useless bound).
inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) return Interval::whole();
  return a * reciprocal(b);
}

inline Interval interval_min(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval interval_max(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
}

}  // namespace moco
