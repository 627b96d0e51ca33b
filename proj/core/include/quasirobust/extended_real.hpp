#pragma once

#include <cmath>
#include <compare>
#include <iosfwd>
#include <limits>

namespace quasirobust {

/// A value in [-inf, +inf] that never holds NaN.
///
/// Arithmetic follows the conventions used for robust criteria:
///   * inf + (-inf) := +inf  (an expectation whose positive and negative parts
///     both diverge is taken to be +inf),
///   * 0 * (+-inf) := 0      (null states never contribute).
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  ExtendedReal(double v);  // NOLINT: implicit by intent

  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Raw{}, std::numeric_limits<double>::infinity()); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Raw{}, -std::numeric_limits<double>::infinity()); }

  constexpr double value() const { return v_; }
  bool is_finite() const { return std::isfinite(v_); }
  constexpr bool is_pos_inf() const { return v_ == std::numeric_limits<double>::infinity(); }
  constexpr bool is_neg_inf() const { return v_ == -std::numeric_limits<double>::infinity(); }

  friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b);
  friend ExtendedReal operator-(ExtendedReal a) { return ExtendedReal(Raw{}, -a.v_); }
  friend ExtendedReal operator-(ExtendedReal a, ExtendedReal b) { return a + (-b); }
  friend ExtendedReal operator*(ExtendedReal a, ExtendedReal b);

  ExtendedReal& operator+=(ExtendedReal o) { return *this = *this + o; }

  friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) { return a.v_ == b.v_; }
  friend constexpr std::partial_ordering operator<=>(ExtendedReal a, ExtendedReal b) { return a.v_ <=> b.v_; }

 private:
  struct Raw {};
  constexpr ExtendedReal(Raw, double v) : v_(v) {}
  double v_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, ExtendedReal x);

}  // namespace quasirobust
