#pragma once

#include <utility>
#include <vector>

#include "quasirobust/extended_real.hpp"

namespace quasirobust {

/// von Neumann-Morgenstern utility on (0, inf) together with its marginal,
/// inverse marginal I = (U')^{-1} and convex conjugate V(y) = sup_x (U(x) - xy).
///
/// Three families are supported:
///   * log:    U(x) = ln x
///   * power:  U(x) = x^p / p with p < 1, p != 0
///   * table:  piecewise-linear interpolation of strictly concave knots;
///             test-only, neither strictly concave nor Inada.
///
/// At x = 0 the right limit is used (-inf for log and p < 0, 0 for p in (0,1)).
class UtilitySpec {
 public:
  enum class Family { Log, Power, Table };

  static UtilitySpec log();
  static UtilitySpec power(double p);
  static UtilitySpec table(std::vector<std::pair<double, double>> points);

  Family family() const { return family_; }
  double exponent() const { return p_; }
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_u() const { return us_; }

  // Unchecked kernels for inner loops. Callers guarantee x >= 0 and y > 0.
  double u(double x) const;
  double du(double x) const;
  double d2u(double x) const;
  double inv_du(double y) const;
  double v(double y) const;
  double dv(double y) const;
  double d2v(double y) const;

  /// True when U(0+) = -inf, i.e. zero wealth is never acceptable under a
  /// measure charging that state.
  bool minus_infinity_at_zero() const;

 private:
  UtilitySpec() = default;
  // table helpers
  double table_value(double x) const;
  double table_left_slope(double x) const;

  Family family_ = Family::Log;
  double p_ = 0.0;
  std::vector<double> xs_, us_, slopes_;
};

/// U(x). Throws NegativeWealth for x < 0, GridOutOfRange outside a table.
ExtendedReal eval_utility(const UtilitySpec& spec, double x);

/// U'(x); tables use the left divided difference (right difference at the first knot).
double marginal(const UtilitySpec& spec, double x);

/// I(y) with U'(I(y)) = y. Tables use bisection over the knots.
double inverse_marginal(const UtilitySpec& spec, double y);

/// V(y) = sup_{x >= 0} (U(x) - xy).
ExtendedReal conjugate(const UtilitySpec& spec, double y);

/// limsup_{x -> inf} x U'(x) / U(x). Throws NotApplicable when U is eventually
/// nonpositive.
double asymptotic_elasticity(const UtilitySpec& spec);

}  // namespace quasirobust
