#include "quasirobust/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quasirobust/errors.hpp"

namespace quasirobust {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_dual(double y) {
  if (!(y > 0.0)) {
    std::ostringstream os;
    os << "dual variable must be positive, got " << y;
    throw Error(ErrorCode::NonpositiveDual, os.str());
  }
}

void require_nonnegative_wealth(double x) {
  if (!(x >= 0.0)) {
    std::ostringstream os;
    os << "wealth must be nonnegative, got " << x;
    throw Error(ErrorCode::NegativeWealth, os.str());
  }
}

}  // namespace

UtilitySpec UtilitySpec::log() {
  UtilitySpec s;
  s.family_ = Family::Log;
  return s;
}

UtilitySpec UtilitySpec::power(double p) {
  if (!(p < 1.0) || p == 0.0 || !std::isfinite(p)) {
    throw Error(ErrorCode::InvalidArgument, "power utility needs p < 1 and p != 0");
  }
  UtilitySpec s;
  s.family_ = Family::Power;
  s.p_ = p;
  return s;
}

UtilitySpec UtilitySpec::table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 3) throw Error(ErrorCode::InvalidArgument, "utility table needs at least 3 knots");
  UtilitySpec s;
  s.family_ = Family::Table;
  for (const auto& [x, u] : points) {
    if (!std::isfinite(x) || !std::isfinite(u) || x < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "utility table knots must be finite with x >= 0");
    }
    s.xs_.push_back(x);
    s.us_.push_back(u);
  }
  for (std::size_t k = 1; k < s.xs_.size(); ++k) {
    if (!(s.xs_[k] > s.xs_[k - 1])) throw Error(ErrorCode::InvalidArgument, "utility table x must increase strictly");
    const double slope = (s.us_[k] - s.us_[k - 1]) / (s.xs_[k] - s.xs_[k - 1]);
    if (!(slope > 0.0)) throw Error(ErrorCode::InvalidArgument, "utility table must be strictly increasing");
    if (!s.slopes_.empty() && !(slope < s.slopes_.back())) {
      throw Error(ErrorCode::InvalidArgument, "utility table must be strictly concave");
    }
    s.slopes_.push_back(slope);
  }
  return s;
}

bool UtilitySpec::minus_infinity_at_zero() const {
  switch (family_) {
    case Family::Log: return true;
    case Family::Power: return p_ < 0.0;
    case Family::Table: return false;
  }
  return false;
}

double UtilitySpec::table_value(double x) const {
  if (x < xs_.front() || x > xs_.back()) {
    std::ostringstream os;
    os << "wealth " << x << " outside utility table [" << xs_.front() << ", " << xs_.back() << "]";
    throw Error(ErrorCode::GridOutOfRange, os.str());
  }
  const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  const auto k = static_cast<std::size_t>(it - xs_.begin());
  if (k == 0) return us_.front();
  return us_[k - 1] + slopes_[k - 1] * (x - xs_[k - 1]);
}

double UtilitySpec::table_left_slope(double x) const {
  if (x < xs_.front() || x > xs_.back()) {
    std::ostringstream os;
    os << "wealth " << x << " outside utility table";
    throw Error(ErrorCode::GridOutOfRange, os.str());
  }
  // left difference on (x_{k-1}, x_k]; the first knot has only a right side
  const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  const auto k = static_cast<std::size_t>(it - xs_.begin());
  return k == 0 ? slopes_.front() : slopes_[k - 1];
}

double UtilitySpec::u(double x) const {
  switch (family_) {
    case Family::Log: return x > 0.0 ? std::log(x) : -kInf;
    case Family::Power:
      if (x > 0.0) return std::pow(x, p_) / p_;
      return p_ > 0.0 ? 0.0 : -kInf;
    case Family::Table: return table_value(x);
  }
  return 0.0;
}

double UtilitySpec::du(double x) const {
  switch (family_) {
    case Family::Log: return 1.0 / x;
    case Family::Power: return std::pow(x, p_ - 1.0);
    case Family::Table: return table_left_slope(x);
  }
  return 0.0;
}

double UtilitySpec::d2u(double x) const {
  switch (family_) {
    case Family::Log: return -1.0 / (x * x);
    case Family::Power: return (p_ - 1.0) * std::pow(x, p_ - 2.0);
    case Family::Table: return 0.0;
  }
  return 0.0;
}

double UtilitySpec::inv_du(double y) const {
  switch (family_) {
    case Family::Log: return 1.0 / y;
    case Family::Power: return std::pow(y, 1.0 / (p_ - 1.0));
    case Family::Table: {
      // generalized inverse of the decreasing step marginal: largest knot whose
      // left slope is still >= y, found by bisection over knot indices
      if (y >= slopes_.front()) return xs_.front();
      if (y <= slopes_.back()) return xs_.back();
      std::size_t lo = 0, hi = slopes_.size() - 1;  // slopes_[lo] > y >= slopes_[hi]
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (slopes_[mid] > y ? lo : hi) = mid;
      }
      return xs_[lo + 1];
    }
  }
  return 0.0;
}

double UtilitySpec::v(double y) const {
  switch (family_) {
    case Family::Log: return -std::log(y) - 1.0;
    case Family::Power: return (1.0 - p_) / p_ * std::pow(y, p_ / (p_ - 1.0));
    case Family::Table: {
      double best = -kInf;
      for (std::size_t k = 0; k < xs_.size(); ++k) best = std::max(best, us_[k] - xs_[k] * y);
      return best;
    }
  }
  return 0.0;
}

double UtilitySpec::dv(double y) const {
  if (family_ == Family::Table) {
    throw Error(ErrorCode::Unsupported, "conjugate derivative of a utility table");
  }
  return -inv_du(y);
}

double UtilitySpec::d2v(double y) const {
  switch (family_) {
    case Family::Log: return 1.0 / (y * y);
    case Family::Power: {
      const double e = 1.0 / (p_ - 1.0);
      return -e * std::pow(y, e - 1.0);
    }
    case Family::Table: throw Error(ErrorCode::Unsupported, "conjugate curvature of a utility table");
  }
  return 0.0;
}

ExtendedReal eval_utility(const UtilitySpec& spec, double x) {
  require_nonnegative_wealth(x);
  return ExtendedReal(spec.u(x));
}

double marginal(const UtilitySpec& spec, double x) {
  require_nonnegative_wealth(x);
  if (x == 0.0 && spec.family() != UtilitySpec::Family::Table) return kInf;
  return spec.du(x);
}

double inverse_marginal(const UtilitySpec& spec, double y) {
  require_positive_dual(y);
  return spec.inv_du(y);
}

ExtendedReal conjugate(const UtilitySpec& spec, double y) {
  require_positive_dual(y);
  return ExtendedReal(spec.v(y));
}

double asymptotic_elasticity(const UtilitySpec& spec) {
  switch (spec.family()) {
    case UtilitySpec::Family::Log: return 0.0;
    case UtilitySpec::Family::Power:
      if (spec.exponent() < 0.0) {
        throw Error(ErrorCode::NotApplicable, "power utility with p < 0 is negative everywhere");
      }
      return spec.exponent();
    case UtilitySpec::Family::Table: {
      const auto& xs = spec.knots_x();
      const auto& us = spec.knots_u();
      if (!(us.back() > 0.0)) throw Error(ErrorCode::NotApplicable, "tabulated utility is nonpositive at the top knot");
      // limsup over the top decade of the table, as log-log secant slopes
      const double floor_x = xs.back() / 10.0;
      double sup = -kInf;
      for (std::size_t k = 1; k < xs.size(); ++k) {
        if (xs[k - 1] < floor_x || !(us[k - 1] > 0.0)) continue;
        sup = std::max(sup, std::log(us[k] / us[k - 1]) / std::log(xs[k] / xs[k - 1]));
      }
      if (!std::isfinite(sup)) throw Error(ErrorCode::NotApplicable, "no positive knots in the top decade");
      return sup;
    }
  }
  return 0.0;
}

}  // namespace quasirobust
