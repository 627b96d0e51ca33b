#include "quasirobust/extended_real.hpp"

#include <ostream>

#include "quasirobust/errors.hpp"

namespace quasirobust {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeWealth: return "NegativeWealth";
    case ErrorCode::NonpositiveDual: return "NonpositiveDual";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::MeasureInvariantViolated: return "MeasureInvariantViolated";
    case ErrorCode::GridOutOfRange: return "GridOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::Unattainable: return "Unattainable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Inadmissible: return "Inadmissible";
    case ErrorCode::ArbitrageDetected: return "ArbitrageDetected";
    case ErrorCode::NegativeDeflator: return "NegativeDeflator";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NoArbitrageViolated: return "NoArbitrageViolated";
    case ErrorCode::Infinite: return "Infinite";
    case ErrorCode::MembershipFailed: return "MembershipFailed";
    case ErrorCode::AllInfinite: return "AllInfinite";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::SaddleInequalityViolated: return "SaddleInequalityViolated";
    case ErrorCode::ScaleRefused: return "ScaleRefused";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

ExtendedReal::ExtendedReal(double v) : v_(v) {
  if (std::isnan(v)) throw Error(ErrorCode::DomainError, "NaN is not an extended real");
}

ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
  if (a.is_pos_inf() || b.is_pos_inf()) return ExtendedReal::pos_inf();
  return ExtendedReal(ExtendedReal::Raw{}, a.v_ + b.v_);
}

ExtendedReal operator*(ExtendedReal a, ExtendedReal b) {
  if (a.v_ == 0.0 || b.v_ == 0.0) return ExtendedReal(0.0);
  return ExtendedReal(ExtendedReal::Raw{}, a.v_ * b.v_);
}

std::ostream& operator<<(std::ostream& os, ExtendedReal x) { return os << x.value(); }

}  // namespace quasirobust
