#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quasirobust {

/// Failure categories raised by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
  NegativeWealth,
  NonpositiveDual,
  NotApplicable,
  MeasureInvariantViolated,
  GridOutOfRange,
  DomainError,
  Unattainable,
  DimensionMismatch,
  InvalidArgument,
  Inadmissible,
  ArbitrageDetected,
  NegativeDeflator,
  Unbounded,
  NoArbitrageViolated,
  Infinite,
  MembershipFailed,
  AllInfinite,
  AssumptionViolated,
  NonConvergence,
  PreconditionViolated,
  SaddleInequalityViolated,
  ScaleRefused,
  Unsupported,
  SchemaError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace quasirobust
