#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qembound {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  // ccr_algebra
  odd_dimension,
  not_antisymmetric,
  singular_ccr,
  eigen_solver_failure,
  unsupported_function,
  // states
  not_admissible,
  not_positive_definite,
  norm_divergent,
  // qem
  risk_parameter_too_large,
  weight_out_of_interval,
  empty_feasible_window,
  invalid_range,
  step_too_large_near_boundary,
  numerical_overflow,
  // oqho
  expm_failure,
  not_hurwitz,
  lambda_too_small,
  empty_interval,
  internal_admissibility_violation,
  // classical_oracle
  suspected_divergence,
  // cli
  config_parse,
  io_error,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::odd_dimension: return "OddDimension";
    case ErrorKind::not_antisymmetric: return "NotAntisymmetric";
    case ErrorKind::singular_ccr: return "SingularCcr";
    case ErrorKind::eigen_solver_failure: return "EigenSolverFailure";
    case ErrorKind::unsupported_function: return "UnsupportedFunction";
    case ErrorKind::not_admissible: return "NotAdmissible";
    case ErrorKind::not_positive_definite: return "NotPositiveDefinite";
    case ErrorKind::norm_divergent: return "NormDivergent";
    case ErrorKind::risk_parameter_too_large: return "RiskParameterTooLarge";
    case ErrorKind::weight_out_of_interval: return "WeightOutOfInterval";
    case ErrorKind::empty_feasible_window: return "EmptyFeasibleWindow";
    case ErrorKind::invalid_range: return "InvalidRange";
    case ErrorKind::step_too_large_near_boundary: return "StepTooLargeNearBoundary";
    case ErrorKind::numerical_overflow: return "NumericalOverflowDespiteLogSpace";
    case ErrorKind::expm_failure: return "ExpmFailure";
    case ErrorKind::not_hurwitz: return "NotHurwitz";
    case ErrorKind::lambda_too_small: return "LambdaTooSmall";
    case ErrorKind::empty_interval: return "EmptyInterval";
    case ErrorKind::internal_admissibility_violation: return "InternalAdmissibilityViolation";
    case ErrorKind::suspected_divergence: return "SuspectedDivergence";
    case ErrorKind::config_parse: return "ConfigParse";
    case ErrorKind::io_error: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it onto a report status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when μ·ρ(C K(μ)) >= 1; carries the critical risk sensitivity.
class RiskParameterTooLarge : public Error {
 public:
  RiskParameterTooLarge(double mu, double critical)
      : Error(ErrorKind::risk_parameter_too_large,
              "mu = " + std::to_string(mu) + " is not below the critical value " +
                  std::to_string(critical)),
        critical_mu_(critical) {}

  double critical_mu() const noexcept { return critical_mu_; }

 private:
  double critical_mu_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace qembound
