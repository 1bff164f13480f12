#include "lqr_regret/errors.hpp"

#include "lqr_regret/types.hpp"

namespace lqr {

std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotStabilizable: return "NotStabilizable";
    case ErrorKind::CostNotPsd: return "CostNotPsd";
    case ErrorKind::CostNotPd: return "CostNotPd";
    case ErrorKind::SingularInnerMatrix: return "SingularInnerMatrix";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SpectralRadiusTooLarge: return "SpectralRadiusTooLarge";
    case ErrorKind::HorizonMismatch: return "HorizonMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ProblemTooLarge: return "ProblemTooLarge";
    case ErrorKind::AllStartsDiverged: return "AllStartsDiverged";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NotStabilizable:
    case ErrorKind::CostNotPsd:
    case ErrorKind::CostNotPd:
    case ErrorKind::InvalidModel:
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument:
      return true;
    default:
      return false;
  }
}

LqrError::LqrError(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

Horizon::Horizon(std::size_t steps) : steps_(steps) {
  if (steps == 0) throw LqrError(ErrorKind::HorizonMismatch, "horizon must have at least one step");
}

}  // namespace lqr
