#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqr {

enum class ErrorKind {
  DimensionMismatch,
  NotStabilizable,
  CostNotPsd,
  CostNotPd,
  SingularInnerMatrix,
  NoConvergence,
  SpectralRadiusTooLarge,
  HorizonMismatch,
  NotPositiveDefinite,
  ProblemTooLarge,
  AllStartsDiverged,
  NonFiniteState,
  InvalidModel,
  ParseError,
  InvalidArgument,
};

std::string_view error_name(ErrorKind kind) noexcept;

// Validation-class errors describe a bad problem instance rather than a
// numerical breakdown; the CLI maps them to a different exit status.
bool is_validation_error(ErrorKind kind) noexcept;

class LqrError : public std::runtime_error {
 public:
  LqrError(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace lqr
