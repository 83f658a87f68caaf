#pragma once

#include <stdexcept>
#include <string>

namespace dppp {

enum class ErrorCode {
  InvalidArgument = 1,
  SpectrumViolation,
  AsymmetryError,
  SeriesDivergence,
  NegativeWeight,
  NotInvertible,
  SizeLimit,
  UnsupportedAlpha,
  ZeroDenominator,
  NormViolation,
  DegenerateConfiguration,
  DegenerateDenominator,
  ZeroDensity,
  StepTooLarge,
  ConfigError,
};

const char* error_code_name(ErrorCode code) noexcept;

// Single exception type for the core; the C API maps `code()` to a status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dppp
