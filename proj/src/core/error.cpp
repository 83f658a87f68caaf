#include "core/error.hpp"

namespace dppp {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpectrumViolation: return "SpectrumViolation";
    case ErrorCode::AsymmetryError: return "AsymmetryError";
    case ErrorCode::SeriesDivergence: return "SeriesDivergence";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::SizeLimit: return "SizeLimit";
    case ErrorCode::UnsupportedAlpha: return "UnsupportedAlpha";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::NormViolation: return "NormViolation";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace dppp
