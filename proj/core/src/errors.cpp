#include "glmep/errors.hpp"

namespace glmep {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonIntegrable: return "NonIntegrable";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::NotPD: return "NotPD";
        case ErrorCode::ThresholdViolation: return "ThresholdViolation";
        case ErrorCode::InfeasibleThreshold: return "InfeasibleThreshold";
        case ErrorCode::NonIntegrableBelief: return "NonIntegrableBelief";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ZeroSignal: return "ZeroSignal";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace glmep
