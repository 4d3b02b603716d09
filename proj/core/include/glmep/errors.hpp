#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glmep {

enum class ErrorCode {
    NonIntegrable,
    DegenerateVariance,
    SingularMatrix,
    NotPD,
    ThresholdViolation,
    InfeasibleThreshold,
    NonIntegrableBelief,
    InvalidArgument,
    ZeroSignal,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (the EPC scheduler in particular) can branch on the kind of failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace glmep
