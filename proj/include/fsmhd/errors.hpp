#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fsmhd {

enum class ErrorCode {
    DiffeomorphismViolation,
    NonSmoothInput,
    ShapeMismatch,
    EllipticSolveFailure,
    SolvabilityViolation,
    DegenerateSystem,
    TaylorSignViolation,
    CflViolation,
    InsufficientHistory,
    CharacteristicEscape,
    PicardDivergence,
    SweepInsufficient,
    DegenerateFit,
    ConfigError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace fsmhd
