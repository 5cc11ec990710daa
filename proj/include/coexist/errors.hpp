#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coexist {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    NonConvergence,
    SignFailure,
    QuadratureFailure,
    NewtonDivergence,
    DegenerateBase,
    KernelDimensionError,
    UnsupportedModel,
    ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::SignFailure: return "SignFailure";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::DegenerateBase: return "DegenerateBase";
    case ErrorKind::KernelDimensionError: return "KernelDimensionError";
    case ErrorKind::UnsupportedModel: return "UnsupportedModel";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

} // namespace coexist
