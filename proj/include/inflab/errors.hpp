#pragma once

#include <stdexcept>
#include <string>

namespace inflab {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Grid/field invariant violations (non-finite data, mismatched sizes, ...).
struct InvariantViolation : Error {
    explicit InvariantViolation(const std::string& msg) : Error(msg) {}
};

struct InvalidEpsilon : InvalidArgument {
    explicit InvalidEpsilon(double eps)
        : InvalidArgument("epsilon must lie in (0,1], got " + std::to_string(eps)) {}
};

/// Iteration failed to reach its tolerance; carries the final residual.
struct NonConvergence : Error {
    double final_residual;
    NonConvergence(const std::string& what, double residual)
        : Error(what + " (final residual " + std::to_string(residual) + ")"),
          final_residual(residual) {}
};

struct SingularNode : Error {
    explicit SingularNode(const std::string& msg) : Error(msg) {}
};

struct InsufficientLevels : InvalidArgument {
    explicit InsufficientLevels(int got)
        : InvalidArgument("dyadic fit needs >= 5 levels, got " + std::to_string(got)) {}
};

struct SupportViolation : InvalidArgument {
    explicit SupportViolation(const std::string& msg) : InvalidArgument(msg) {}
};

struct MissingEpsilon : InvalidArgument {
    explicit MissingEpsilon(const std::string& which)
        : InvalidArgument("check '" + which + "' requires the solver epsilon") {}
};

struct DegenerateDistance : InvalidArgument {
    explicit DegenerateDistance(double sep, double h)
        : InvalidArgument("subdomain separation " + std::to_string(sep) +
                          " below 4h = " + std::to_string(4.0 * h)) {}
};

struct DegenerateGradient : Error {
    explicit DegenerateGradient(const std::string& msg) : Error(msg) {}
};

struct UnsupportedExponent : InvalidArgument {
    explicit UnsupportedExponent(const std::string& msg) : InvalidArgument(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

}  // namespace inflab
