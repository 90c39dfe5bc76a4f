#pragma once

#include <stdexcept>
#include <string>

namespace vws {

/// Error categories raised by the library. The category is part of the
/// contract: callers (and the CLI exit-code logic) dispatch on it.
enum class ErrorKind {
    domain,          // argument outside the operation's domain
    tolerance,       // quadrature / iteration did not reach the requested tolerance
    capability,      // request exceeds a configured capability (derivative order, m cap)
    admissibility,   // (s, k) outside 1 < s < 1 + k/2, or similar
    fit,             // degenerate regression input
    hyperbolicity,   // negative discriminant beyond roundoff
    stiffness,       // step size underflow in the mode integrator
    divergence,      // NaN/Inf in the mode solution
    config,          // scenario schema violation
    consistency,     // Hermitian-symmetry or other internal consistency violation
    io
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::tolerance: return "tolerance";
    case ErrorKind::capability: return "capability";
    case ErrorKind::admissibility: return "admissibility";
    case ErrorKind::fit: return "fit";
    case ErrorKind::hyperbolicity: return "hyperbolicity";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::config: return "config";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind)
    {
    }
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Quadrature failure; carries the last observed relative change.
class ToleranceError : public Error {
public:
    ToleranceError(const std::string& what, double residual)
        : Error(ErrorKind::tolerance, what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Step-size underflow in the mode integrator, with the diagnostic triple.
class StiffnessError : public Error {
public:
    StiffnessError(double t, double omega, double bracket)
        : Error(ErrorKind::stiffness,
                "step underflow at t=" + std::to_string(t) + " (omega=" + std::to_string(omega)
                    + ", <xi>=" + std::to_string(bracket) + ")"),
          t_(t), omega_(omega), bracket_(bracket)
    {
    }
    double t() const noexcept { return t_; }
    double omega() const noexcept { return omega_; }
    double bracket() const noexcept { return bracket_; }

private:
    double t_, omega_, bracket_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

} // namespace vws
