#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace bloch {

using cplx = std::complex<double>;
using namespace std::complex_literals;

inline constexpr double pi = 3.14159265358979323846;

// Error taxonomy. Everything thrown by the library derives from Error so the
// CLI can map failures to exit code 1 uniformly.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};

// Requested truncation would silently drop coefficient harmonics.
struct TruncationError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Grid cannot resolve the requested operation (aliasing detector tripped).
struct ResolutionError : Error {
    using Error::Error;
};

// Analytic oracle asked for an operator it does not cover.
struct OracleError : Error {
    using Error::Error;
};

// An eigenvalue sits too close to (or on the wrong side of) a contour.
struct ContourError : Error {
    using Error::Error;
};

struct SolverError : Error {
    using Error::Error;
};

struct OverflowError : Error {
    using Error::Error;
};

struct DiagnosticsError : Error {
    using Error::Error;
};

// A theorem-side precondition (e.g. p*lambda_M > lambda_0) fails.
struct HypothesisError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Exit-code semantics for the CLI: 0 completed, 2 hypotheses unmet, 1 error.
enum class RunStatus { ok = 0, error = 1, hypotheses_unmet = 2 };

}  // namespace bloch
