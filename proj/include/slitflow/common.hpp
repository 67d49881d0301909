#pragma once
// Shared basics: the complex alias, the error taxonomy, kappa-derived
// constants and the pinned numerical tolerances used across the library.

#include <complex>
#include <stdexcept>
#include <string>
#include <cmath>

namespace slitflow {

using cplx = std::complex<double>;
inline constexpr double PI = 3.14159265358979323846264338327950288;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// Errors. All carry a human-readable message; catching code dispatches on
// type, the CLI maps any of them to exit code 1 (2 for config problems).

struct DomainError : std::runtime_error { using std::runtime_error::runtime_error; };
struct BranchError : std::runtime_error { using std::runtime_error::runtime_error; };
struct PoleError : std::runtime_error { using std::runtime_error::runtime_error; };
struct SingularityError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NormalizationError : std::runtime_error { using std::runtime_error::runtime_error; };
struct StepError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NaNError : std::runtime_error { using std::runtime_error::runtime_error; };
struct LiftError : std::runtime_error { using std::runtime_error::runtime_error; };
struct PathError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DiagonalError : std::runtime_error { using std::runtime_error::runtime_error; };
struct BoundaryError : std::runtime_error { using std::runtime_error::runtime_error; };
struct QuadratureError : std::runtime_error { using std::runtime_error::runtime_error; };
struct FactorizationError : std::runtime_error { using std::runtime_error::runtime_error; };
struct EnsembleError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct IoError : std::runtime_error { using std::runtime_error::runtime_error; };

// ---------------------------------------------------------------------------
// kappa-derived constants of the boundary-field transformation rule.
// chi is the coefficient of arg of the derivative in the covariance rule,
// mu = i*chi/2 its holomorphic counterpart (mu* is the conjugate).

inline double chi_of(double kappa) {
  return 2.0 / std::sqrt(kappa) - std::sqrt(kappa) / 2.0;
}
inline cplx mu_of(double kappa) { return cplx(0.0, 0.5 * chi_of(kappa)); }

// ---------------------------------------------------------------------------
// Pinned tolerances. Tests and the acceptance suite reference these names;
// changing a value here is a deliberate, visible act.

namespace tol {
inline constexpr double analytic = 1e-6;    // closed-form residuals on sample sets
inline constexpr double mobius = 1e-10;     // exact-invariance residuals (r3, group law)
inline constexpr double fd = 1e-4;          // finite-difference cross-checks
inline constexpr double fd_step = 1e-5;     // base FD step (one Richardson level on top)
inline constexpr double recombine = 1e-12;  // split kernel recombination
inline constexpr double mc_sigmas = 3.0;    // MC martingale gate in standard errors
inline constexpr double singular_dist = 1e-10;  // rejection radius around map singularities
inline constexpr double diag_dist = 1e-12;      // two-point coincidence rejection
inline constexpr double kill_radius = 1e-3;     // default half-plane kill radius
}  // namespace tol

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool near(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol; }

inline void check_finite(cplx v, const char* what) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw NaNError(std::string(what) + ": non-finite value");
}

}  // namespace slitflow
