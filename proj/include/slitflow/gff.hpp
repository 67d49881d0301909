#pragma once
// Covariance kernels of the boundary-data families with their holomorphic
// splittings, the scalar invariant j+, reconstruction of eta+ from it,
// Wick moments, and finite-dimensional Gaussian sampling over bump sets.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slitflow/fields.hpp"

namespace slitflow {

enum class KernelKind { Dirichlet, DirichletNeumann, Twisted };

struct CovarianceKernel {
  KernelKind kind = KernelKind::Dirichlet;
  Chart natural = Chart::HalfPlane;
};
CovarianceKernel make_kernel(KernelKind k);
const char* kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& s);

// Kernel value. Points may lie on the closure boundary (the closed form has a
// finite limit there); outside the closure is a BoundaryError. Coinciding
// arguments (for the twisted kernel: up to 2 pi shifts) are a DiagonalError.
double gamma_eval(const CovarianceKernel& k, Chart chart, cplx z, cplx w,
                  int branch_z = 0, int branch_w = 0);

// Holomorphic pieces in the kernel's home-chart coordinates;
// 2 Re gpp - 2 Re gpm reproduces gamma_eval.
struct SplitPieces {
  cplx gpp, gpm;
};
SplitPieces gamma_split(const CovarianceKernel& k, Chart chart, cplx z, cplx w,
                        int branch_z = 0, int branch_w = 0);

// Split pieces with the partials the residual checks consume; home chart only.
// gpm is a function of (z, zeta) with zeta the reflected second argument, so
// callers pass w and differentiate against zeta = conj(w).
struct SplitJet {
  cplx gpp, gpm;
  cplx dz_gpp, dw_gpp;
  cplx dz_gpm, dzeta_gpm;
};
SplitJet gamma_split_jet(const CovarianceKernel& k, cplx z, cplx w);

// j+ = sigma (eta+)' + mu sigma' collapses to a closed form that transforms
// as a plain scalar, so any chart is accepted.
cplx j_plus_eval(const PrePreSchwarzian& eta, Chart chart, cplx z, int branch = 0);

// Line integral of (j+ - mu sigma')/sigma from z0 to z1 along the straight
// segment; equals eta+(z1) - eta+(z0). PathError if the segment passes within
// 1e-6 of a zero of sigma.
cplx eta_plus_reconstruct(const RationalField& sigma, const std::function<cplx(cplx)>& jplus,
                          cplx mu, cplx z0, cplx z1);

// Derivative of Gamma along the flow of a field in both slots, by finite
// differences of flows. The analytic counterpart lives in the residual checks.
double lie_deriv_gamma(const CovarianceKernel& k, const RationalField& v, Chart chart,
                       cplx z, cplx w);

// Moment of order mean.size() as the sum over partitions into Gamma pairs and
// eta singletons.
double wick_sum(const std::vector<double>& mean, const std::vector<std::vector<double>>& cov);
// Same moment from pointwise kernel and one-point evaluations; eta may be
// null for the centered field.
double schwinger(const CovarianceKernel& k, const PrePreSchwarzian* eta, Chart chart,
                 const std::vector<cplx>& pts);

// ---------------------------------------------------------------------------

struct Bump {
  cplx center;
  double radius = 0.0;
  double weight = 1.0;
};
struct ObservableSet {
  Chart chart = Chart::HalfPlane;
  std::vector<Bump> bumps;
};

// radially symmetric smooth compact bump, weight * exp(1 - 1/(1 - rho^2))
double bump_density(const Bump& b, cplx z);

// pairings Gamma[f_i, f_j] and means eta[f_i] by tensor quadrature
struct PairingData {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
  double quad_error = 0.0;  // largest coarse-vs-fine discrepancy seen
};
PairingData pair_quadrature(const ObservableSet& obs, const CovarianceKernel& k,
                            const PrePreSchwarzian* eta, int threads = 1);

struct GffEnsemble {
  PairingData pairing;
  std::vector<std::vector<double>> factor;   // lower-triangular covariance factor
  std::vector<std::vector<double>> samples;  // one row per sample
  double jitter = 0.0;                       // diagonal shift the factorization needed
};
GffEnsemble gff_sample(const ObservableSet& obs, const CovarianceKernel& k,
                       const PrePreSchwarzian* eta, std::size_t n_samples, std::uint64_t seed,
                       int threads = 1);

}  // namespace slitflow
