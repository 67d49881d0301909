#pragma once
// Residual checks of the three coupling equations between a slit field pair
// and Gaussian boundary data, grid scans that classify which pairs admit a
// kernel, and Monte-Carlo martingale verification of the pushforward
// observables along simulated flows.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "slitflow/fields.hpp"
#include "slitflow/gff.hpp"
#include "slitflow/loewner.hpp"

namespace slitflow {

// Sample points and pairs live in the kernel's natural chart.
struct CouplingProblem {
  SlitFieldPair pair;
  CovarianceKernel kernel;
  PrePreSchwarzian eta;
  std::vector<cplx> points;
  std::vector<std::pair<cplx, cplx>> point_pairs;
  double fd_step = tol::fd_step;
  Route route = Route::Analytic;
};

// Low-discrepancy interior samples, clear of the field pole, the chart
// boundary, and the kernel diagonal by fixed margins.
std::vector<cplx> default_sample_points(const CovarianceKernel& k, std::size_t n);
std::vector<std::pair<cplx, cplx>> default_sample_pairs(const CovarianceKernel& k,
                                                        std::size_t n);

CouplingProblem make_problem(const SlitFieldPair& pair, const CovarianceKernel& kernel,
                             const PrePreSchwarzian& eta, std::size_t n_points = 200);

enum class McObservable { M1Eta, M2TwoPoint };
const char* mc_observable_name(McObservable o);

struct McStat {
  McObservable observable = McObservable::M1Eta;
  std::vector<cplx> points;
  double t = 0.0;
  std::size_t n = 0;
  double base = 0.0;  // observable at time zero
  double mean = 0.0;
  double std_err = 0.0;
  double z_score = 0.0;
  double kill_fraction = 0.0;
  bool kill_warning = false;  // raised when more than 20% of paths die
};

struct CouplingReport {
  double r1_max = 0.0, r2_max = 0.0, r3_max = 0.0;
  cplx argmax1;                       // sample point of the worst one-point residual
  std::pair<cplx, cplx> argmax2, argmax3;
  std::size_t skipped = 0;            // samples dropped on singular evaluations
  double tolerance = tol::analytic;
  bool pass = false;
  std::vector<McStat> mc;
};

// Residuals of the martingale equation (r1, one-point), the variation
// equation on the holomorphic split with the pair-pinned gauge (r2,
// two-point), and sigma-invariance of the kernel (r3, two-point).
// route = Analytic uses closed-form jets; FlowFD differentiates flows and
// replaces r2 by the full real-kernel residual (which is gauge-free).
CouplingReport residual_system(const CouplingProblem& p, int threads = 1);

// Residual of the derived consistency relation obtained by differentiating
// the variation equation along sigma: L_[delta,sigma] Gamma against the
// symmetrized product of second and first sigma-derivatives of eta.
double cross_relation(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                      const CovarianceKernel& kernel, cplx z, cplx w);

struct ScanSpec {
  Family family = Family::ChordalDrift;
  double kappa = 4.0;
  double nu = 0.0;
  double xi = 0.0;
};
struct ScanVerdict {
  ScanSpec spec;
  bool pass = false;
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  std::string note;  // evaluation errors, empty on a clean cell
};

// Boundary-data family matched to a kernel: the Dirichlet kernel pairs with
// the slit family's own data, the mixed and twisted kernels with theirs.
EtaFamily eta_family_for(KernelKind kind, Family family);

std::vector<ScanVerdict> scan_selection(const std::vector<ScanSpec>& grid,
                                        const CovarianceKernel& kernel, int threads = 1);

// Sample mean of the stopped pushforward observable at time t against its
// initial value. M1Eta takes one point per stat; M2TwoPoint takes exactly two
// points and needs the kernel for its covariance term. Dead paths contribute
// their value at death; more than half the ensemble dying is an EnsembleError.
std::vector<McStat> mc_martingale(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                                  McObservable obs, const std::vector<cplx>& points,
                                  double t, std::size_t n_paths, double dt,
                                  std::uint64_t seed, int threads = 1,
                                  const CovarianceKernel* kernel = nullptr);

struct DriftEstimate {
  double value = 0.0;    // (mean M_h - M_0) / h
  double std_err = 0.0;  // standard error of the same ratio
  double base = 0.0;     // M_0
  std::size_t n = 0;
};

// Short-time drift of the pushforward observable, h in [1e-5, 1e-2].
DriftEstimate drift_estimate(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                             cplx point, double h, std::size_t n_paths, std::uint64_t seed,
                             int threads = 1);
// Same for a plain scalar observable X(w) carried by the flow.
DriftEstimate drift_estimate(const SlitFieldPair& pair, const std::function<double(cplx)>& X,
                             Chart chart, cplx point, double h, std::size_t n_paths,
                             std::uint64_t seed, int threads = 1);

}  // namespace slitflow
