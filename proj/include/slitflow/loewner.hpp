#pragma once
// Forward integration of the slit-flow SDE/ODE, Mobius flows of complete
// fields, backward-flow trace extraction, and the deterministic time-change
// equivalence. The Ito engine always integrates in the half-plane chart and
// transports results; the Stratonovich (Heun) engine steps natively in the
// requested chart and serves as a cross-validation oracle. Deterministic
// driving uses RK4 and continues through the driving pole on the principal
// branch of the squared variable, so swallowed points carry the right-hand
// boundary value of the flow map.

#include <cstdint>
#include <utility>
#include <vector>

#include "slitflow/common.hpp"
#include "slitflow/fields.hpp"
#include "slitflow/geometry.hpp"

namespace slitflow {

enum class DrivingKind { BrownianKappa, Deterministic };

// law (BrownianKappa) or sample path (Deterministic) of u_t = sqrt(kappa) B_t
struct DrivingPath {
  DrivingKind kind = DrivingKind::BrownianKappa;
  double kappa = 4.0;
  std::uint64_t seed = 0;
  std::vector<double> times;   // Deterministic only: strictly increasing, from 0
  std::vector<double> values;  // u at those times, u_0 = 0
};
DrivingPath make_brownian_driving(double kappa, std::uint64_t seed);
// ConfigError on a bad grid (not from 0, not increasing, size mismatch, u_0 != 0)
DrivingPath make_deterministic_driving(std::vector<double> times, std::vector<double> values,
                                       double kappa = 4.0);

struct StopRule {
  double kill_radius = tol::kill_radius;  // half-plane distance to the pole
  double neighborhood_eps = 1e-4;
};

enum class Engine { Ito, Strat };

struct FlowState {
  cplx w;                // current point, in the chart the stepper works in
  cplx log_d{0.0, 0.0};  // log of the flow derivative (keeps arg continuous)
  double t = 0.0;
  bool alive = true;
  double death_time = -1.0;  // < 0 while alive
};
inline cplx flow_deriv(const FlowState& s) { return std::exp(s.log_d); }

// one-parameter group of a complete field, real 2x2 half-plane convention
struct MobiusMap {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  cplx apply(cplx z) const;
  cplx deriv(cplx z) const;
};
MobiusMap mobius_flow(const RationalField& sigma, double s);
MobiusMap compose(const MobiusMap& f, const MobiusMap& g);  // f after g

// single explicit steps; StepError if dt exceeds the adaptive cap
// 0.05 |w - pole|^2, death recorded in the returned state (not an error)
FlowState step_ito(const SlitFieldPair& pair, const FlowState& s, double dt, double dB,
                   const StopRule& stop = {});
FlowState step_strat(const SlitFieldPair& pair, Chart chart, const FlowState& s, double dt,
                     double dB, const StopRule& stop = {});

struct TrackedPoint {
  cplx z0;
  std::vector<cplx> w;  // per grid time, evaluation-chart coordinates
  std::vector<cplx> d;  // flow derivative per grid time
  bool alive = true;
  double death_time = -1.0;
};

struct LoewnerRun {
  SlitFieldPair pair;
  Chart chart = Chart::HalfPlane;
  DrivingPath driving;
  std::uint64_t path_id = 0;
  Engine engine = Engine::Ito;
  StopRule stop;
  double dt = 1e-3;
  std::vector<double> times;        // base grid k*dt, starts at 0
  std::vector<double> u;            // realized driving at the grid times
  std::vector<TrackedPoint> tracked;
  std::vector<FlowState> final_states;  // integration-chart states, for continuation
};

// t_max must be a (near-)multiple of dt so continuation reuses the same base
// cells; points are interior to the chart. A point whose step degenerates
// (kill radius, chart exit, non-finite value) is recorded dead; others go on.
LoewnerRun run(const SlitFieldPair& pair, Chart chart, const std::vector<cplx>& points,
               double t_max, double dt, const DrivingPath& driving,
               std::uint64_t path_id = 0, const StopRule& stop = {},
               Engine engine = Engine::Ito);
LoewnerRun run_continue(const LoewnerRun& prior, double extra_t);

// final state only, same trajectory as run(); the monte carlo workhorse
FlowState evolve_point(const SlitFieldPair& pair, Chart chart, cplx z, double t_max,
                       double dt, const DrivingPath& driving, std::uint64_t path_id = 0,
                       const StopRule& stop = {}, Engine engine = Engine::Ito);

// slit tip gamma(t): backward flow of pole + i*eps from t to 0, half-plane
// coordinates; LiftError if the backward flow exits the chart
std::vector<cplx> trace(const SlitFieldPair& pair, const std::vector<double>& t_grid,
                        const DrivingPath& driving, double eps = 1e-4,
                        std::uint64_t path_id = 0, double dt = 1e-3);

// lambda(t~) = (1 - e^{-4 xi t~})/(4 xi) and the scale factor e^{2 xi t~};
// ConfigError if xi == 0
std::pair<double, double> timechange_case2(double xi, double t_tilde);

}  // namespace slitflow
