#include "slitflow/loewner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "slitflow/rng.hpp"

namespace slitflow {

namespace {

constexpr double kAdapt = 0.05;   // dt cap coefficient on |w - pole|^2
constexpr double kSwitch = 0.05;  // squared-variable region for deterministic runs
constexpr int kMaxDepth = 48;

// piecewise-linear driving samples
double u_interp(const DrivingPath& drv, double t) {
  const auto& T = drv.times;
  const auto& U = drv.values;
  if (t <= T.front()) return U.front();
  if (t >= T.back()) {
    if (t > T.back() + 1e-9 * std::max(1.0, T.back()))
      throw ConfigError("driving samples do not cover the requested time");
    return U.back();
  }
  auto it = std::upper_bound(T.begin(), T.end(), t);
  auto j = static_cast<std::size_t>(it - T.begin());
  double s = (t - T[j - 1]) / (T[j] - T[j - 1]);
  return U[j - 1] + s * (U[j] - U[j - 1]);
}

double u_slope(const DrivingPath& drv, double t) {
  const auto& T = drv.times;
  const auto& U = drv.values;
  double tc = std::clamp(t, T.front(), T.back());
  auto it = std::upper_bound(T.begin(), T.end(), tc);
  auto j = static_cast<std::size_t>(it - T.begin());
  if (j >= T.size()) j = T.size() - 1;
  if (j == 0) j = 1;
  return (U[j] - U[j - 1]) / (T[j] - T[j - 1]);
}

struct StepCtx {
  const SlitFieldPair* pair = nullptr;
  Chart ichart = Chart::HalfPlane;  // chart the stepper works in
  const DrivingPath* drv = nullptr;
  std::uint64_t path_id = 0;
  StopRule stop;
  Engine eng = Engine::Ito;
  bool det = false;
  double sqrt_kappa = 2.0;
  std::array<double, 4> d4{};  // Laurent data for the squared-variable mode
  std::array<double, 3> s3{};
};

cplx half_plane_rep(Chart chart, cplx w) {
  if (chart == Chart::HalfPlane) return w;
  return transition_eval(Transition{chart, Chart::HalfPlane, 0}, w).first;
}

void commit(FlowState& st, cplx w, cplx log_d) {
  check_finite(w, "flow step");
  check_finite(log_d, "flow step");
  st.w = w;
  st.log_d = log_d;
}

void em_step(const StepCtx& cx, FlowState& st, double h, double dB) {
  FieldJet D = vf_eval_jet(cx.pair->delta, Chart::HalfPlane, st.w);
  FieldJet S = vf_eval_jet(cx.pair->sigma, Chart::HalfPlane, st.w);
  commit(st, st.w + (D.v + 0.5 * S.v * S.dv) * h + S.v * dB,
         st.log_d + (D.dv + 0.5 * S.v * S.d2v) * h + S.dv * dB);
}

// sign = -1 reverses the field and the increment (pathwise flow inversion)
void heun_step(const StepCtx& cx, FlowState& st, double h, double dB, double sign) {
  FieldJet D0 = vf_eval_jet(cx.pair->delta, cx.ichart, st.w);
  FieldJet S0 = vf_eval_jet(cx.pair->sigma, cx.ichart, st.w);
  cplx wp = st.w + sign * (D0.v * h + S0.v * dB);
  check_finite(wp, "predictor step");
  FieldJet D1 = vf_eval_jet(cx.pair->delta, cx.ichart, wp);
  FieldJet S1 = vf_eval_jet(cx.pair->sigma, cx.ichart, wp);
  commit(st, st.w + sign * 0.5 * ((D0.v + D1.v) * h + (S0.v + S1.v) * dB),
         st.log_d + sign * 0.5 * ((D0.dv + D1.dv) * h + (S0.dv + S1.dv) * dB));
}

void mark_if_dead(const StepCtx& cx, FlowState& st) {
  cplx wH = half_plane_rep(cx.ichart, st.w);
  if (!(wH.imag() > 0.0) || std::abs(wH) < cx.stop.kill_radius) {
    st.alive = false;
    st.death_time = st.t;
  }
}

double bridge_mid(const StepCtx& cx, double h, double Ba, double Bb, std::uint64_t k, int level,
                  std::uint64_t idx) {
  return 0.5 * (Ba + Bb) +
         0.5 * std::sqrt(h) *
             rng::normal(cx.drv->seed, cx.path_id, k, static_cast<std::uint64_t>(level) + 1,
                         2 * idx + 1);
}

void advance_cell(const StepCtx& cx, FlowState& st, double ta, double tb, double Ba, double Bb,
                  std::uint64_t k, int level, std::uint64_t idx) {
  if (!st.alive) {
    st.t = tb;
    return;
  }
  double h = tb - ta;
  cplx wH = half_plane_rep(cx.ichart, st.w);
  if (h <= kAdapt * std::norm(wH)) {
    if (cx.eng == Engine::Ito)
      em_step(cx, st, h, Bb - Ba);
    else
      heun_step(cx, st, h, Bb - Ba, 1.0);
    st.t = tb;
    mark_if_dead(cx, st);
    return;
  }
  if (level >= kMaxDepth) throw StepError("adaptive refinement exceeded maximum depth");
  double tm = 0.5 * (ta + tb);
  double Bm = bridge_mid(cx, h, Ba, Bb, k, level, idx);
  advance_cell(cx, st, ta, tm, Ba, Bm, k, level + 1, 2 * idx);
  advance_cell(cx, st, tm, tb, Bm, Bb, k, level + 1, 2 * idx + 1);
}

void backward_cell(const StepCtx& cx, FlowState& st, double ta, double tb, double Ba, double Bb,
                   std::uint64_t k, int level, std::uint64_t idx) {
  double h = tb - ta;
  if (h <= kAdapt * std::norm(st.w)) {
    heun_step(cx, st, h, Bb - Ba, -1.0);
    st.t = ta;
    if (!(st.w.imag() > 0.0)) throw LiftError("backward flow exited the half plane");
    return;
  }
  if (level >= kMaxDepth) throw StepError("adaptive refinement exceeded maximum depth");
  double tm = 0.5 * (ta + tb);
  double Bm = bridge_mid(cx, h, Ba, Bb, k, level, idx);
  backward_cell(cx, st, tm, tb, Bm, Bb, k, level + 1, 2 * idx + 1);
  backward_cell(cx, st, ta, tm, Ba, Bm, k, level + 1, 2 * idx);
}

// deterministic driving: total field and its derivative at absolute time t
struct DetEval {
  cplx f, fp;
};

DetEval det_field(const StepCtx& cx, cplx w, double t) {
  FieldJet D = vf_eval_jet(cx.pair->delta, Chart::HalfPlane, w);
  double bdot = u_slope(*cx.drv, t) / cx.sqrt_kappa;
  if (bdot == 0.0) return {D.v, D.dv};
  FieldJet S = vf_eval_jet(cx.pair->sigma, Chart::HalfPlane, w);
  return {D.v + S.v * bdot, D.dv + S.dv * bdot};
}

void rk4_w(const StepCtx& cx, FlowState& st, double t0, double h, double dir) {
  DetEval k1 = det_field(cx, st.w, t0);
  DetEval k2 = det_field(cx, st.w + dir * 0.5 * h * k1.f, t0 + dir * 0.5 * h);
  DetEval k3 = det_field(cx, st.w + dir * 0.5 * h * k2.f, t0 + dir * 0.5 * h);
  DetEval k4 = det_field(cx, st.w + dir * h * k3.f, t0 + dir * h);
  cplx dw = (h / 6.0) * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
  cplx dl = (h / 6.0) * (k1.fp + 2.0 * k2.fp + 2.0 * k3.fp + k4.fp);
  commit(st, st.w + dir * dw, st.log_d + dir * dl);
}

// v = w^2 makes the flow regular at the pole: 2 w f(w) is a polynomial in w
cplx v_rhs(const StepCtx& cx, cplx v, double t) {
  cplx w = std::sqrt(v);  // principal branch carries i*s -> 0 -> +s
  double bdot = u_slope(*cx.drv, t) / cx.sqrt_kappa;
  double c0 = cx.d4[0];
  double c1 = cx.d4[1] + bdot * cx.s3[0];
  double c2 = cx.d4[2] + bdot * cx.s3[1];
  double c3 = cx.d4[3] + bdot * cx.s3[2];
  return 2.0 * (c0 + c1 * w + c2 * v + c3 * w * v);
}

void rk4_v(const StepCtx& cx, FlowState& st, double t0, double h) {
  cplx v = st.w * st.w;
  cplx k1 = v_rhs(cx, v, t0);
  cplx k2 = v_rhs(cx, v + 0.5 * h * k1, t0 + 0.5 * h);
  cplx k3 = v_rhs(cx, v + 0.5 * h * k2, t0 + 0.5 * h);
  cplx k4 = v_rhs(cx, v + h * k3, t0 + h);
  v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_finite(v, "squared-variable step");
  // log_d is frozen here: the derivative flow is not integrable through the
  // pole passage, and no stopped observable reads it for a swallowed point
  st.w = std::sqrt(v);
}

void det_advance(const StepCtx& cx, FlowState& st, double ta, double tb) {
  if (!st.alive) {
    st.t = tb;
    return;
  }
  double t = ta;
  const double tiny = 1e-12 * std::max(1.0, std::abs(tb));
  while (tb - t > tiny) {
    double rem = tb - t;
    if (std::abs(st.w) < kSwitch) {
      rk4_v(cx, st, t, rem);
      t = tb;
    } else {
      double h = std::min(rem, kAdapt * std::norm(st.w));
      rk4_w(cx, st, t, h, 1.0);
      t += h;
    }
    st.t = t;
  }
  st.t = tb;
}

void det_back(const StepCtx& cx, FlowState& st, double t_hi, double t_lo) {
  double t = t_hi;
  const double tiny = 1e-12 * std::max(1.0, std::abs(t_hi));
  std::uint64_t iters = 0;
  while (t - t_lo > tiny) {
    if (++iters > 20000000ull) throw StepError("backward flow stalled near the pole");
    double rem = t - t_lo;
    double h = std::min(rem, kAdapt * std::norm(st.w));
    rk4_w(cx, st, t, h, -1.0);
    t -= h;
    st.t = t;
    if (!(st.w.imag() > 0.0)) throw LiftError("backward flow exited the half plane");
  }
}

void kill_at(FlowState& st, double tb) {
  st.alive = false;
  if (st.death_time < 0.0) st.death_time = st.t;
  st.t = tb;
}

// a degenerate step ends the point, not the run
void advance_cell_guarded(const StepCtx& cx, FlowState& st, double ta, double tb, double Ba,
                          double Bb, std::uint64_t k) {
  try {
    if (cx.det)
      det_advance(cx, st, ta, tb);
    else
      advance_cell(cx, st, ta, tb, Ba, Bb, k, 0, 0);
  } catch (const NaNError&) {
    kill_at(st, tb);
  } catch (const DomainError&) {
    kill_at(st, tb);
  } catch (const PoleError&) {
    kill_at(st, tb);
  } catch (const SingularityError&) {
    kill_at(st, tb);
  }
}

double base_increment(const StepCtx& cx, std::uint64_t k, double dt) {
  return std::sqrt(dt) * rng::normal(cx.drv->seed, cx.path_id, k, 0, 0);
}

std::uint64_t cell_count(double t, double dt, const char* what) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ConfigError(std::string(what) + " must be nonnegative and finite");
  double r = t / dt;
  if (r > 9e15) throw ConfigError(std::string(what) + " spans too many grid cells");
  auto n = static_cast<std::uint64_t>(std::llround(r));
  if (std::abs(static_cast<double>(n) * dt - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw ConfigError(std::string(what) + " must align with the dt grid");
  return n;
}

StepCtx make_ctx(const SlitFieldPair& pair, Chart chart, const DrivingPath& drv,
                 std::uint64_t path_id, const StopRule& stop, Engine eng) {
  if (!(drv.kappa > 0.0) || !std::isfinite(drv.kappa))
    throw ConfigError("driving kappa must be positive");
  if (!(stop.kill_radius >= 0.0)) throw ConfigError("kill radius must be nonnegative");
  StepCtx cx;
  cx.pair = &pair;
  cx.drv = &drv;
  cx.path_id = path_id;
  cx.stop = stop;
  cx.eng = eng;
  cx.det = (drv.kind == DrivingKind::Deterministic);
  cx.sqrt_kappa = std::sqrt(drv.kappa);
  cx.ichart = (cx.det || eng == Engine::Ito) ? Chart::HalfPlane : chart;
  if (cx.det) {
    if (drv.times.size() < 2 || drv.times.size() != drv.values.size())
      throw ConfigError("deterministic driving needs at least two samples");
    cx.d4 = laurent4(pair.delta);
    cx.s3 = laurent3(pair.sigma);
  }
  return cx;
}

void record_point(LoewnerRun& R, std::size_t i, const FlowState& st, Chart ichart, cplx dtau0) {
  TrackedPoint& tp = R.tracked[i];
  if (ichart == R.chart) {
    tp.w.push_back(st.w);
    tp.d.push_back(flow_deriv(st));
    return;
  }
  try {
    auto [wc, dwc] = transition_eval(Transition{ichart, R.chart, 0}, st.w);
    tp.w.push_back(wc);
    tp.d.push_back(dwc * flow_deriv(st) * dtau0);
  } catch (const std::exception&) {
    // dead or boundary value with no chart image: keep the last record
    tp.w.push_back(tp.w.back());
    tp.d.push_back(tp.d.back());
  }
}

void advance_and_record(LoewnerRun& R, const StepCtx& cx, const std::vector<cplx>& dtau0,
                        std::uint64_t k0, std::uint64_t n_cells) {
  double dt = R.dt;
  double B = R.u.back() / cx.sqrt_kappa;
  for (std::uint64_t k = k0; k < k0 + n_cells; ++k) {
    double ta = static_cast<double>(k) * dt;
    double tb = static_cast<double>(k + 1) * dt;
    double Bb = cx.det ? u_interp(*cx.drv, tb) / cx.sqrt_kappa : B + base_increment(cx, k, dt);
    for (std::size_t i = 0; i < R.tracked.size(); ++i) {
      FlowState& st = R.final_states[i];
      advance_cell_guarded(cx, st, ta, tb, B, Bb, k);
      record_point(R, i, st, cx.ichart, dtau0[i]);
    }
    R.times.push_back(tb);
    R.u.push_back(cx.sqrt_kappa * Bb);
    B = Bb;
  }
  for (std::size_t i = 0; i < R.tracked.size(); ++i) {
    R.tracked[i].alive = R.final_states[i].alive;
    R.tracked[i].death_time = R.final_states[i].death_time;
  }
}

}  // namespace

DrivingPath make_brownian_driving(double kappa, std::uint64_t seed) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
  DrivingPath d;
  d.kind = DrivingKind::BrownianKappa;
  d.kappa = kappa;
  d.seed = seed;
  return d;
}

DrivingPath make_deterministic_driving(std::vector<double> times, std::vector<double> values,
                                       double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
  if (times.size() < 2 || times.size() != values.size())
    throw ConfigError("driving needs matching time and value samples, at least two");
  if (times.front() != 0.0) throw ConfigError("driving grid must start at 0");
  if (values.front() != 0.0) throw ConfigError("driving must start at u = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("driving grid must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("driving values must be finite");
  DrivingPath d;
  d.kind = DrivingKind::Deterministic;
  d.kappa = kappa;
  d.seed = 0;
  d.times = std::move(times);
  d.values = std::move(values);
  return d;
}

cplx MobiusMap::apply(cplx z) const {
  cplx den = c * z + d;
  if (std::abs(den) < tol::singular_dist) throw SingularityError("mobius map pole");
  return (a * z + b) / den;
}

cplx MobiusMap::deriv(cplx z) const {
  cplx den = c * z + d;
  if (std::abs(den) < tol::singular_dist) throw SingularityError("mobius map pole");
  return (a * d - b * c) / (den * den);
}

MobiusMap mobius_flow(const RationalField& sigma, double s) {
  std::array<double, 3> c3 = laurent3(sigma);
  // traceless generator [[s1/2, s0], [-s2, -s1/2]]; its square is q * identity
  double a00 = 0.5 * c3[1], a01 = c3[0], a10 = -c3[2];
  double q = a00 * a00 + a01 * a10;
  double C, S;
  if (q > 0.0) {
    double L = std::sqrt(q);
    C = std::cosh(s * L);
    S = std::sinh(s * L) / L;
  } else if (q < 0.0) {
    double W = std::sqrt(-q);
    C = std::cos(s * W);
    S = std::sin(s * W) / W;
  } else {
    C = 1.0;
    S = s;
  }
  return MobiusMap{C + S * a00, S * a01, S * a10, C - S * a00};
}

MobiusMap compose(const MobiusMap& f, const MobiusMap& g) {
  return MobiusMap{f.a * g.a + f.b * g.c, f.a * g.b + f.b * g.d, f.c * g.a + f.d * g.c,
                   f.c * g.b + f.d * g.d};
}

FlowState step_ito(const SlitFieldPair& pair, const FlowState& s, double dt, double dB,
                   const StopRule& stop) {
  if (!s.alive) throw StepError("cannot step a dead point");
  if (!(dt >= 0.0) || !std::isfinite(dt) || !std::isfinite(dB))
    throw StepError("step arguments must be finite, dt nonnegative");
  if (dt == 0.0) return s;
  if (dt > kAdapt * std::norm(s.w) * (1.0 + 1e-9))
    throw StepError("dt exceeds the adaptive cap near the pole");
  StepCtx cx;
  cx.pair = &pair;
  cx.ichart = Chart::HalfPlane;
  cx.stop = stop;
  FlowState out = s;
  em_step(cx, out, dt, dB);
  out.t = s.t + dt;
  mark_if_dead(cx, out);
  return out;
}

FlowState step_strat(const SlitFieldPair& pair, Chart chart, const FlowState& s, double dt,
                     double dB, const StopRule& stop) {
  if (!s.alive) throw StepError("cannot step a dead point");
  if (!(dt >= 0.0) || !std::isfinite(dt) || !std::isfinite(dB))
    throw StepError("step arguments must be finite, dt nonnegative");
  if (dt == 0.0) return s;
  if (dt > kAdapt * std::norm(half_plane_rep(chart, s.w)) * (1.0 + 1e-9))
    throw StepError("dt exceeds the adaptive cap near the pole");
  StepCtx cx;
  cx.pair = &pair;
  cx.ichart = chart;
  cx.stop = stop;
  FlowState out = s;
  heun_step(cx, out, dt, dB, 1.0);
  out.t = s.t + dt;
  mark_if_dead(cx, out);
  return out;
}

LoewnerRun run(const SlitFieldPair& pair, Chart chart, const std::vector<cplx>& points,
               double t_max, double dt, const DrivingPath& driving, std::uint64_t path_id,
               const StopRule& stop, Engine engine) {
  std::uint64_t n = cell_count(t_max, dt, "t_max");
  StepCtx cx = make_ctx(pair, chart, driving, path_id, stop, engine);
  LoewnerRun R;
  R.pair = pair;
  R.chart = chart;
  R.driving = driving;
  R.path_id = path_id;
  R.engine = engine;
  R.stop = stop;
  R.dt = dt;
  R.times.reserve(n + 1);
  R.times.push_back(0.0);
  R.u.reserve(n + 1);
  R.u.push_back(0.0);
  std::vector<cplx> dtau0(points.size(), cplx(1.0, 0.0));
  for (std::size_t i = 0; i < points.size(); ++i) {
    cplx z = points[i];
    require_in_chart(chart, z);
    cplx w0 = z;
    if (cx.ichart != chart) {
      auto [wi, dwi] = transition_eval(Transition{chart, cx.ichart, 0}, z);
      w0 = wi;
      dtau0[i] = dwi;
    }
    FlowState st;
    st.w = w0;
    R.final_states.push_back(st);
    TrackedPoint tp;
    tp.z0 = z;
    tp.w.push_back(z);
    tp.d.push_back(cplx(1.0, 0.0));
    R.tracked.push_back(std::move(tp));
  }
  advance_and_record(R, cx, dtau0, 0, n);
  return R;
}

LoewnerRun run_continue(const LoewnerRun& prior, double extra_t) {
  std::uint64_t n_extra = cell_count(extra_t, prior.dt, "extra_t");
  if (prior.times.empty() || prior.final_states.size() != prior.tracked.size())
    throw ConfigError("cannot continue an incomplete run");
  LoewnerRun R = prior;
  StepCtx cx = make_ctx(R.pair, R.chart, R.driving, R.path_id, R.stop, R.engine);
  auto k0 = static_cast<std::uint64_t>(R.times.size() - 1);
  std::vector<cplx> dtau0(R.tracked.size(), cplx(1.0, 0.0));
  if (cx.ichart != R.chart)
    for (std::size_t i = 0; i < R.tracked.size(); ++i)
      dtau0[i] = transition_eval(Transition{R.chart, cx.ichart, 0}, R.tracked[i].z0).second;
  advance_and_record(R, cx, dtau0, k0, n_extra);
  return R;
}

FlowState evolve_point(const SlitFieldPair& pair, Chart chart, cplx z, double t_max, double dt,
                       const DrivingPath& driving, std::uint64_t path_id, const StopRule& stop,
                       Engine engine) {
  std::uint64_t n = cell_count(t_max, dt, "t_max");
  StepCtx cx = make_ctx(pair, chart, driving, path_id, stop, engine);
  require_in_chart(chart, z);
  FlowState st;
  st.w = (cx.ichart == chart) ? z : transition_eval(Transition{chart, cx.ichart, 0}, z).first;
  double B = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    double ta = static_cast<double>(k) * dt;
    double tb = static_cast<double>(k + 1) * dt;
    double Bb = cx.det ? u_interp(driving, tb) / cx.sqrt_kappa : B + base_increment(cx, k, dt);
    advance_cell_guarded(cx, st, ta, tb, B, Bb, k);
    B = Bb;
  }
  return st;
}

std::vector<cplx> trace(const SlitFieldPair& pair, const std::vector<double>& t_grid,
                        const DrivingPath& driving, double eps, std::uint64_t path_id, double dt) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
  StepCtx cx = make_ctx(pair, Chart::HalfPlane, driving, path_id, StopRule{}, Engine::Strat);
  std::uint64_t n_max = 0;
  for (double t : t_grid) n_max = std::max(n_max, cell_count(t, dt, "trace time"));
  std::vector<double> Bv(n_max + 1, 0.0);
  for (std::uint64_t k = 0; k < n_max; ++k) {
    Bv[k + 1] = cx.det ? u_interp(driving, static_cast<double>(k + 1) * dt) / cx.sqrt_kappa
                       : Bv[k] + base_increment(cx, k, dt);
  }
  std::vector<cplx> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    std::uint64_t m = cell_count(t, dt, "trace time");
    FlowState st;
    st.w = cplx(0.0, eps);
    st.t = t;
    if (cx.det) {
      det_back(cx, st, t, 0.0);
    } else {
      for (std::uint64_t k = m; k-- > 0;)
        backward_cell(cx, st, static_cast<double>(k) * dt, static_cast<double>(k + 1) * dt, Bv[k],
                      Bv[k + 1], k, 0, 0);
    }
    out.push_back(st.w);
  }
  return out;
}

std::pair<double, double> timechange_case2(double xi, double t_tilde) {
  if (xi == 0.0 || !std::isfinite(xi)) throw ConfigError("xi must be nonzero and finite");
  if (!std::isfinite(t_tilde)) throw ConfigError("t_tilde must be finite");
  double lambda = -std::expm1(-4.0 * xi * t_tilde) / (4.0 * xi);
  return {lambda, std::exp(2.0 * xi * t_tilde)};
}

}  // namespace slitflow
