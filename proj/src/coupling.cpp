#include "slitflow/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "slitflow/parallel.hpp"
#include "slitflow/rng.hpp"

namespace slitflow {

namespace {

// R2 low-discrepancy sequence on the unit square
std::pair<double, double> r2_seq(std::size_t k) {
  constexpr double a1 = 0.7548776662466927;  // 1/rho with rho^3 = rho + 1
  constexpr double a2 = 0.5698402909980532;  // 1/rho^2
  double x = std::fmod(0.5 + a1 * static_cast<double>(k + 1), 1.0);
  double y = std::fmod(0.5 + a2 * static_cast<double>(k + 1), 1.0);
  return {x, y};
}

cplx sample_at(const CovarianceKernel& k, std::size_t idx) {
  auto [x, y] = r2_seq(idx);
  switch (k.kind) {
    case KernelKind::Dirichlet: {
      double r = 0.35 * std::exp(std::log(1.8 / 0.35) * x);
      double th = 0.25 + (PI - 0.5) * y;
      return r * cplx(std::cos(th), std::sin(th));
    }
    case KernelKind::DirichletNeumann:
      return {-2.0 + 4.0 * x, 0.3 + (PI - 0.6) * y};
    case KernelKind::Twisted:
      return {-2.0 + 4.0 * x, 0.3 + 2.2 * y};
  }
  throw ConfigError("unknown kernel kind");
}

bool sample_ok(const CovarianceKernel& k, cplx z) {
  if (std::abs(z) < 0.35) return false;
  if (k.kind == KernelKind::Dirichlet) {
    if (z.imag() < 0.15) return false;
    if (std::abs(z - I) < 0.1) return false;
  }
  return in_chart(k.natural, z);
}

// gauge profile that closes the split variation equation for slit pairs
cplx beta_gauge(const SlitFieldPair& pr, KernelKind kind, double alpha, cplx zeta) {
  switch (kind) {
    case KernelKind::Dirichlet: {
      auto d = laurent4(pr.delta);
      return alpha / zeta - 0.5 * d[3] * zeta - 0.25 * d[2] - 0.5 * alpha * alpha;
    }
    case KernelKind::DirichletNeumann:
      return alpha / std::sinh(0.5 * zeta) - 0.5 * alpha * alpha;
    case KernelKind::Twisted:
      return alpha / std::sin(0.5 * zeta) - 0.5 * alpha * alpha;
  }
  throw ConfigError("unknown kernel kind");
}

double pair_alpha(const SlitFieldPair& pr) {
  return -0.5 * nu_invariant(laurent4(pr.delta), laurent3(pr.sigma));
}

double r2_split(const SlitFieldPair& pr, const PrePreSchwarzian& eta,
                const CovarianceKernel& k, cplx z, cplx w) {
  Chart c = k.natural;
  SplitJet G = gamma_split_jet(k, z, w);
  cplx dz = vf_eval(pr.delta, c, z);
  cplx dw = vf_eval(pr.delta, c, w);
  cplx jz = j_plus_eval(eta, c, z);
  cplx jw = j_plus_eval(eta, c, w);
  double alpha = pair_alpha(pr);
  cplx bz = beta_gauge(pr, k.kind, alpha, z);
  cplx bw = beta_gauge(pr, k.kind, alpha, w);
  cplx app = dz * G.dz_gpp + dw * G.dw_gpp + jz * jw;
  cplx apm = -(dz * G.dz_gpm + std::conj(dw) * G.dzeta_gpm) + jz * std::conj(jw);
  cplx rpp = app - bz - bw;
  cplx rpm = apm + bz + std::conj(bw);
  return std::max(std::abs(rpp), std::abs(rpm));
}

double r3_analytic(const SlitFieldPair& pr, const CovarianceKernel& k, cplx z, cplx w) {
  SplitJet G = gamma_split_jet(k, z, w);
  cplx sz = vf_eval(pr.sigma, k.natural, z);
  cplx sw = vf_eval(pr.sigma, k.natural, w);
  cplx pp = sz * G.dz_gpp + sw * G.dw_gpp;
  cplx pm = sz * G.dz_gpm + std::conj(sw) * G.dzeta_gpm;
  return std::abs(2.0 * (pp.real() - pm.real()));
}

// derivative of Gamma along the flow of v in both slots, central difference
double lie_gamma_fd(const CovarianceKernel& k, const RationalField& v, Chart c,
                    cplx z, cplx w, double s) {
  cplx zp = flow_field(v, c, z, s).first;
  cplx wp = flow_field(v, c, w, s).first;
  cplx zm = flow_field(v, c, z, -s).first;
  cplx wm = flow_field(v, c, w, -s).first;
  return (gamma_eval(k, c, zp, wp) - gamma_eval(k, c, zm, wm)) / (2.0 * s);
}

double r2_fd(const CouplingProblem& p, cplx z, cplx w) {
  Chart c = p.kernel.natural;
  double lz = lie_deriv_pps(p.pair.sigma, p.eta, c, z, Route::FlowFD);
  double lw = lie_deriv_pps(p.pair.sigma, p.eta, c, w, Route::FlowFD);
  return std::abs(lie_gamma_fd(p.kernel, p.pair.delta, c, z, w, p.fd_step) + lz * lw);
}

double lsigma1(const SlitFieldPair& pr, const PrePreSchwarzian& eta, Chart c, cplx z) {
  FieldJet S = vf_eval_jet(pr.sigma, c, z);
  EtaJet E = eta_plus_chart_jet(eta, c, z);
  return 2.0 * (S.v * E.d1 + eta.mu * S.dv).real();
}

double lsigma2(const SlitFieldPair& pr, const PrePreSchwarzian& eta, Chart c, cplx z) {
  FieldJet S = vf_eval_jet(pr.sigma, c, z);
  EtaJet E = eta_plus_chart_jet(eta, c, z);
  return 2.0 * (S.v * (S.dv * E.d1 + S.v * E.d2 + eta.mu * S.d2v)).real();
}

// pushforward observable at a stopped state; the state lives in the Ito
// integration chart (half plane) and is transported to the data's chart.
// A kill step may overshoot the boundary; such states evaluate at the
// reflected point, the boundary value of the real field.
double m1_of(const PrePreSchwarzian& eta, cplx z0, const FlowState& st) {
  Chart nat = eta.natural;
  cplx w = st.w;
  cplx ld = st.log_d;
  if (nat != Chart::HalfPlane) {
    cplx wh = in_chart(Chart::HalfPlane, w) ? w : std::conj(w);
    auto [wn, dwn] = transition_eval(Transition{Chart::HalfPlane, nat, 0}, wh);
    auto [z0h, dz0h] = transition_eval(Transition{nat, Chart::HalfPlane, 0}, z0);
    (void)z0h;
    w = wn;
    ld += std::log(dwn) + std::log(dz0h);
  }
  double val;
  try {
    val = eta_eval(eta, nat, w);
  } catch (const DomainError&) {
    val = eta_eval(eta, nat, std::conj(w));
  }
  return val + 2.0 * (eta.mu * ld).real();
}

// same observable from a recorded chart value and derivative
double m1_record(const PrePreSchwarzian& eta, cplx w, cplx d) {
  double val;
  try {
    val = eta_eval(eta, eta.natural, w);
  } catch (const DomainError&) {
    val = eta_eval(eta, eta.natural, std::conj(w));
  }
  return val + 2.0 * (eta.mu * std::log(d)).real();
}

struct Moments {
  double mean = 0.0, std_err = 0.0;
};

Moments reduce_moments(const std::vector<double>& m) {
  Moments out;
  double s = 0.0;
  for (double v : m) s += v;
  out.mean = s / static_cast<double>(m.size());
  double q = 0.0;
  for (double v : m) q += (v - out.mean) * (v - out.mean);
  if (m.size() > 1)
    out.std_err = std::sqrt(q / (static_cast<double>(m.size() - 1) * static_cast<double>(m.size())));
  return out;
}

McStat finish_stat(McObservable obs, std::vector<cplx> pts, double t, double base,
                   const std::vector<double>& m, std::size_t kills) {
  McStat st;
  st.observable = obs;
  st.points = std::move(pts);
  st.t = t;
  st.n = m.size();
  st.base = base;
  Moments mo = reduce_moments(m);
  st.mean = mo.mean;
  st.std_err = mo.std_err;
  st.z_score = mo.std_err > 0.0 ? std::abs(mo.mean - base) / mo.std_err : 0.0;
  st.kill_fraction = static_cast<double>(kills) / static_cast<double>(m.size());
  st.kill_warning = st.kill_fraction > 0.2;
  if (st.kill_fraction > 0.5)
    throw EnsembleError("more than half the ensemble died before the horizon");
  return st;
}

}  // namespace

std::vector<cplx> default_sample_points(const CovarianceKernel& k, std::size_t n) {
  std::vector<cplx> out;
  out.reserve(n);
  for (std::size_t idx = 0; out.size() < n; ++idx) {
    if (idx > 1000 * (n + 1)) throw ConfigError("sample generation stalled");
    cplx z = sample_at(k, idx);
    if (sample_ok(k, z)) out.push_back(z);
  }
  return out;
}

std::vector<std::pair<cplx, cplx>> default_sample_pairs(const CovarianceKernel& k,
                                                        std::size_t n) {
  std::vector<std::pair<cplx, cplx>> out;
  out.reserve(n);
  cplx pending;
  bool have = false;
  for (std::size_t idx = 0; out.size() < n; ++idx) {
    if (idx > 2000 * (n + 1)) throw ConfigError("sample generation stalled");
    cplx z = sample_at(k, idx);
    if (!sample_ok(k, z)) continue;
    if (!have) {
      pending = z;
      have = true;
      continue;
    }
    if (std::abs(z - pending) < 0.2) {
      pending = z;
      continue;
    }
    out.emplace_back(pending, z);
    have = false;
  }
  return out;
}

CouplingProblem make_problem(const SlitFieldPair& pair, const CovarianceKernel& kernel,
                             const PrePreSchwarzian& eta, std::size_t n_points) {
  CouplingProblem p;
  p.pair = pair;
  p.kernel = kernel;
  p.eta = eta;
  p.points = default_sample_points(kernel, n_points);
  p.point_pairs = default_sample_pairs(kernel, n_points);
  return p;
}

const char* mc_observable_name(McObservable o) {
  switch (o) {
    case McObservable::M1Eta: return "m1_eta";
    case McObservable::M2TwoPoint: return "m2_two_point";
  }
  return "unknown";
}

CouplingReport residual_system(const CouplingProblem& p0, int threads) {
  if (!(p0.fd_step >= 1e-7 && p0.fd_step <= 1e-3))
    throw ConfigError("fd_step outside [1e-7, 1e-3]");
  if (p0.points.empty() && p0.point_pairs.empty())
    throw ConfigError("residual system needs sample points");
  // Residuals are orbit invariants: scaling rescales the equations and the
  // Moebius moves act by chart covariance, so evaluate on the classified
  // table representative (or the scale-normalized pair when no row matches).
  CouplingProblem p = p0;
  Classification cl = classify(p.pair);
  if (cl.family != Family::General) {
    bool drift_row = cl.family == Family::ChordalDrift ||
                     cl.family == Family::DipolarDrift ||
                     cl.family == Family::RadialDrift;
    p.pair = make_family_pair(cl.family, cl.kappa, drift_row ? cl.nu : cl.xi);
  } else {
    double d2 = laurent4(p.pair.delta)[0];
    if (!(d2 > 0.0)) throw ConfigError("pole weight must be positive");
    if (std::abs(d2 - 2.0) > tol::recombine)
      p.pair = transform_scale(p.pair, std::sqrt(2.0 / d2));
  }
  Chart c = p.kernel.natural;

  std::size_t n1 = p.points.size(), n2 = p.point_pairs.size();
  std::vector<double> v1(n1, -1.0), v2(n2, -1.0), v3(n2, -1.0);

  parallel_for(n1, threads, [&](std::size_t i) {
    try {
      v1[i] = std::abs(diffusion_apply(p.pair, p.eta, c, {p.points[i]}, p.route)[0]);
    } catch (const std::runtime_error&) {
    }
  });

  parallel_for(n2, threads, [&](std::size_t i) {
    cplx z = p.point_pairs[i].first, w = p.point_pairs[i].second;
    try {
      v2[i] = p.route == Route::Analytic ? r2_split(p.pair, p.eta, p.kernel, z, w)
                                         : r2_fd(p, z, w);
    } catch (const std::runtime_error&) {
    }
    try {
      v3[i] = p.route == Route::Analytic
                  ? r3_analytic(p.pair, p.kernel, z, w)
                  : std::abs(lie_gamma_fd(p.kernel, p.pair.sigma, c, z, w, p.fd_step));
    } catch (const std::runtime_error&) {
    }
  });

  CouplingReport rep;
  rep.tolerance = p.route == Route::Analytic ? tol::analytic : tol::fd;
  for (std::size_t i = 0; i < n1; ++i) {
    if (v1[i] < 0.0) {
      ++rep.skipped;
      continue;
    }
    if (v1[i] > rep.r1_max) {
      rep.r1_max = v1[i];
      rep.argmax1 = p.points[i];
    }
  }
  for (std::size_t i = 0; i < n2; ++i) {
    if (v2[i] < 0.0)
      ++rep.skipped;
    else if (v2[i] > rep.r2_max) {
      rep.r2_max = v2[i];
      rep.argmax2 = p.point_pairs[i];
    }
    if (v3[i] < 0.0)
      ++rep.skipped;
    else if (v3[i] > rep.r3_max) {
      rep.r3_max = v3[i];
      rep.argmax3 = p.point_pairs[i];
    }
  }
  rep.pass = rep.r1_max < rep.tolerance && rep.r2_max < rep.tolerance &&
             rep.r3_max < rep.tolerance;
  return rep;
}

double cross_relation(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                      const CovarianceKernel& kernel, cplx z, cplx w) {
  Chart c = kernel.natural;
  RationalField b = lie_bracket(pair.delta, pair.sigma);
  SplitJet G = gamma_split_jet(kernel, z, w);
  cplx bz = vf_eval(b, c, z);
  cplx bw = vf_eval(b, c, w);
  double lhs = 2.0 * ((bz * G.dz_gpp + bw * G.dw_gpp).real() -
                      (bz * G.dz_gpm + std::conj(bw) * G.dzeta_gpm).real());
  double rhs = lsigma2(pair, eta, c, z) * lsigma1(pair, eta, c, w) +
               lsigma1(pair, eta, c, z) * lsigma2(pair, eta, c, w);
  return std::abs(lhs - rhs);
}

EtaFamily eta_family_for(KernelKind kind, Family family) {
  if (kind == KernelKind::DirichletNeumann) return EtaFamily::DirichletNeumann4;
  if (kind == KernelKind::Twisted) return EtaFamily::Twisted4;
  switch (family) {
    case Family::ChordalDrift: return EtaFamily::ChordalDrift;
    case Family::ChordalTimeChange: return EtaFamily::ChordalTimeChange;
    case Family::DipolarDrift: return EtaFamily::DipolarDrift;
    case Family::RightFixedPoint: return EtaFamily::RightFixedPoint;
    case Family::LeftFixedPoint: return EtaFamily::LeftFixedPoint;
    case Family::RadialDrift: return EtaFamily::RadialDrift;
    case Family::General: break;
  }
  throw ConfigError("no boundary data family matches a general pair");
}

std::vector<ScanVerdict> scan_selection(const std::vector<ScanSpec>& grid,
                                        const CovarianceKernel& kernel, int threads) {
  std::vector<ScanVerdict> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    ScanVerdict& v = out[i];
    v.spec = grid[i];
    try {
      bool drift_row = grid[i].family == Family::ChordalDrift ||
                       grid[i].family == Family::DipolarDrift ||
                       grid[i].family == Family::RadialDrift;
      double param = drift_row ? grid[i].nu : grid[i].xi;
      SlitFieldPair pr = make_family_pair(grid[i].family, grid[i].kappa, param);
      PrePreSchwarzian eta =
          make_eta(eta_family_for(kernel.kind, grid[i].family), grid[i].kappa, grid[i].nu);
      CouplingProblem p = make_problem(pr, kernel, eta, 64);
      CouplingReport r = residual_system(p, 1);
      v.r1 = r.r1_max;
      v.r2 = r.r2_max;
      v.r3 = r.r3_max;
      v.pass = r.pass;
      if (r.skipped > 0) v.note = std::to_string(r.skipped) + " samples skipped";
    } catch (const std::exception& e) {
      v.note = e.what();
      v.pass = false;
    }
  });
  return out;
}

std::vector<McStat> mc_martingale(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                                  McObservable obs, const std::vector<cplx>& points,
                                  double t, std::size_t n_paths, double dt,
                                  std::uint64_t seed, int threads,
                                  const CovarianceKernel* kernel) {
  if (n_paths == 0) throw ConfigError("martingale check needs paths");
  if (!(t >= 0.0) || !(dt > 0.0)) throw ConfigError("bad time grid");
  if (obs == McObservable::M2TwoPoint) {
    if (points.size() != 2) throw ConfigError("two-point observable takes two points");
    if (kernel == nullptr) throw ConfigError("two-point observable needs the kernel");
  } else if (points.empty()) {
    throw ConfigError("martingale check needs points");
  }

  DrivingPath drv = make_brownian_driving(pair.kappa, seed);
  std::vector<McStat> stats;

  if (obs == McObservable::M1Eta) {
    for (cplx z : points) {
      std::vector<double> m(n_paths);
      std::vector<char> dead(n_paths, 0);
      parallel_for(n_paths, threads, [&](std::size_t i) {
        FlowState st = evolve_point(pair, eta.natural, z, t, dt, drv, i);
        m[i] = m1_of(eta, z, st);
        dead[i] = st.alive ? 0 : 1;
      });
      std::size_t kills = 0;
      for (char d : dead) kills += d;
      double base = eta_eval(eta, eta.natural, z);
      stats.push_back(finish_stat(obs, {z}, t, base, m, kills));
    }
    return stats;
  }

  cplx z1 = points[0], z2 = points[1];
  std::vector<double> m(n_paths);
  std::vector<char> dead(n_paths, 0);
  std::size_t n_cells = static_cast<std::size_t>(std::llround(t / dt));
  parallel_for(n_paths, threads, [&](std::size_t i) {
    LoewnerRun R = run(pair, eta.natural, {z1, z2}, t, dt, drv, i);
    std::size_t kstop = n_cells;
    for (const TrackedPoint& tp : R.tracked) {
      if (tp.alive) continue;
      auto k = static_cast<std::size_t>(std::floor(tp.death_time / dt));
      kstop = std::min(kstop, k);
    }
    dead[i] = (R.tracked[0].alive && R.tracked[1].alive) ? 0 : 1;
    // the pair observable stops when either point dies; if the kernel is
    // singular at the stopped positions, back off one grid cell
    for (;; --kstop) {
      cplx w1 = R.tracked[0].w[kstop], w2 = R.tracked[1].w[kstop];
      try {
        double g = gamma_eval(*kernel, eta.natural, w1, w2);
        m[i] = g + m1_record(eta, w1, R.tracked[0].d[kstop]) *
                       m1_record(eta, w2, R.tracked[1].d[kstop]);
        break;
      } catch (const std::runtime_error&) {
        if (kstop == 0) throw;
      }
    }
  });
  std::size_t kills = 0;
  for (char d : dead) kills += d;
  double base = gamma_eval(*kernel, eta.natural, z1, z2) +
                eta_eval(eta, eta.natural, z1) * eta_eval(eta, eta.natural, z2);
  stats.push_back(finish_stat(obs, {z1, z2}, t, base, m, kills));
  return stats;
}

DriftEstimate drift_estimate(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                             cplx point, double h, std::size_t n_paths, std::uint64_t seed,
                             int threads) {
  if (!(h >= 1e-5 && h <= 1e-2)) throw ConfigError("h outside [1e-5, 1e-2]");
  if (n_paths == 0) throw ConfigError("drift estimate needs paths");
  double dt = h / 64.0;
  DrivingPath drv = make_brownian_driving(pair.kappa, seed);
  std::vector<double> m(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    FlowState st = evolve_point(pair, eta.natural, point, h, dt, drv, i);
    m[i] = m1_of(eta, point, st);
  });
  DriftEstimate out;
  out.base = eta_eval(eta, eta.natural, point);
  Moments mo = reduce_moments(m);
  out.value = (mo.mean - out.base) / h;
  out.std_err = mo.std_err / h;
  out.n = n_paths;
  return out;
}

DriftEstimate drift_estimate(const SlitFieldPair& pair, const std::function<double(cplx)>& X,
                             Chart chart, cplx point, double h, std::size_t n_paths,
                             std::uint64_t seed, int threads) {
  if (!(h >= 1e-5 && h <= 1e-2)) throw ConfigError("h outside [1e-5, 1e-2]");
  if (n_paths == 0) throw ConfigError("drift estimate needs paths");
  double dt = h / 64.0;
  DrivingPath drv = make_brownian_driving(pair.kappa, seed);
  std::vector<double> m(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    FlowState st = evolve_point(pair, chart, point, h, dt, drv, i);
    cplx w = st.w;
    if (chart != Chart::HalfPlane) {
      cplx wh = in_chart(Chart::HalfPlane, w) ? w : std::conj(w);
      w = transition_eval(Transition{Chart::HalfPlane, chart, 0}, wh).first;
    }
    m[i] = X(w);
  });
  DriftEstimate out;
  out.base = X(point);
  Moments mo = reduce_moments(m);
  out.value = (mo.mean - out.base) / h;
  out.std_err = mo.std_err / h;
  out.n = n_paths;
  return out;
}

}  // namespace slitflow
