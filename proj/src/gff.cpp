#include "slitflow/gff.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

#include "slitflow/parallel.hpp"
#include "slitflow/rng.hpp"

namespace slitflow {

namespace {

bool in_closure(Chart c, cplx z) {
  switch (c) {
    case Chart::HalfPlane: return z.imag() >= 0.0;
    case Chart::Disk: return std::abs(z) <= 1.0 + 1e-12;
    case Chart::Strip: return z.imag() >= 0.0 && z.imag() <= PI;
    case Chart::Log: return z.imag() >= 0.0;
  }
  return false;
}

cplx to_natural(Chart natural, Chart chart, cplx z, int branch) {
  if (!in_closure(chart, z)) throw BoundaryError("kernel argument outside the chart closure");
  if (chart == natural) {
    // home chart: a sheet index is a deck shift, not a change of chart
    if (natural == Chart::Log && branch != 0) return z + 2.0 * PI * branch;
    return z;
  }
  return transition_eval(Transition{chart, natural, branch}, z).first;
}

// coinciding arguments; the twisted kernel also identifies sheet shifts
void guard_diagonal(KernelKind kind, cplx z, cplx w) {
  if (kind == KernelKind::Twisted) {
    double dre = std::remainder(z.real() - w.real(), 2.0 * PI);
    if (std::abs(cplx(dre, z.imag() - w.imag())) < tol::diag_dist)
      throw DiagonalError("kernel arguments coincide up to a sheet shift");
  } else if (std::abs(z - w) < tol::diag_dist) {
    throw DiagonalError("kernel arguments coincide");
  }
}

double gamma_natural(KernelKind kind, cplx z, cplx w) {
  cplx u = z - w, v = z - std::conj(w);
  double g = 0.0;
  switch (kind) {
    case KernelKind::Dirichlet:
      g = -std::log(std::abs(u)) + std::log(std::abs(v));
      break;
    case KernelKind::DirichletNeumann:
      g = -std::log(std::abs(std::tanh(0.25 * u))) + std::log(std::abs(std::tanh(0.25 * v)));
      break;
    case KernelKind::Twisted:
      g = -std::log(std::abs(std::tan(0.25 * u))) + std::log(std::abs(std::tan(0.25 * v)));
      break;
  }
  if (!std::isfinite(g)) throw NaNError("kernel value: non-finite");
  return g;
}

SplitPieces split_natural(KernelKind kind, cplx z, cplx w) {
  cplx u = z - w, v = z - std::conj(w);
  switch (kind) {
    case KernelKind::Dirichlet:
      return {-0.5 * std::log(u), -0.5 * std::log(v)};
    case KernelKind::DirichletNeumann:
      return {-0.5 * std::log(std::tanh(0.25 * u)), -0.5 * std::log(std::tanh(0.25 * v))};
    case KernelKind::Twisted:
      return {-0.5 * std::log(std::tan(0.25 * u)), -0.5 * std::log(std::tan(0.25 * v))};
  }
  throw ConfigError("unknown kernel kind");
}

// limit of Gamma(z,w) + log|z-w| on the diagonal, home chart
double smooth_part_diag(KernelKind kind, cplx z) {
  double y = z.imag();
  switch (kind) {
    case KernelKind::Dirichlet: return std::log(2.0 * y);
    case KernelKind::DirichletNeumann:
      return std::log(4.0) + std::log(std::abs(std::tan(0.5 * y)));
    case KernelKind::Twisted:
      return std::log(4.0) + std::log(std::abs(std::tanh(0.5 * y)));
  }
  throw ConfigError("unknown kernel kind");
}

}  // namespace

CovarianceKernel make_kernel(KernelKind k) {
  switch (k) {
    case KernelKind::Dirichlet: return {k, Chart::HalfPlane};
    case KernelKind::DirichletNeumann: return {k, Chart::Strip};
    case KernelKind::Twisted: return {k, Chart::Log};
  }
  throw ConfigError("unknown kernel kind");
}

const char* kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::Dirichlet: return "dirichlet";
    case KernelKind::DirichletNeumann: return "dirichlet_neumann";
    case KernelKind::Twisted: return "twisted";
  }
  return "?";
}

KernelKind kernel_from_name(const std::string& s) {
  if (s == "dirichlet") return KernelKind::Dirichlet;
  if (s == "dirichlet_neumann") return KernelKind::DirichletNeumann;
  if (s == "twisted") return KernelKind::Twisted;
  throw ConfigError("unknown kernel name: " + s);
}

double gamma_eval(const CovarianceKernel& k, Chart chart, cplx z, cplx w, int branch_z,
                  int branch_w) {
  cplx zn = to_natural(k.natural, chart, z, branch_z);
  cplx wn = to_natural(k.natural, chart, w, branch_w);
  guard_diagonal(k.kind, zn, wn);
  return gamma_natural(k.kind, zn, wn);
}

SplitPieces gamma_split(const CovarianceKernel& k, Chart chart, cplx z, cplx w, int branch_z,
                        int branch_w) {
  cplx zn = to_natural(k.natural, chart, z, branch_z);
  cplx wn = to_natural(k.natural, chart, w, branch_w);
  guard_diagonal(k.kind, zn, wn);
  return split_natural(k.kind, zn, wn);
}

SplitJet gamma_split_jet(const CovarianceKernel& k, cplx z, cplx w) {
  if (!in_closure(k.natural, z) || !in_closure(k.natural, w))
    throw BoundaryError("kernel argument outside the chart closure");
  guard_diagonal(k.kind, z, w);
  cplx u = z - w, v = z - std::conj(w);
  SplitJet out;
  auto sp = split_natural(k.kind, z, w);
  out.gpp = sp.gpp;
  out.gpm = sp.gpm;
  switch (k.kind) {
    case KernelKind::Dirichlet:
      out.dz_gpp = -0.5 / u;
      out.dz_gpm = -0.5 / v;
      break;
    case KernelKind::DirichletNeumann:
      out.dz_gpp = -1.0 / (4.0 * std::sinh(0.5 * u));
      out.dz_gpm = -1.0 / (4.0 * std::sinh(0.5 * v));
      break;
    case KernelKind::Twisted:
      out.dz_gpp = -1.0 / (4.0 * std::sin(0.5 * u));
      out.dz_gpm = -1.0 / (4.0 * std::sin(0.5 * v));
      break;
  }
  out.dw_gpp = -out.dz_gpp;
  out.dzeta_gpm = -out.dz_gpm;
  return out;
}

cplx j_plus_eval(const PrePreSchwarzian& eta, Chart chart, cplx z, int branch) {
  cplx w = z;
  if (chart != eta.natural || branch != 0)
    w = transition_eval(Transition{chart, eta.natural, branch}, z).first;
  double alpha = 0.0;
  switch (eta.family) {
    case EtaFamily::ChordalDrift:
    case EtaFamily::DipolarDrift:
    case EtaFamily::RadialDrift:
    case EtaFamily::DirichletNeumann4:
    case EtaFamily::Twisted4:
      alpha = -0.5 * eta.nu;
      break;
    case EtaFamily::ChordalTimeChange:
      alpha = 0.0;
      break;
    case EtaFamily::RightFixedPoint:
      alpha = 0.5 * (eta.kappa - 6.0);
      break;
    case EtaFamily::LeftFixedPoint:
      alpha = -0.5 * (eta.kappa - 6.0);
      break;
  }
  cplx den;
  switch (eta.family) {
    case EtaFamily::DirichletNeumann4:
      den = std::sinh(0.5 * w);
      break;
    case EtaFamily::Twisted4:
      den = std::sin(0.5 * w);
      break;
    default:
      den = w;
      break;
  }
  if (std::abs(den) < 1e-8) throw SingularityError("j+ singular at the source");
  return -I / den + I * alpha;
}

cplx eta_plus_reconstruct(const RationalField& sigma, const std::function<cplx(cplx)>& jplus,
                          cplx mu, cplx z0, cplx z1) {
  cplx dz = z1 - z0;
  if (std::abs(dz) == 0.0) return 0.0;

  // reject segments that graze a zero of sigma
  auto s = laurent3(sigma);
  std::vector<cplx> roots;
  if (s[2] != 0.0) {
    cplx disc = std::sqrt(cplx(s[1] * s[1] - 4.0 * s[2] * s[0], 0.0));
    roots.push_back((-s[1] + disc) / (2.0 * s[2]));
    roots.push_back((-s[1] - disc) / (2.0 * s[2]));
  } else if (s[1] != 0.0) {
    roots.push_back(cplx(-s[0] / s[1], 0.0));
  }
  for (cplx r : roots) {
    double t = std::clamp((std::conj(dz) * (r - z0)).real() / std::norm(dz), 0.0, 1.0);
    if (std::abs(r - (z0 + t * dz)) < 1e-6)
      throw PathError("integration path passes a zero of sigma");
  }

  auto drat = sigma.rat.deriv();
  auto integrand = [&](double t) {
    cplx p = z0 + t * dz;
    return (jplus(p) - mu * drat.eval(p)) / sigma.rat.eval(p) * dz;
  };
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err_re = 0.0, err_im = 0.0;
  double re = gk::integrate([&](double t) { return integrand(t).real(); }, 0.0, 1.0, 15,
                            1e-12, &err_re);
  double im = gk::integrate([&](double t) { return integrand(t).imag(); }, 0.0, 1.0, 15,
                            1e-12, &err_im);
  if (err_re > 1e-8 || err_im > 1e-8)
    throw QuadratureError("reconstruction integral did not converge");
  return cplx(re, im);
}

double lie_deriv_gamma(const CovarianceKernel& k, const RationalField& v, Chart chart, cplx z,
                       cplx w) {
  auto F = [&](double s) {
    cplx zs = flow_field(v, chart, z, s).first;
    cplx ws = flow_field(v, chart, w, s).first;
    return gamma_eval(k, chart, zs, ws);
  };
  double h = tol::fd_step;
  double d1 = (F(h) - F(-h)) / (2.0 * h);
  double d2 = (F(0.5 * h) - F(-0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

namespace {

double wick_rec(const std::vector<double>& mean, const std::vector<std::vector<double>>& cov,
                std::vector<int> idx) {
  if (idx.empty()) return 1.0;
  int i = idx.back();
  idx.pop_back();
  double acc = mean[i] * wick_rec(mean, cov, idx);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    std::vector<int> rest = idx;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(p));
    acc += cov[i][idx[p]] * wick_rec(mean, cov, rest);
  }
  return acc;
}

}  // namespace

double wick_sum(const std::vector<double>& mean, const std::vector<std::vector<double>>& cov) {
  std::size_t n = mean.size();
  if (cov.size() != n) throw ConfigError("moment sum: mean/covariance size mismatch");
  for (const auto& row : cov)
    if (row.size() != n) throw ConfigError("moment sum: covariance is not square");
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return wick_rec(mean, cov, idx);
}

double schwinger(const CovarianceKernel& k, const PrePreSchwarzian* eta, Chart chart,
                 const std::vector<cplx>& pts) {
  std::size_t n = pts.size();
  if (n == 0) throw ConfigError("moment of order zero");
  std::vector<double> mean(n, 0.0);
  std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (eta) mean[i] = eta_eval(*eta, chart, pts[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      cov[i][j] = cov[j][i] = gamma_eval(k, chart, pts[i], pts[j]);
    }
  }
  return wick_sum(mean, cov);
}

// ---------------------------------------------------------------------------
// bump quadrature

double bump_density(const Bump& b, cplx z) {
  double r2 = std::norm(z - b.center) / (b.radius * b.radius);
  if (r2 >= 1.0) return 0.0;
  return b.weight * std::exp(1.0 - 1.0 / (1.0 - r2));
}

namespace {

void validate_bump(const Bump& b, Chart chart) {
  if (!(b.radius > 0.0)) throw ConfigError("bump radius must be positive");
  bool ok = false;
  cplx c = b.center;
  double r = b.radius;
  switch (chart) {
    case Chart::HalfPlane: ok = c.imag() - r > 0.0; break;
    case Chart::Disk: ok = std::abs(c) + r < 1.0; break;
    case Chart::Strip: ok = c.imag() - r > 0.0 && c.imag() + r < PI; break;
    case Chart::Log: ok = c.imag() - r > 0.0; break;
  }
  if (!ok) throw ConfigError("bump support leaves the chart");
}

struct NodeSet {
  std::vector<cplx> pos;      // observation-chart position
  std::vector<cplx> pos_nat;  // transported to the kernel's home chart
  std::vector<double> wgt;    // density times area element
};

// radial Gauss-Legendre nodes on [-1,1], both half-axes
template <int N>
void gl_nodes(std::vector<double>& x, std::vector<double>& w) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& ax = rule::abscissa();
  const auto& aw = rule::weights();
  x.clear();
  w.clear();
  for (std::size_t i = 0; i < ax.size(); ++i) {
    x.push_back(ax[i]);
    w.push_back(aw[i]);
    if (ax[i] != 0.0) {
      x.push_back(-ax[i]);
      w.push_back(aw[i]);
    }
  }
}

NodeSet bump_nodes(const Bump& b, Chart chart, Chart natural, bool fine) {
  std::vector<double> gx, gw;
  if (fine) gl_nodes<32>(gx, gw);
  else gl_nodes<16>(gx, gw);
  int na = fine ? 32 : 16;
  double dth = 2.0 * PI / na;

  NodeSet out;
  out.pos.reserve(gx.size() * static_cast<std::size_t>(na));
  for (std::size_t i = 0; i < gx.size(); ++i) {
    double rho = 0.5 * b.radius * (gx[i] + 1.0);
    double wr = 0.5 * b.radius * gw[i];
    for (int j = 0; j < na; ++j) {
      double th = dth * j;
      cplx p = b.center + rho * cplx(std::cos(th), std::sin(th));
      out.pos.push_back(p);
      out.wgt.push_back(wr * dth * rho * bump_density(b, p));
    }
  }
  out.pos_nat = out.pos;
  if (chart != natural) {
    Transition tr{chart, natural, 0};
    for (auto& p : out.pos_nat) p = transition_eval(tr, p).first;
  }
  return out;
}

// inner integral of -log|w - z| against the bump density, polar around z
double log_part_at(const Bump& b, cplx z, const std::vector<double>& gx,
                   const std::vector<double>& gw, int na) {
  cplx d = z - b.center;
  double dth = 2.0 * PI / na;
  double acc = 0.0;
  for (int j = 0; j < na; ++j) {
    double th = dth * j;
    double q = (std::conj(d) * cplx(std::cos(th), std::sin(th))).real();
    double disc = q * q - std::norm(d) + b.radius * b.radius;
    if (disc <= 0.0) continue;
    double rho_max = -q + std::sqrt(disc);
    if (rho_max <= 0.0) continue;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      double rho = 0.5 * rho_max * (gx[i] + 1.0);
      if (rho <= 0.0) continue;
      double wr = 0.5 * rho_max * gw[i];
      cplx w = z + rho * cplx(std::cos(th), std::sin(th));
      acc += wr * dth * rho * (-std::log(rho)) * bump_density(b, w);
    }
  }
  return acc;
}

// Gamma(z,w) + log|z - w| in observation-chart coordinates, finite on the diagonal
double smooth_part(const CovarianceKernel& k, Chart chart, cplx z, cplx w, cplx zn, cplx wn) {
  double d = std::abs(z - w);
  if (d < 1e-6) {
    double corr = 0.0;
    if (chart != k.natural) {
      cplx dw = transition_eval(Transition{chart, k.natural, 0}, 0.5 * (z + w)).second;
      corr = -std::log(std::abs(dw));
    }
    return corr + smooth_part_diag(k.kind, 0.5 * (zn + wn));
  }
  return gamma_natural(k.kind, zn, wn) + std::log(d);
}

struct QuadResult {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
};

QuadResult run_quadrature(const ObservableSet& obs, const CovarianceKernel& k,
                          const PrePreSchwarzian* eta, bool fine, int threads) {
  std::size_t n = obs.bumps.size();
  std::vector<NodeSet> nodes(n);
  for (std::size_t i = 0; i < n; ++i)
    nodes[i] = bump_nodes(obs.bumps[i], obs.chart, k.natural, fine);

  std::vector<double> gx, gw;
  if (fine) gl_nodes<32>(gx, gw);
  else gl_nodes<16>(gx, gw);
  int na = fine ? 32 : 16;

  QuadResult out;
  out.mean.assign(n, 0.0);
  out.cov.assign(n, std::vector<double>(n, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    if (eta) {
      double m = 0.0;
      for (std::size_t a = 0; a < nodes[i].pos.size(); ++a)
        m += nodes[i].wgt[a] * eta_eval(*eta, obs.chart, nodes[i].pos[a]);
      out.mean[i] = m;
    }
    for (std::size_t j = i; j < n; ++j) {
      const NodeSet& A = nodes[i];
      const NodeSet& B = nodes[j];
      std::vector<double> partial(A.pos.size(), 0.0);
      if (i != j) {
        parallel_for(A.pos.size(), threads, [&](std::size_t a) {
          double acc = 0.0;
          for (std::size_t c = 0; c < B.pos.size(); ++c)
            acc += B.wgt[c] * gamma_natural(k.kind, A.pos_nat[a], B.pos_nat[c]);
          partial[a] = A.wgt[a] * acc;
        });
      } else {
        parallel_for(A.pos.size(), threads, [&](std::size_t a) {
          double acc = 0.0;
          for (std::size_t c = 0; c < B.pos.size(); ++c)
            acc += B.wgt[c] * smooth_part(k, obs.chart, A.pos[a], B.pos[c], A.pos_nat[a],
                                          B.pos_nat[c]);
          acc += log_part_at(obs.bumps[i], A.pos[a], gx, gw, na);
          partial[a] = A.wgt[a] * acc;
        });
      }
      double total = 0.0;
      for (double p : partial) total += p;
      out.cov[i][j] = out.cov[j][i] = total;
    }
  }
  return out;
}

}  // namespace

PairingData pair_quadrature(const ObservableSet& obs, const CovarianceKernel& k,
                            const PrePreSchwarzian* eta, int threads) {
  if (obs.bumps.empty()) throw ConfigError("observable set is empty");
  for (const auto& b : obs.bumps) validate_bump(b, obs.chart);

  QuadResult fine = run_quadrature(obs, k, eta, true, threads);
  QuadResult coarse = run_quadrature(obs, k, eta, false, threads);

  double err = 0.0;
  std::size_t n = obs.bumps.size();
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(fine.mean[i] - coarse.mean[i]));
    for (std::size_t j = 0; j < n; ++j)
      err = std::max(err, std::abs(fine.cov[i][j] - coarse.cov[i][j]));
  }
  if (err > 1e-6) throw QuadratureError("pairing quadrature error above 1e-6");

  PairingData out;
  out.mean = std::move(fine.mean);
  out.cov = std::move(fine.cov);
  out.quad_error = err;
  return out;
}

namespace {

bool cholesky(const std::vector<std::vector<double>>& a, double jitter,
              std::vector<std::vector<double>>& l) {
  std::size_t n = a.size();
  l.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j] + (i == j ? jitter : 0.0);
      for (std::size_t t = 0; t < j; ++t) s -= l[i][t] * l[j][t];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

}  // namespace

GffEnsemble gff_sample(const ObservableSet& obs, const CovarianceKernel& k,
                       const PrePreSchwarzian* eta, std::size_t n_samples, std::uint64_t seed,
                       int threads) {
  GffEnsemble out;
  out.pairing = pair_quadrature(obs, k, eta, threads);
  std::size_t n = obs.bumps.size();

  bool ok = false;
  for (double jit : {0.0, 1e-12}) {
    if (cholesky(out.pairing.cov, jit, out.factor)) {
      out.jitter = jit;
      ok = true;
      break;
    }
  }
  if (!ok) throw FactorizationError("covariance is not positive definite after jitter");

  out.samples.assign(n_samples, std::vector<double>(n, 0.0));
  parallel_for(n_samples, threads, [&](std::size_t s) {
    std::vector<double> g(n);
    for (std::size_t c = 0; c < n; ++c) g[c] = rng::normal(seed, 0xC0F, s, c, 0);
    for (std::size_t r = 0; r < n; ++r) {
      double v = out.pairing.mean[r];
      for (std::size_t c = 0; c <= r; ++c) v += out.factor[r][c] * g[c];
      out.samples[s][r] = v;
    }
  });
  return out;
}

}  // namespace slitflow
