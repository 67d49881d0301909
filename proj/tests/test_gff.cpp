// Covariance kernels, splittings, j+ and eta+ reconstruction, Wick moments,
// bump pairings and Gaussian sampling.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "slitflow/fields.hpp"
#include "slitflow/geometry.hpp"
#include "slitflow/gff.hpp"
#include "slitflow/rng.hpp"

using namespace slitflow;

namespace {

using g64 = boost::math::quadrature::gauss<double, 64>;

double bump_profile(double rho, double r, double wgt) {
  double u = rho * rho / (r * r);
  if (u >= 1.0) return 0.0;
  return wgt * std::exp(1.0 - 1.0 / (1.0 - u));
}

double bump_mass(double r, double wgt) {
  return g64::integrate([&](double rho) { return bump_profile(rho, r, wgt) * 2.0 * PI * rho; },
                        0.0, r);
}

// integral of f(w) * (-log|z-w|) over a radial bump, z at distance s from the
// center; the circle average of -log|z-w| at radius rho is -log(max(s,rho))
double log_inner(double r, double wgt, double s) {
  double a = 0.0;
  if (s > 0.0) {
    double inner_mass = g64::integrate(
        [&](double rho) { return bump_profile(rho, r, wgt) * 2.0 * PI * rho; }, 0.0,
        std::min(s, r));
    a = -std::log(s) * inner_mass;
  }
  double b = 0.0;
  if (s < r) {
    b = g64::integrate(
        [&](double rho) {
          return bump_profile(rho, r, wgt) * 2.0 * PI * rho * (-std::log(rho));
        },
        s, r);
  }
  return a + b;
}

// double integral of f(z) f(w) (-log|z-w|) for one radial bump
double log_pair_self(double r, double wgt) {
  return g64::integrate(
      [&](double s) { return bump_profile(s, r, wgt) * 2.0 * PI * s * log_inner(r, wgt, s); },
      0.0, r);
}

}  // namespace

TEST_CASE("kernel construction and names") {
  CHECK(make_kernel(KernelKind::Dirichlet).natural == Chart::HalfPlane);
  CHECK(make_kernel(KernelKind::DirichletNeumann).natural == Chart::Strip);
  CHECK(make_kernel(KernelKind::Twisted).natural == Chart::Log);
  for (auto k : {KernelKind::Dirichlet, KernelKind::DirichletNeumann, KernelKind::Twisted})
    CHECK(kernel_from_name(kernel_name(k)) == k);
  CHECK_THROWS_AS(kernel_from_name("free"), ConfigError);
}

TEST_CASE("half-plane kernel closed-form values") {
  auto k = make_kernel(KernelKind::Dirichlet);
  CHECK(near(gamma_eval(k, Chart::HalfPlane, I, 2.0 * I), std::log(3.0), 1e-12));
  // vanishes on the boundary, exactly
  CHECK(gamma_eval(k, Chart::HalfPlane, cplx(0.7, 0.0), I) == 0.0);
  CHECK(gamma_eval(k, Chart::HalfPlane, cplx(-2.3, 0.0), cplx(0.4, 1.7)) == 0.0);
  // symmetry
  cplx z(0.3, 0.9), w(-1.1, 1.6);
  CHECK(near(gamma_eval(k, Chart::HalfPlane, z, w), gamma_eval(k, Chart::HalfPlane, w, z),
             1e-13));
  CHECK_THROWS_AS(gamma_eval(k, Chart::HalfPlane, I, I + cplx(1e-13, 0.0)), DiagonalError);
  CHECK_THROWS_AS(gamma_eval(k, Chart::HalfPlane, cplx(0.0, -0.1), I), BoundaryError);
}

TEST_CASE("kernel is a scalar under chart change") {
  auto k = make_kernel(KernelKind::Dirichlet);
  cplx z(0.3, 0.1), w(-0.2, 0.4);  // disk points
  cplx zh = transition_eval(Transition{Chart::Disk, Chart::HalfPlane, 0}, z).first;
  cplx wh = transition_eval(Transition{Chart::Disk, Chart::HalfPlane, 0}, w).first;
  CHECK(near(gamma_eval(k, Chart::Disk, z, w), gamma_eval(k, Chart::HalfPlane, zh, wh),
             1e-12));

  auto ktw = make_kernel(KernelKind::Twisted);
  cplx u(0.8, 0.7), v(-0.4, 1.1);  // half-plane points
  cplx ul = transition_eval(Transition{Chart::HalfPlane, Chart::Log, 0}, u).first;
  cplx vl = transition_eval(Transition{Chart::HalfPlane, Chart::Log, 0}, v).first;
  CHECK(near(gamma_eval(ktw, Chart::HalfPlane, u, v), gamma_eval(ktw, Chart::Log, ul, vl),
             1e-12));
}

TEST_CASE("strip kernel boundary conditions") {
  auto k = make_kernel(KernelKind::DirichletNeumann);
  cplx w(-0.5, 2.2);
  // value zero on the lower edge
  CHECK(gamma_eval(k, Chart::Strip, cplx(0.6, 0.0), w) == 0.0);
  // vanishing normal derivative on the upper edge: one-sided differences with
  // one Richardson level to cancel the curvature term
  double h = 1e-4;
  auto dh = [&](double step) {
    return (gamma_eval(k, Chart::Strip, cplx(1.2, PI), w) -
            gamma_eval(k, Chart::Strip, cplx(1.2, PI - step), w)) /
           step;
  };
  CHECK(std::abs(2.0 * dh(0.5 * h) - dh(h)) < 1e-6);
  CHECK_THROWS_AS(gamma_eval(k, Chart::Strip, cplx(0.0, PI + 0.1), w), BoundaryError);
}

TEST_CASE("twisted kernel changes sign across a period") {
  auto k = make_kernel(KernelKind::Twisted);
  cplx z(1.0, 1.0), w(2.0, 1.0);
  double g = gamma_eval(k, Chart::Log, z, w);
  CHECK(near(gamma_eval(k, Chart::Log, z + 2.0 * PI, w), -g, 1e-12));
  // a sheet index on the home chart is the same deck shift
  CHECK(near(gamma_eval(k, Chart::Log, z, w, 1, 0), -g, 1e-12));
  CHECK(near(gamma_eval(k, Chart::Log, z, w, 1, 1), g, 1e-12));
  // coincidence up to a sheet shift is still the diagonal
  CHECK_THROWS_AS(gamma_eval(k, Chart::Log, z + 2.0 * PI, z), DiagonalError);
}

TEST_CASE("splitting pieces and recombination") {
  auto kd = make_kernel(KernelKind::Dirichlet);
  auto sp = gamma_split(kd, Chart::HalfPlane, I, 2.0 * I);
  CHECK(near(sp.gpp, cplx(0.0, PI / 4.0), 1e-13));                       // -log(-i)/2
  CHECK(near(sp.gpm, cplx(-0.5 * std::log(3.0), -PI / 4.0), 1e-13));     // -log(3i)/2
  double rec = 2.0 * sp.gpp.real() - 2.0 * sp.gpm.real();
  CHECK(near(rec, std::log(3.0), tol::recombine));

  // recombination reproduces the kernel, every kind, home and foreign charts
  auto kdn = make_kernel(KernelKind::DirichletNeumann);
  auto ktw = make_kernel(KernelKind::Twisted);
  struct Probe {
    CovarianceKernel k;
    Chart chart;
    cplx z, w;
  };
  std::vector<Probe> probes = {
      {kd, Chart::HalfPlane, {0.4, 0.9}, {-1.2, 1.7}},
      {kd, Chart::Disk, {0.3, 0.1}, {-0.2, 0.4}},
      {kdn, Chart::Strip, {0.9, 1.1}, {-0.6, 2.3}},
      {ktw, Chart::Log, {0.7, 0.8}, {2.4, 1.5}},
      {ktw, Chart::HalfPlane, {0.8, 0.7}, {-0.4, 1.1}},
  };
  for (const auto& p : probes) {
    auto s = gamma_split(p.k, p.chart, p.z, p.w);
    double g = gamma_eval(p.k, p.chart, p.z, p.w);
    CHECK(near(2.0 * s.gpp.real() - 2.0 * s.gpm.real(), g, tol::recombine));
  }

  // the ++ piece is symmetric in its real part (the imaginary parts differ by
  // the branch of the log)
  cplx z(0.4, 0.9), w(-1.2, 1.7);
  auto ab = gamma_split(kd, Chart::HalfPlane, z, w);
  auto ba = gamma_split(kd, Chart::HalfPlane, w, z);
  CHECK(near(ab.gpp.real(), ba.gpp.real(), 1e-14));

  // strip splitting closed form
  auto sdn = gamma_split(kdn, Chart::Strip, cplx(0.9, 1.1), cplx(-0.6, 2.3));
  cplx expect = -0.5 * std::log(std::tanh(0.25 * (cplx(0.9, 1.1) - cplx(-0.6, 2.3))));
  CHECK(near(sdn.gpp, expect, 1e-13));
}

TEST_CASE("split jets match finite differences") {
  double h = 1e-5;
  auto fd_check = [&](const CovarianceKernel& k, cplx z, cplx w) {
    auto jet = gamma_split_jet(k, z, w);
    auto at = [&](cplx zz, cplx ww) { return gamma_split(k, k.natural, zz, ww); };
    cplx dz_pp = (at(z + h, w).gpp - at(z - h, w).gpp) / (2.0 * h);
    cplx dw_pp = (at(z, w + h).gpp - at(z, w - h).gpp) / (2.0 * h);
    cplx dz_pm = (at(z + h, w).gpm - at(z - h, w).gpm) / (2.0 * h);
    CHECK(near(jet.dz_gpp, dz_pp, 1e-7));
    CHECK(near(jet.dw_gpp, dw_pp, 1e-7));
    CHECK(near(jet.dz_gpm, dz_pm, 1e-7));
    // d/dzeta of gpm(z, zeta) with zeta = conj(w): vary w along the real axis
    // moves zeta the same way
    cplx dzeta_pm = (at(z, w + h).gpm - at(z, w - h).gpm) / (2.0 * h);
    CHECK(near(jet.dzeta_gpm, dzeta_pm, 1e-7));
  };
  fd_check(make_kernel(KernelKind::Dirichlet), cplx(0.4, 0.9), cplx(-1.2, 1.7));
  fd_check(make_kernel(KernelKind::DirichletNeumann), cplx(0.9, 1.1), cplx(-0.6, 2.3));
  fd_check(make_kernel(KernelKind::Twisted), cplx(0.7, 0.8), cplx(2.4, 1.5));
}

TEST_CASE("j+ closed forms") {
  // nu = 1 gives alpha = -1/2
  auto eta = make_eta(EtaFamily::ChordalDrift, 4.0, 1.0);
  CHECK(near(j_plus_eval(eta, Chart::HalfPlane, I), cplx(-1.0, -0.5), 1e-13));
  // nu = 0: decays at infinity
  auto eta0 = make_eta(EtaFamily::ChordalTimeChange, 4.0);
  CHECK(std::abs(j_plus_eval(eta0, Chart::HalfPlane, cplx(0.0, 1e6))) < 2e-6);
  CHECK_THROWS_AS(j_plus_eval(eta, Chart::HalfPlane, cplx(1e-9, 0.0)), SingularityError);
  // scalar under chart change
  cplx zd(0.2, 0.3);
  cplx zh = transition_eval(Transition{Chart::Disk, Chart::HalfPlane, 0}, zd).first;
  CHECK(near(j_plus_eval(eta, Chart::Disk, zd), j_plus_eval(eta, Chart::HalfPlane, zh),
             1e-12));
}

TEST_CASE("j+ agrees with sigma applied to eta+") {
  // half-plane families: j+ = sigma * (eta+)' + mu * sigma'
  struct Case {
    Family fam;
    EtaFamily ef;
    double kappa, param;
  };
  std::vector<Case> cases = {
      {Family::ChordalDrift, EtaFamily::ChordalDrift, 3.0, 0.7},
      {Family::ChordalTimeChange, EtaFamily::ChordalTimeChange, 5.0, 0.3},
      {Family::DipolarDrift, EtaFamily::DipolarDrift, 2.5, -0.4},
      {Family::RightFixedPoint, EtaFamily::RightFixedPoint, 5.0, 0.2},
      {Family::LeftFixedPoint, EtaFamily::LeftFixedPoint, 3.3, -0.1},
      {Family::RadialDrift, EtaFamily::RadialDrift, 6.0, 1.1},
  };
  std::vector<cplx> pts = {{0.6, 0.7}, {-1.2, 0.4}, {0.3, 2.0}};
  for (const auto& c : cases) {
    CAPTURE(family_name(c.fam));
    SlitFieldPair p = make_family_pair(c.fam, c.kappa, c.param);
    PrePreSchwarzian eta = make_eta(c.ef, c.kappa, c.param);
    cplx mu = mu_of(c.kappa);
    auto dsig = p.sigma.rat.deriv();
    for (cplx z : pts) {
      cplx lhs = j_plus_eval(eta, Chart::HalfPlane, z);
      cplx rhs = p.sigma.rat.eval(z) * eta_plus_jet(eta, z).d1 + mu * dsig.eval(z);
      CHECK(near(lhs, rhs, 1e-10));
    }
  }
  // strip and log families carry the constant sigma -2 sqrt(kappa)
  auto dn = make_eta(EtaFamily::DirichletNeumann4, 4.0, 0.6);
  cplx zs(1.0, 0.8);
  CHECK(near(j_plus_eval(dn, Chart::Strip, zs), -4.0 * eta_plus_jet(dn, zs).d1, 1e-10));
  auto tw = make_eta(EtaFamily::Twisted4, 4.0, -0.3);
  cplx zl(0.9, 1.1);
  CHECK(near(j_plus_eval(tw, Chart::Log, zl), -4.0 * eta_plus_jet(tw, zl).d1, 1e-10));
}

TEST_CASE("eta+ reconstruction along segments") {
  // chordal kappa=4: eta+ = (i/2) log z, so i -> 2i gives (i/2) log 2
  auto eta = make_eta(EtaFamily::ChordalDrift, 4.0);
  auto jp = [&](cplx z) { return j_plus_eval(eta, Chart::HalfPlane, z); };
  RationalField sig = sigma_field(-2.0, 0.0, 0.0);
  cplx got = eta_plus_reconstruct(sig, jp, mu_of(4.0), I, 2.0 * I);
  CHECK(near(got, cplx(0.0, 0.5 * std::log(2.0)), 1e-10));
  CHECK(eta_plus_reconstruct(sig, jp, mu_of(4.0), I, I) == cplx(0.0, 0.0));

  // path independence within the domain of analyticity
  auto etac = make_eta(EtaFamily::ChordalDrift, 3.0, 0.5);
  auto jpc = [&](cplx z) { return j_plus_eval(etac, Chart::HalfPlane, z); };
  RationalField sigc = sigma_field(-std::sqrt(3.0), 0.0, 0.0);
  cplx mid(0.4, 1.4);
  cplx one_leg = eta_plus_reconstruct(sigc, jpc, mu_of(3.0), I, 2.0 * I);
  cplx two_leg = eta_plus_reconstruct(sigc, jpc, mu_of(3.0), I, mid) +
                 eta_plus_reconstruct(sigc, jpc, mu_of(3.0), mid, 2.0 * I);
  CHECK(near(one_leg, two_leg, 1e-10));

  // dipolar kappa=4 nu=0: closed form (i/2) log z - (i/4) log(1 - z^2)
  auto etad = make_eta(EtaFamily::DipolarDrift, 4.0, 0.0);
  auto jpd = [&](cplx z) { return j_plus_eval(etad, Chart::HalfPlane, z); };
  RationalField sigd = sigma_field(-2.0, 0.0, 2.0);
  auto closed = [](cplx z) {
    return cplx(0.0, 0.5) * std::log(z) - cplx(0.0, 0.25) * std::log(1.0 - z * z);
  };
  cplx gotd = eta_plus_reconstruct(sigd, jpd, mu_of(4.0), I, cplx(1.0, 1.0));
  CHECK(near(gotd, closed(cplx(1.0, 1.0)) - closed(I), 1e-8));

  // a segment grazing a zero of sigma is rejected
  CHECK_THROWS_AS(eta_plus_reconstruct(sigd, jpd, mu_of(4.0), cplx(0.9, 1e-7),
                                       cplx(1.1, 1e-7)),
                  PathError);
}

TEST_CASE("kernels are harmonic off the diagonal") {
  double h = 1e-3;
  auto lap = [&](const CovarianceKernel& k, cplx z, cplx w) {
    double c = gamma_eval(k, k.natural, z, w);
    double s = gamma_eval(k, k.natural, z + h, w) + gamma_eval(k, k.natural, z - h, w) +
               gamma_eval(k, k.natural, z + h * I, w) + gamma_eval(k, k.natural, z - h * I, w);
    return (s - 4.0 * c) / (h * h);
  };
  CHECK(std::abs(lap(make_kernel(KernelKind::Dirichlet), cplx(0.4, 1.1), cplx(-0.8, 0.6))) <
        1e-4);
  CHECK(std::abs(lap(make_kernel(KernelKind::DirichletNeumann), cplx(1.0, 1.2),
                     cplx(-0.5, 2.2))) < 1e-4);
  CHECK(std::abs(lap(make_kernel(KernelKind::Twisted), cplx(0.7, 0.9), cplx(2.5, 1.4))) <
        1e-4);
}

TEST_CASE("half-plane kernel is Mobius invariant") {
  auto k = make_kernel(KernelKind::Dirichlet);
  for (int n = 0; n < 100; ++n) {
    double a = 0.5 + 2.0 * rng::u01(rng::keyed(7, 1, n));
    double b = 3.0 * (rng::u01(rng::keyed(7, 2, n)) - 0.5);
    double c = 1.2 * (rng::u01(rng::keyed(7, 3, n)) - 0.5);
    double d = (1.0 + b * c) / a;
    auto m = [&](cplx z) { return (a * z + b) / (c * z + d); };
    cplx z(0.3, 0.8), w(-1.1, 1.6);
    CAPTURE(n);
    CHECK(near(gamma_eval(k, Chart::HalfPlane, m(z), m(w)),
               gamma_eval(k, Chart::HalfPlane, z, w), 1e-10));
  }
}

TEST_CASE("kernels are invariant along the matching sigma flows") {
  auto kd = make_kernel(KernelKind::Dirichlet);
  cplx z(0.6, 0.9), w(-0.4, 1.3);
  // all three half-plane sigma shapes fix the Dirichlet kernel
  for (auto s : {sigma_field(-2.0, 0.0, 0.0), sigma_field(-2.0, 0.0, 2.0),
                 sigma_field(-2.0, 0.0, -2.0)}) {
    CHECK(std::abs(lie_deriv_gamma(kd, s, Chart::HalfPlane, z, w)) < tol::analytic);
  }
  // a drift field does not (sanity: the differencing is not trivially zero)
  CHECK(std::abs(lie_deriv_gamma(kd, delta_field(2.0, 0.0, 0.0, 0.0), Chart::HalfPlane, z,
                                 w)) > 1e-3);
  // strip kernel with the dipolar sigma, log kernel with the radial sigma
  auto kdn = make_kernel(KernelKind::DirichletNeumann);
  CHECK(std::abs(lie_deriv_gamma(kdn, sigma_field(-2.0, 0.0, 2.0), Chart::Strip,
                                 cplx(1.0, 0.8), cplx(-0.5, 2.0))) < tol::analytic);
  auto ktw = make_kernel(KernelKind::Twisted);
  CHECK(std::abs(lie_deriv_gamma(ktw, sigma_field(-2.0, 0.0, -2.0), Chart::Log,
                                 cplx(0.7, 0.9), cplx(-0.3, 1.7))) < tol::analytic);
}

TEST_CASE("eta chart representative from the holomorphic part") {
  // the real field evaluated in a foreign chart must equal twice the real part
  // of the transported holomorphic part plus the stored constant
  struct Case {
    EtaFamily f;
    double kappa, nu;
  };
  std::vector<Case> cases = {{EtaFamily::ChordalDrift, 3.0, 0.7},
                             {EtaFamily::RightFixedPoint, 5.0, 0.0},
                             {EtaFamily::DirichletNeumann4, 4.0, 0.3},
                             {EtaFamily::Twisted4, 4.0, -0.2}};
  std::vector<cplx> pts = {{0.2, 0.3}, {-0.1, 0.5}, {0.0, 0.4}};
  for (const auto& c : cases) {
    auto eta = make_eta(c.f, c.kappa, c.nu);
    for (cplx z : pts) {
      double via_plus = 2.0 * eta_plus_chart_jet(eta, Chart::Disk, z).value.real() + eta.C;
      CHECK(near(eta_eval(eta, Chart::Disk, z), via_plus, 1e-12));
    }
  }
}

TEST_CASE("wick sums and low moments") {
  // two points by hand
  std::vector<double> mean = {0.3, -1.1};
  std::vector<std::vector<double>> cov = {{2.0, 0.4}, {0.4, 1.5}};
  CHECK(near(wick_sum(mean, cov), 0.4 + 0.3 * (-1.1), 1e-14));
  // four centered points: the three pairings
  std::vector<double> m4(4, 0.0);
  std::vector<std::vector<double>> c4 = {{1.0, 0.2, 0.3, 0.4},
                                         {0.2, 1.0, 0.5, 0.6},
                                         {0.3, 0.5, 1.0, 0.7},
                                         {0.4, 0.6, 0.7, 1.0}};
  double want = 0.2 * 0.7 + 0.3 * 0.6 + 0.4 * 0.5;
  CHECK(near(wick_sum(m4, c4), want, 1e-14));
  CHECK_THROWS_AS(wick_sum({0.0}, {{1.0, 0.0}, {0.0, 1.0}}), ConfigError);

  auto k = make_kernel(KernelKind::Dirichlet);
  auto eta = make_eta(EtaFamily::ChordalDrift, 4.0, 0.5);
  cplx z(0.4, 1.0), w(-0.7, 1.4), v(1.2, 0.6);
  double s1 = schwinger(k, &eta, Chart::HalfPlane, {z});
  CHECK(near(s1, eta_eval(eta, Chart::HalfPlane, z), 1e-13));
  double s2 = schwinger(k, &eta, Chart::HalfPlane, {z, w});
  double want2 = gamma_eval(k, Chart::HalfPlane, z, w) +
                 eta_eval(eta, Chart::HalfPlane, z) * eta_eval(eta, Chart::HalfPlane, w);
  CHECK(near(s2, want2, 1e-13));
  // centered odd moments vanish
  CHECK(schwinger(k, nullptr, Chart::HalfPlane, {z, w, v}) == 0.0);
}

TEST_CASE("bump density profile") {
  Bump b{cplx(0.0, 1.0), 0.5, 2.0};
  CHECK(bump_density(b, b.center) == 2.0);
  CHECK(bump_density(b, b.center + cplx(0.5, 0.0)) == 0.0);
  CHECK(bump_density(b, b.center + cplx(0.7, 0.0)) == 0.0);
  CHECK(near(bump_density(b, b.center + cplx(0.25, 0.0)), 2.0 * std::exp(1.0 - 4.0 / 3.0),
             1e-14));
}

TEST_CASE("bump pairings against mean-value oracles") {
  auto k = make_kernel(KernelKind::Dirichlet);
  // radial bumps against a kernel harmonic over each support collapse to
  // center values; the diagonal keeps a one-dimensional log correction
  ObservableSet obs;
  obs.chart = Chart::HalfPlane;
  obs.bumps = {{cplx(0.0, 1.0), 0.3, 1.0}, {cplx(0.0, 2.0), 0.25, 0.8}};
  auto eta = make_eta(EtaFamily::ChordalDrift, 4.0, 1.0);
  PairingData pd = pair_quadrature(obs, k, &eta, 2);
  CHECK(pd.quad_error <= 1e-6);

  double m0 = bump_mass(0.3, 1.0);
  double m1 = bump_mass(0.25, 0.8);
  // means: eta is harmonic away from its singular set
  CHECK(near(pd.mean[0], m0 * eta_eval(eta, Chart::HalfPlane, cplx(0.0, 1.0)), 5e-6));
  CHECK(near(pd.mean[1], m1 * eta_eval(eta, Chart::HalfPlane, cplx(0.0, 2.0)), 5e-6));
  // off-diagonal pairing collapses to the center-to-center kernel value
  CHECK(near(pd.cov[0][1], m0 * m1 * std::log(3.0), 5e-6));
  CHECK(pd.cov[0][1] == pd.cov[1][0]);
  // diagonal: log part plus the smooth part at the center, log(2 Im c)
  double want00 = log_pair_self(0.3, 1.0) + m0 * m0 * std::log(2.0);
  double want11 = log_pair_self(0.25, 0.8) + m1 * m1 * std::log(4.0);
  CHECK(near(pd.cov[0][0], want00, 1e-5));
  CHECK(near(pd.cov[1][1], want11, 1e-5));

  // identical results regardless of the thread count
  PairingData pd1 = pair_quadrature(obs, k, &eta, 1);
  PairingData pd4 = pair_quadrature(obs, k, &eta, 4);
  for (int i = 0; i < 2; ++i) {
    CHECK(pd1.mean[i] == pd4.mean[i]);
    for (int j = 0; j < 2; ++j) CHECK(pd1.cov[i][j] == pd4.cov[i][j]);
  }
}

TEST_CASE("bump pairings in strip and log charts") {
  auto kdn = make_kernel(KernelKind::DirichletNeumann);
  ObservableSet obs;
  obs.chart = Chart::Strip;
  obs.bumps = {{cplx(0.6, 1.4), 0.3, 1.0}, {cplx(2.4, 1.7), 0.25, 1.0}};
  PairingData pd = pair_quadrature(obs, kdn, nullptr, 2);
  double m0 = bump_mass(0.3, 1.0), m1 = bump_mass(0.25, 1.0);
  CHECK(near(pd.cov[0][1],
             m0 * m1 * gamma_eval(kdn, Chart::Strip, cplx(0.6, 1.4), cplx(2.4, 1.7)), 5e-6));
  CHECK(pd.mean[0] == 0.0);

  auto ktw = make_kernel(KernelKind::Twisted);
  ObservableSet obl;
  obl.chart = Chart::Log;
  obl.bumps = {{cplx(0.4, 1.1), 0.3, 1.0}, {cplx(2.6, 1.5), 0.25, 1.0}};
  PairingData pl = pair_quadrature(obl, ktw, nullptr, 2);
  CHECK(near(pl.cov[0][1],
             m0 * m1 * gamma_eval(ktw, Chart::Log, cplx(0.4, 1.1), cplx(2.6, 1.5)), 5e-6));
}

TEST_CASE("bump validation and quadrature failure") {
  auto k = make_kernel(KernelKind::Dirichlet);
  ObservableSet obs;
  obs.chart = Chart::HalfPlane;
  obs.bumps = {{cplx(0.0, 1.0), -0.1, 1.0}};
  CHECK_THROWS_AS(pair_quadrature(obs, k, nullptr, 1), ConfigError);
  obs.bumps = {{cplx(0.0, 1.0), 1.5, 1.0}};  // support crosses the boundary
  CHECK_THROWS_AS(pair_quadrature(obs, k, nullptr, 1), ConfigError);
  obs.bumps = {};
  CHECK_THROWS_AS(pair_quadrature(obs, k, nullptr, 1), ConfigError);
  ObservableSet od;
  od.chart = Chart::Disk;
  od.bumps = {{cplx(0.8, 0.0), 0.3, 1.0}};
  CHECK_THROWS_AS(pair_quadrature(od, k, nullptr, 1), ConfigError);
  ObservableSet os;
  os.chart = Chart::Strip;
  os.bumps = {{cplx(1.0, 3.0), 0.3, 1.0}};
  CHECK_THROWS_AS(pair_quadrature(os, make_kernel(KernelKind::DirichletNeumann), nullptr, 1),
                  ConfigError);
  // overlapping supports put the log singularity inside the tensor rule and
  // the error estimate must catch it
  ObservableSet bad;
  bad.chart = Chart::HalfPlane;
  bad.bumps = {{cplx(0.0, 1.0), 0.4, 1.0}, {cplx(0.5, 1.0), 0.4, 1.0}};
  CHECK_THROWS_AS(pair_quadrature(bad, k, nullptr, 2), QuadratureError);
}

TEST_CASE("gaussian sampling matches its quadrature law") {
  auto k = make_kernel(KernelKind::Dirichlet);
  ObservableSet obs;
  obs.chart = Chart::HalfPlane;
  obs.bumps = {{cplx(0.0, 1.0), 0.3, 1.0}, {cplx(0.0, 2.2), 0.3, 1.0}};
  auto eta = make_eta(EtaFamily::ChordalDrift, 4.0, 1.0);
  std::size_t n = 20000;
  GffEnsemble e = gff_sample(obs, k, &eta, n, 99, 3);
  CHECK(e.jitter == 0.0);
  CHECK(e.samples.size() == n);

  double mean0 = 0.0;
  for (const auto& s : e.samples) mean0 += s[0];
  mean0 /= double(n);
  double se0 = std::sqrt(e.pairing.cov[0][0] / double(n));
  CHECK(std::abs(mean0 - e.pairing.mean[0]) < 4.0 * se0);

  // sample covariance against the quadrature pairing
  double c01 = 0.0, mean1 = 0.0;
  for (const auto& s : e.samples) mean1 += s[1];
  mean1 /= double(n);
  for (const auto& s : e.samples) c01 += (s[0] - mean0) * (s[1] - mean1);
  c01 /= double(n - 1);
  double se01 = std::sqrt((e.pairing.cov[0][0] * e.pairing.cov[1][1] +
                           e.pairing.cov[0][1] * e.pairing.cov[0][1]) /
                          double(n));
  CHECK(std::abs(c01 - e.pairing.cov[0][1]) < 5.0 * se01);

  // third central moment vanishes for a gaussian
  double m3 = 0.0;
  for (const auto& s : e.samples) m3 += std::pow(s[0] - mean0, 3);
  m3 /= double(n);
  double se3 = std::sqrt(6.0 * std::pow(e.pairing.cov[0][0], 3) / double(n));
  CHECK(std::abs(m3) < 5.0 * se3);

  // determinism: same seed bit-identical across thread counts, new seed differs
  GffEnsemble e1 = gff_sample(obs, k, &eta, 64, 99, 1);
  GffEnsemble e4 = gff_sample(obs, k, &eta, 64, 99, 4);
  bool same = true;
  for (std::size_t s = 0; s < 64; ++s)
    for (int j = 0; j < 2; ++j) same = same && e1.samples[s][j] == e4.samples[s][j];
  CHECK(same);
  CHECK(e1.samples[0][0] == e.samples[0][0]);
  GffEnsemble eo = gff_sample(obs, k, &eta, 64, 100, 1);
  CHECK(eo.samples[0][0] != e1.samples[0][0]);
}
