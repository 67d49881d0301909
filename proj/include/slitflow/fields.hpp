#pragma once
// Vector fields of the slit flows and the boundary one-point functions.
//
// A driving pair (delta, sigma) lives on the half-plane chart as Laurent-class
// rational fields
//     delta = d[0]/z + d[1] + d[2] z + d[3] z^2   (d[0] > 0)
//     sigma = s[0] + s[1] z + s[2] z^2            (s[0] != 0)
// and is evaluated in any chart through the vector-field transfer rule
// v_chart(z) = v(tau(z)) / tau'(z). The named families are the six rows of
// the coupling table; everything else classifies as General.
//
// PrePreSchwarzian is a boundary one-point function eta = 2 Re eta_plus + C
// with the chart rule eta_new(z) = eta(tau(z)) - chi * arg tau'(z).

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "slitflow/common.hpp"
#include "slitflow/geometry.hpp"
#include "slitflow/poly.hpp"

namespace slitflow {

enum class Role { Delta, Sigma, Complete, General };

struct RationalField {
  Rat rat;
  Role role = Role::General;

  cplx eval(cplx z) const { return rat.eval(z); }
};

// constructors enforce the class invariants
RationalField delta_field(double dm2, double dm1, double d0, double d1);
RationalField sigma_field(double sm1, double s0, double s1);
RationalField complete_field(double a0, double a1, double a2);
RationalField delta_field(const std::array<double, 4>& d);
RationalField sigma_field(const std::array<double, 3>& s);

// Laurent data back out of a field (NormalizationError if not in class)
std::array<double, 4> laurent4(const RationalField& v);  // [1/z, 1, z, z^2]
std::array<double, 3> laurent3(const RationalField& v);  // [1, z, z^2]

// pointwise evaluation in a chart; FieldJet carries value and two derivatives
struct FieldJet {
  cplx v, dv, d2v;
};
cplx vf_eval(const RationalField& v, Chart chart, cplx z, int branch = 0);
FieldJet vf_eval_jet(const RationalField& v, Chart chart, cplx z, int branch = 0);

// exact commutator [v,w] = v w' - v' w as a rational field
RationalField lie_bracket(const RationalField& v, const RationalField& w);

// ---------------------------------------------------------------------------

enum class Family {
  ChordalDrift,
  ChordalTimeChange,
  DipolarDrift,
  RightFixedPoint,
  LeftFixedPoint,
  RadialDrift,
  General,
};
const char* family_name(Family f);
Family family_from_name(const std::string& s);

struct SlitFieldPair {
  RationalField delta, sigma;
  Family family = Family::General;
  double kappa = 0.0;
  double nu = 0.0;  // the drift invariant 3 s[1]/s[0] - 2 d[1]/d[0]
  double xi = 0.0;  // time-change parameter of the fixed-point rows
};

// table rows; `param` is nu for the drift rows, xi for the others
SlitFieldPair make_family_pair(Family f, double kappa, double param = 0.0);
// arbitrary admissible coefficients; family is General until classified
SlitFieldPair make_pair_raw(const std::array<double, 4>& d, const std::array<double, 3>& s);

double kappa_of(const std::array<double, 4>& d, const std::array<double, 3>& s);
double nu_invariant(const std::array<double, 4>& d, const std::array<double, 3>& s);

// group moves on pairs
SlitFieldPair transform_scale(const SlitFieldPair& p, double c);   // (c^2 delta, c sigma)
SlitFieldPair transform_r(const SlitFieldPair& p, double gamma);   // push by z/(1-gamma z)
SlitFieldPair drift_insert(const SlitFieldPair& p, double nu0);    // B -> B - (nu0/sqrt(kappa)) t

struct Classification {
  Family family = Family::General;
  double kappa = 0.0;
  double nu = 0.0;
  double xi = 0.0;
  SlitFieldPair canonical;  // representative with d[0] = 2, s[0] = -sqrt(kappa)
};
Classification classify(const std::array<double, 4>& d, const std::array<double, 3>& s);
Classification classify(const SlitFieldPair& p);

// ---------------------------------------------------------------------------

enum class EtaFamily {
  ChordalDrift,
  ChordalTimeChange,
  DipolarDrift,
  RightFixedPoint,
  LeftFixedPoint,
  RadialDrift,
  DirichletNeumann4,
  Twisted4,
};
const char* eta_family_name(EtaFamily f);
EtaFamily eta_family_from_name(const std::string& s);

struct PrePreSchwarzian {
  EtaFamily family = EtaFamily::ChordalDrift;
  double kappa = 4.0;
  double nu = 0.0;
  double C = 0.0;        // additive constant, defaults to pi/sqrt(kappa)
  Chart natural = Chart::HalfPlane;
  double chi = 0.0;      // 2/sqrt(kappa) - sqrt(kappa)/2
  cplx mu, mu_star;      // i chi/2 and its conjugate
};
PrePreSchwarzian make_eta(EtaFamily f, double kappa, double nu = 0.0);
PrePreSchwarzian make_eta(EtaFamily f, double kappa, double nu, double C);

// holomorphic part eta_plus with derivatives, in the family's natural chart
struct EtaJet {
  cplx value, d1, d2;
};
EtaJet eta_plus_jet(const PrePreSchwarzian& eta, cplx z);
// chart representative eta_plus(tau(z)) + mu log tau'(z) and derivatives
EtaJet eta_plus_chart_jet(const PrePreSchwarzian& eta, Chart chart, cplx z, int branch = 0);

// the real field itself (boundary points of the natural chart are allowed)
double eta_eval(const PrePreSchwarzian& eta, Chart chart, cplx z, int branch = 0);

enum class Route { Analytic, FlowFD };

// first Lie derivative of the one-point function along a field
double lie_deriv_pps(const RationalField& v, const PrePreSchwarzian& eta, Chart chart, cplx z,
                     Route route = Route::Analytic);

// generator A = L_delta + (1/2) L_sigma^2 applied to the one-point function
std::vector<double> diffusion_apply(const SlitFieldPair& pair, const PrePreSchwarzian& eta,
                                    Chart chart, const std::vector<cplx>& points,
                                    Route route = Route::Analytic);
// same generator on a plain scalar observable (finite differences of flows)
std::vector<double> diffusion_apply(const SlitFieldPair& pair,
                                    const std::function<double(cplx)>& X, Chart chart,
                                    const std::vector<cplx>& points);

// flow helper shared by the FD routes: RK4 on zdot = v(z), (log d)dot = v'(z)
std::pair<cplx, cplx> flow_field(const RationalField& v, Chart chart, cplx z, double s,
                                 int substeps = 8);

}  // namespace slitflow
