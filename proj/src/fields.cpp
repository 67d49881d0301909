#include "slitflow/fields.hpp"

#include <cmath>
#include <algorithm>

namespace slitflow {

// ---------------------------------------------------------------------------
// construction and Laurent data

namespace {

void require_finite_real(double v, const char* what) {
  if (!std::isfinite(v)) throw NormalizationError(std::string(what) + ": non-finite coefficient");
}

Rat laurent_rat(const std::array<double, 4>& d) {
  Poly num({cplx(d[0]), cplx(d[1]), cplx(d[2]), cplx(d[3])});
  return Rat(num, Poly::monomial(1));
}

Rat poly_rat(const std::array<double, 3>& s) {
  Poly num({cplx(s[0]), cplx(s[1]), cplx(s[2])});
  return Rat(num, Poly::monomial(0));
}

}  // namespace

RationalField delta_field(double dm2, double dm1, double d0, double d1) {
  return delta_field(std::array<double, 4>{dm2, dm1, d0, d1});
}

RationalField delta_field(const std::array<double, 4>& d) {
  for (double v : d) require_finite_real(v, "delta");
  if (d[0] <= 0.0) throw NormalizationError("delta: coefficient of 1/z must be positive");
  return {laurent_rat(d), Role::Delta};
}

RationalField sigma_field(double sm1, double s0, double s1) {
  return sigma_field(std::array<double, 3>{sm1, s0, s1});
}

RationalField sigma_field(const std::array<double, 3>& s) {
  for (double v : s) require_finite_real(v, "sigma");
  if (s[0] == 0.0) throw NormalizationError("sigma: constant coefficient must be nonzero");
  return {poly_rat(s), Role::Sigma};
}

RationalField complete_field(double a0, double a1, double a2) {
  std::array<double, 3> s{a0, a1, a2};
  for (double v : s) require_finite_real(v, "complete field");
  return {poly_rat(s), Role::Complete};
}

std::array<double, 4> laurent4(const RationalField& v) {
  const Poly& den = v.rat.den;
  const Poly& num = v.rat.num;
  double dscale = Rat::max_coeff(den);
  std::array<double, 4> out{0, 0, 0, 0};
  int offset;  // laurent slot of num.c[0]
  cplx lead;
  if (den.degree() == 1 && std::abs(den.c[0]) <= 1e-12 * dscale) {
    offset = 0;  // den ~ c z: num.c[0] is the 1/z coefficient
    lead = den.c[1];
  } else if (den.degree() == 0) {
    offset = 1;  // polynomial field, no pole part
    lead = den.c[0];
  } else {
    throw NormalizationError("field is not in the Laurent class (denominator)");
  }
  if (num.degree() + offset > 3)
    throw NormalizationError("field is not in the Laurent class (degree too high)");
  for (int k = 0; k <= num.degree(); ++k) {
    cplx c = num.c[k] / lead;
    if (std::abs(c.imag()) > 1e-10 * std::max(1.0, std::abs(c)))
      throw NormalizationError("field has a non-real coefficient");
    out[k + offset] = c.real();
  }
  return out;
}

std::array<double, 3> laurent3(const RationalField& v) {
  auto l4 = laurent4(v);
  if (std::abs(l4[0]) > 1e-12)
    throw NormalizationError("field has a pole; expected a polynomial field");
  return {l4[1], l4[2], l4[3]};
}

// ---------------------------------------------------------------------------
// pointwise evaluation via the vector-field transfer rule

cplx vf_eval(const RationalField& v, Chart chart, cplx z, int branch) {
  if (chart == Chart::HalfPlane) return v.rat.eval(z);
  MapJet t = transition_eval_jet({chart, Chart::HalfPlane, branch}, z);
  return v.rat.eval(t.w) / t.d1;
}

FieldJet vf_eval_jet(const RationalField& v, Chart chart, cplx z, int branch) {
  Rat r1 = v.rat.deriv();
  Rat r2 = r1.deriv();
  if (chart == Chart::HalfPlane) return {v.rat.eval(z), r1.eval(z), r2.eval(z)};
  MapJet t = transition_eval_jet({chart, Chart::HalfPlane, branch}, z);
  cplx vw = v.rat.eval(t.w), dvw = r1.eval(t.w), d2vw = r2.eval(t.w);
  cplx q = t.d2 / t.d1;
  cplx qp = t.d3 / t.d1 - q * q;
  cplx vc = vw / t.d1;
  cplx dvc = dvw - vc * q;
  cplx d2vc = d2vw * t.d1 - dvc * q - vc * qp;
  return {vc, dvc, d2vc};
}

RationalField lie_bracket(const RationalField& v, const RationalField& w) {
  return {lie_bracket_rat(v.rat, w.rat), Role::General};
}

// ---------------------------------------------------------------------------
// families

const char* family_name(Family f) {
  switch (f) {
    case Family::ChordalDrift: return "chordal_drift";
    case Family::ChordalTimeChange: return "chordal_timechange";
    case Family::DipolarDrift: return "dipolar_drift";
    case Family::RightFixedPoint: return "right_fixed_point";
    case Family::LeftFixedPoint: return "left_fixed_point";
    case Family::RadialDrift: return "radial_drift";
    case Family::General: return "general";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  for (Family f : {Family::ChordalDrift, Family::ChordalTimeChange, Family::DipolarDrift,
                   Family::RightFixedPoint, Family::LeftFixedPoint, Family::RadialDrift,
                   Family::General})
    if (s == family_name(f)) return f;
  throw ConfigError("unknown family name: " + s);
}

double kappa_of(const std::array<double, 4>& d, const std::array<double, 3>& s) {
  if (d[0] <= 0.0) throw NormalizationError("kappa: coefficient of 1/z must be positive");
  return 2.0 * s[0] * s[0] / d[0];
}

double nu_invariant(const std::array<double, 4>& d, const std::array<double, 3>& s) {
  if (d[0] <= 0.0 || s[0] == 0.0) throw NormalizationError("drift invariant: pair not admissible");
  return 3.0 * s[1] / s[0] - 2.0 * d[1] / d[0];
}

SlitFieldPair make_pair_raw(const std::array<double, 4>& d, const std::array<double, 3>& s) {
  SlitFieldPair p;
  p.delta = delta_field(d);
  p.sigma = sigma_field(s);
  p.family = Family::General;
  p.kappa = kappa_of(d, s);
  p.nu = nu_invariant(d, s);
  p.xi = 0.0;
  return p;
}

SlitFieldPair make_family_pair(Family f, double kappa, double param) {
  if (kappa <= 0.0) throw NormalizationError("family pair: kappa must be positive");
  double rk = std::sqrt(kappa);
  std::array<double, 4> d{};
  std::array<double, 3> s{};
  double nu = 0.0, xi = 0.0;
  switch (f) {
    case Family::ChordalDrift:
      nu = param;
      d = {2, -nu, 0, 0};
      s = {-rk, 0, 0};
      break;
    case Family::ChordalTimeChange:
      xi = param;
      d = {2, 0, 2 * xi, 0};
      s = {-rk, 0, 0};
      break;
    case Family::DipolarDrift:
      nu = param;
      d = {2, -nu, -2, nu};
      s = {-rk, 0, rk};
      break;
    case Family::RightFixedPoint:
      xi = param;
      d = {2, kappa - 6, 2 * (3 - kappa + xi), kappa - 2 - 2 * xi};
      s = {-rk, 0, rk};
      break;
    case Family::LeftFixedPoint:
      xi = param;
      d = {2, -(kappa - 6), 2 * (3 - kappa + xi), -(kappa - 2 - 2 * xi)};
      s = {-rk, 0, rk};
      break;
    case Family::RadialDrift:
      nu = param;
      d = {2, -nu, 2, -nu};
      s = {-rk, 0, -rk};
      break;
    case Family::General:
      throw NormalizationError("family pair: General has no canonical representative");
  }
  SlitFieldPair p;
  p.delta = delta_field(d);
  p.sigma = sigma_field(s);
  p.family = f;
  p.kappa = kappa;
  p.nu = (f == Family::RightFixedPoint) ? 6 - kappa
         : (f == Family::LeftFixedPoint) ? kappa - 6
                                         : nu;
  p.xi = xi;
  return p;
}

// ---------------------------------------------------------------------------
// group moves, expressed on the Laurent coefficients

namespace {

std::array<double, 4> r_move4(const std::array<double, 4>& v, double g) {
  return {v[0], v[1] + 3 * v[0] * g, v[2] + 2 * v[1] * g + 3 * v[0] * g * g,
          v[3] + v[2] * g + v[1] * g * g + v[0] * g * g * g};
}

std::array<double, 3> r_move3(const std::array<double, 3>& v, double g) {
  return {v[0], v[1] + 2 * v[0] * g, v[2] + v[1] * g + v[0] * g * g};
}

std::array<double, 4> dil_move4(const std::array<double, 4>& v, double a) {
  return {v[0] * a * a, v[1] * a, v[2], v[3] / a};
}

std::array<double, 3> dil_move3(const std::array<double, 3>& v, double a) {
  return {v[0] * a, v[1], v[2] / a};
}

}  // namespace

SlitFieldPair transform_scale(const SlitFieldPair& p, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw NormalizationError("scale factor must be positive");
  auto d = laurent4(p.delta);
  auto s = laurent3(p.sigma);
  for (auto& v : d) v *= c * c;
  for (auto& v : s) v *= c;
  SlitFieldPair q = p;
  q.delta = delta_field(d);
  q.sigma = sigma_field(s);
  return q;  // kappa, nu, xi and the family label are scale invariants
}

namespace {

// build the pair and label it with its orbit class
SlitFieldPair labeled_pair(const std::array<double, 4>& d, const std::array<double, 3>& s) {
  SlitFieldPair q = make_pair_raw(d, s);
  Classification cl = classify(d, s);
  q.family = cl.family;
  q.xi = cl.xi;
  return q;
}

}  // namespace

SlitFieldPair transform_r(const SlitFieldPair& p, double gamma) {
  if (!std::isfinite(gamma)) throw NormalizationError("r-transform parameter must be finite");
  auto d = r_move4(laurent4(p.delta), gamma);
  auto s = r_move3(laurent3(p.sigma), gamma);
  return labeled_pair(d, s);
}

SlitFieldPair drift_insert(const SlitFieldPair& p, double nu0) {
  auto d = laurent4(p.delta);
  auto s = laurent3(p.sigma);
  double kappa = kappa_of(d, {s[0], s[1], s[2]});
  // lambda makes the drift invariant shift by exactly nu0 at any overall scale
  double lambda = nu0 / std::sqrt(kappa) * std::sqrt(d[0] / 2.0);
  d[1] += lambda * s[0];
  d[2] += lambda * s[1];
  d[3] += lambda * s[2];
  return labeled_pair(d, s);
}

// ---------------------------------------------------------------------------
// classification: normalize, canonicalize sigma's root configuration with
// maps fixing the pole, then pattern-match the table rows (lowest row wins)

namespace {

struct Coeffs {
  std::array<double, 4> d;
  std::array<double, 3> s;
};

double coeff_scale(const Coeffs& c) {
  double m = 1.0;
  for (double v : c.d) m = std::max(m, std::abs(v));
  for (double v : c.s) m = std::max(m, std::abs(v));
  return m;
}

// scale to d[0] = 2 and s[0] < 0 (the sign flip is the B -> -B symmetry)
double normalize(Coeffs& c) {
  double f = std::sqrt(2.0 / c.d[0]);
  for (auto& v : c.d) v *= f * f;
  for (auto& v : c.s) v *= f;
  if (c.s[0] > 0)
    for (auto& v : c.s) v = -v;
  return c.s[0] * c.s[0];  // kappa
}

void apply_stab_map(Coeffs& c, double a, double b) {
  // m(z) = a z / (1 + b z) = dilation_a o r_{-b}, fixes 0, requires a > 0
  c.d = r_move4(c.d, -b);
  c.s = r_move3(c.s, -b);
  c.d = dil_move4(c.d, a);
  c.s = dil_move3(c.s, a);
}

}  // namespace

Classification classify(const std::array<double, 4>& d_in, const std::array<double, 3>& s_in) {
  for (double v : d_in) require_finite_real(v, "classify delta");
  for (double v : s_in) require_finite_real(v, "classify sigma");
  if (d_in[0] <= 0.0) throw NormalizationError("classify: coefficient of 1/z must be positive");
  if (s_in[0] == 0.0) throw NormalizationError("classify: sigma(0) must be nonzero");

  Coeffs c{d_in, s_in};
  double kappa = normalize(c);
  Coeffs normalized_input = c;

  // sigma's root configuration on the projective line, in reciprocal
  // coordinates u = 1/root (u = 0 encodes infinity; roots never sit at the
  // pole since sigma(0) != 0). Roots closer than 1e-9 in u are one double
  // root; a double root is sent to infinity, leaving sigma constant.
  double rscale = std::max({std::abs(c.s[0]), std::abs(c.s[1]), std::abs(c.s[2])});
  double eps = 1e-13 * rscale;
  enum { ConstSigma, TwoReal, ComplexPair } shape;
  double u1 = 0, u2 = 0;
  cplx u0;
  bool is_double = false;
  double u_dbl = 0;
  if (std::abs(c.s[2]) <= eps && std::abs(c.s[1]) <= eps) {
    shape = ConstSigma;  // double root at infinity already
  } else {
    if (std::abs(c.s[2]) <= eps) {
      shape = TwoReal;
      u1 = -c.s[1] / c.s[0];  // finite root -s0/s1, second root at infinity
      u2 = 0;
    } else {
      double disc = c.s[1] * c.s[1] - 4 * c.s[2] * c.s[0];
      if (disc >= 0) {
        shape = TwoReal;
        double sq = std::sqrt(disc);
        double q = -(c.s[1] + (c.s[1] >= 0 ? sq : -sq)) / 2;
        if (q == 0.0) {  // s1 = disc = 0
          u1 = u2 = 0;
          is_double = true;
        } else {
          u1 = c.s[2] / q;       // 1/(q/s2)
          u2 = q / c.s[0];       // 1/(s0/q)
        }
      } else {
        shape = ComplexPair;
        double x = -c.s[1] / (2 * c.s[2]);
        double y = std::sqrt(-disc) / (2 * std::abs(c.s[2]));
        u0 = 1.0 / cplx(x, y);
      }
    }
    double usep_tol = 1e-9;
    if (shape == TwoReal && !is_double) {
      usep_tol *= std::max({1.0, std::abs(u1), std::abs(u2)});
      if (std::abs(u1 - u2) <= usep_tol) {
        is_double = true;
        u_dbl = (u1 + u2) / 2;
      }
    } else if (shape == ComplexPair) {
      usep_tol *= std::max(1.0, std::abs(u0));
      if (2 * std::abs(u0.imag()) <= usep_tol) {
        is_double = true;
        u_dbl = u0.real();
      }
    }
    if (is_double) {
      if (u_dbl != 0.0) {
        c.d = r_move4(c.d, u_dbl);  // r with gamma = 1/x0 sends x0 to infinity
        c.s = r_move3(c.s, u_dbl);
      }
      c.s[1] = c.s[2] = 0.0;  // exact by construction up to the tie tolerance
      kappa = normalize(c);
      shape = ConstSigma;
    } else if (shape == TwoReal) {
      if (u1 < u2) std::swap(u1, u2);
      apply_stab_map(c, (u1 - u2) / 2, -(u1 + u2) / 2);
      kappa = normalize(c);
    } else {
      // conjugate pair: map the upper root to i
      apply_stab_map(c, std::abs(u0.imag()), -u0.real());
      kappa = normalize(c);
    }
  }

  double tolm = 1e-9 * std::max(1.0, coeff_scale(c));
  Classification out;
  out.kappa = kappa;
  auto finish = [&](Family f, double param) {
    out.family = f;
    out.canonical = make_family_pair(f, kappa, param);
    out.nu = out.canonical.nu;
    out.xi = out.canonical.xi;
    return out;
  };

  if (shape == ConstSigma) {
    if (std::abs(c.d[2]) <= tolm && std::abs(c.d[3]) <= tolm)
      return finish(Family::ChordalDrift, -c.d[1]);
    if (std::abs(c.d[1]) <= tolm && std::abs(c.d[3]) <= tolm)
      return finish(Family::ChordalTimeChange, c.d[2] / 2);
  } else if (shape == TwoReal) {
    if (std::abs(c.d[2] + 2) <= tolm && std::abs(c.d[3] + c.d[1]) <= tolm)
      return finish(Family::DipolarDrift, -c.d[1]);
    if (std::abs(c.d[1] - (kappa - 6)) <= tolm) {
      double xi = c.d[2] / 2 - 3 + kappa;
      if (std::abs(c.d[3] - (kappa - 2 - 2 * xi)) <= tolm)
        return finish(Family::RightFixedPoint, xi);
    }
    if (std::abs(c.d[1] + (kappa - 6)) <= tolm) {
      double xi = c.d[2] / 2 - 3 + kappa;
      if (std::abs(c.d[3] + (kappa - 2 - 2 * xi)) <= tolm)
        return finish(Family::LeftFixedPoint, xi);
    }
  } else {
    if (std::abs(c.d[2] - 2) <= tolm && std::abs(c.d[3] - c.d[1]) <= tolm)
      return finish(Family::RadialDrift, -c.d[1]);
  }

  out.family = Family::General;
  out.canonical = make_pair_raw(normalized_input.d, normalized_input.s);
  out.nu = out.canonical.nu;
  out.xi = 0.0;
  return out;
}

Classification classify(const SlitFieldPair& p) {
  auto d = laurent4(p.delta);
  auto s = laurent3(p.sigma);
  return classify(d, s);
}

// ---------------------------------------------------------------------------
// one-point functions

const char* eta_family_name(EtaFamily f) {
  switch (f) {
    case EtaFamily::ChordalDrift: return "chordal_drift";
    case EtaFamily::ChordalTimeChange: return "chordal_timechange";
    case EtaFamily::DipolarDrift: return "dipolar_drift";
    case EtaFamily::RightFixedPoint: return "right_fixed_point";
    case EtaFamily::LeftFixedPoint: return "left_fixed_point";
    case EtaFamily::RadialDrift: return "radial_drift";
    case EtaFamily::DirichletNeumann4: return "dirichlet_neumann4";
    case EtaFamily::Twisted4: return "twisted4";
  }
  return "?";
}

EtaFamily eta_family_from_name(const std::string& s) {
  for (EtaFamily f :
       {EtaFamily::ChordalDrift, EtaFamily::ChordalTimeChange, EtaFamily::DipolarDrift,
        EtaFamily::RightFixedPoint, EtaFamily::LeftFixedPoint, EtaFamily::RadialDrift,
        EtaFamily::DirichletNeumann4, EtaFamily::Twisted4})
    if (s == eta_family_name(f)) return f;
  throw ConfigError("unknown one-point family name: " + s);
}

PrePreSchwarzian make_eta(EtaFamily f, double kappa, double nu) {
  return make_eta(f, kappa, nu, PI / std::sqrt(kappa));
}

PrePreSchwarzian make_eta(EtaFamily f, double kappa, double nu, double C) {
  if (kappa <= 0.0) throw NormalizationError("one-point function: kappa must be positive");
  PrePreSchwarzian e;
  e.family = f;
  e.kappa = kappa;
  e.nu = nu;
  e.C = C;
  e.natural = (f == EtaFamily::DirichletNeumann4) ? Chart::Strip
              : (f == EtaFamily::Twisted4)        ? Chart::Log
                                                  : Chart::HalfPlane;
  e.chi = chi_of(kappa);
  e.mu = mu_of(kappa);
  e.mu_star = std::conj(e.mu);
  return e;
}

namespace {

void reject_singular(const PrePreSchwarzian& e, cplx z) {
  const double r = 1e-8;
  auto bad = [&](cplx p) { return std::abs(z - p) < r; };
  switch (e.family) {
    case EtaFamily::DipolarDrift:
      if (bad(1.0) || bad(-1.0)) throw SingularityError("one-point function singular at +-1");
      break;
    case EtaFamily::RightFixedPoint:
      if (bad(1.0)) throw SingularityError("one-point function singular at 1");
      break;
    case EtaFamily::LeftFixedPoint:
      if (bad(-1.0)) throw SingularityError("one-point function singular at -1");
      break;
    case EtaFamily::RadialDrift:
      if (bad(I) || bad(-I)) throw SingularityError("one-point function singular at +-i");
      break;
    case EtaFamily::Twisted4: {
      double k = std::round(z.real() / (2 * PI));
      if (std::abs(z - cplx(2 * PI * k, 0)) < r)
        throw SingularityError("one-point function singular at multiples of 2 pi");
      return;  // the multiple-of-2pi check covers the origin
    }
    default:
      break;
  }
  if (std::abs(z) < r) throw SingularityError("one-point function singular at the origin");
}

}  // namespace

EtaJet eta_plus_jet(const PrePreSchwarzian& e, cplx z) {
  reject_singular(e, z);
  double rk = std::sqrt(e.kappa);
  cplx P = I / rk;
  switch (e.family) {
    case EtaFamily::ChordalDrift: {
      cplx D = I * e.nu / (2 * rk);
      return {P * std::log(z) + D * z, P / z + D, -P / (z * z)};
    }
    case EtaFamily::ChordalTimeChange:
      return {P * std::log(z), P / z, -P / (z * z)};
    case EtaFamily::DipolarDrift: {
      cplx Q = I * (e.kappa - 6) / (4 * rk);
      cplx R = I * e.nu / (2 * rk);
      cplx s = 1.0 - z * z;
      return {P * std::log(z) + Q * std::log(s) + R * std::atanh(z),
              P / z + (R - 2.0 * Q * z) / s,
              -P / (z * z) + (2.0 * R * z - 2.0 * Q - 2.0 * Q * z * z) / (s * s)};
    }
    case EtaFamily::RightFixedPoint: {
      cplx S = I * (e.kappa - 6) / (2 * rk);
      cplx s = 1.0 - z;
      return {P * std::log(z) + S * std::log(s), P / z - S / s, -P / (z * z) - S / (s * s)};
    }
    case EtaFamily::LeftFixedPoint: {
      cplx S = I * (e.kappa - 6) / (2 * rk);
      cplx s = 1.0 + z;
      return {P * std::log(z) + S * std::log(s), P / z + S / s, -P / (z * z) - S / (s * s)};
    }
    case EtaFamily::RadialDrift: {
      cplx Q = I * (e.kappa - 6) / (4 * rk);
      cplx R = I * e.nu / (2 * rk);
      cplx s = 1.0 + z * z;
      return {P * std::log(z) + Q * std::log(s) + R * std::atan(z),
              P / z + (2.0 * Q * z + R) / s,
              -P / (z * z) + (2.0 * Q - 2.0 * Q * z * z - 2.0 * R * z) / (s * s)};
    }
    case EtaFamily::DirichletNeumann4: {
      cplx E = I * e.nu / (4 * rk);
      cplx sh = std::sinh(0.5 * z), ch = std::cosh(0.5 * z);
      return {P * std::log(std::tanh(0.25 * z)) + E * z, P / (2.0 * sh) + E,
              -P * ch / (4.0 * sh * sh)};
    }
    case EtaFamily::Twisted4: {
      cplx E = I * e.nu / (4 * rk);
      cplx sn = std::sin(0.5 * z), cs = std::cos(0.5 * z);
      return {P * std::log(std::tan(0.25 * z)) + E * z, P / (2.0 * sn) + E,
              -P * cs / (4.0 * sn * sn)};
    }
  }
  throw DomainError("bad one-point family");
}

EtaJet eta_plus_chart_jet(const PrePreSchwarzian& e, Chart chart, cplx z, int branch) {
  if (chart == e.natural) return eta_plus_jet(e, z);
  MapJet t = transition_eval_jet({chart, e.natural, branch}, z);
  EtaJet n = eta_plus_jet(e, t.w);
  cplx q = t.d2 / t.d1;
  return {n.value + e.mu * std::log(t.d1), n.d1 * t.d1 + e.mu * q,
          n.d2 * t.d1 * t.d1 + n.d1 * t.d2 + e.mu * (t.d3 / t.d1 - q * q)};
}

double eta_eval(const PrePreSchwarzian& e, Chart chart, cplx z, int branch) {
  if (chart == e.natural) {
    // closed-domain evaluation: boundary points carry the jump structure
    bool ok = false;
    switch (chart) {
      case Chart::HalfPlane:
      case Chart::Log: ok = z.imag() >= 0.0; break;
      case Chart::Strip: ok = z.imag() >= 0.0 && z.imag() <= PI; break;
      case Chart::Disk: ok = std::abs(z) <= 1.0; break;
    }
    if (!ok) throw DomainError("point outside the closed chart image");
    return 2.0 * eta_plus_jet(e, z).value.real() + e.C;
  }
  MapJet t = transition_eval_jet({chart, e.natural, branch}, z);
  return 2.0 * eta_plus_jet(e, t.w).value.real() + e.C - e.chi * std::arg(t.d1);
}

// ---------------------------------------------------------------------------
// Lie derivatives and the generator

std::pair<cplx, cplx> flow_field(const RationalField& v, Chart chart, cplx z, double s,
                                 int substeps) {
  // RK4 on zdot = v(z) with the log-derivative transported alongside
  cplx w = z, logd = 0.0;
  double h = s / substeps;
  for (int k = 0; k < substeps; ++k) {
    auto f = [&](cplx p) {
      FieldJet j = vf_eval_jet(v, chart, p);
      return std::pair<cplx, cplx>(j.v, j.dv);
    };
    auto [k1, l1] = f(w);
    auto [k2, l2] = f(w + 0.5 * h * k1);
    auto [k3, l3] = f(w + 0.5 * h * k2);
    auto [k4, l4] = f(w + h * k3);
    w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    logd += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  check_finite(w, "flow_field");
  return {w, logd};
}

namespace {

// pushforward value of the one-point function along the flow of v
double eta_along_flow(const RationalField& v, const PrePreSchwarzian& e, Chart chart, cplx z,
                      double s) {
  auto [w, logd] = flow_field(v, chart, z, s);
  return eta_eval(e, chart, w) - e.chi * logd.imag();
}

}  // namespace

double lie_deriv_pps(const RationalField& v, const PrePreSchwarzian& e, Chart chart, cplx z,
                     Route route) {
  if (route == Route::Analytic) {
    FieldJet jv = vf_eval_jet(v, chart, z);
    EtaJet je = eta_plus_chart_jet(e, chart, z);
    return 2.0 * (jv.v * je.d1 + e.mu * jv.dv).real();
  }
  double h = tol::fd_step;
  auto d = [&](double hh) {
    return (eta_along_flow(v, e, chart, z, hh) - eta_along_flow(v, e, chart, z, -hh)) / (2 * hh);
  };
  double dh = d(h), dh2 = d(h / 2);
  return (4 * dh2 - dh) / 3;
}

std::vector<double> diffusion_apply(const SlitFieldPair& pair, const PrePreSchwarzian& e,
                                    Chart chart, const std::vector<cplx>& points, Route route) {
  std::vector<double> out;
  out.reserve(points.size());
  for (cplx z : points) {
    if (route == Route::Analytic) {
      // the generator acts chart-covariantly; evaluate in the natural chart
      cplx w = z;
      if (chart != e.natural) w = transition_eval_jet({chart, e.natural}, z).w;
      FieldJet dj = vf_eval_jet(pair.delta, e.natural, w);
      FieldJet sj = vf_eval_jet(pair.sigma, e.natural, w);
      EtaJet ej = eta_plus_jet(e, w);
      cplx djp = sj.dv * ej.d1 + sj.v * ej.d2 + e.mu * sj.d2v;  // (j_plus)'
      out.push_back(2.0 * (dj.v * ej.d1 + e.mu * dj.dv + 0.5 * sj.v * djp).real());
    } else {
      double ld = lie_deriv_pps(pair.delta, e, chart, z, Route::FlowFD);
      double h = 5e-3;
      auto second = [&](double hh) {
        double p = eta_along_flow(pair.sigma, e, chart, z, hh);
        double m = eta_along_flow(pair.sigma, e, chart, z, -hh);
        double c = eta_eval(e, chart, z);
        return (p - 2 * c + m) / (hh * hh);
      };
      double sh = second(h), sh2 = second(h / 2);
      out.push_back(ld + 0.5 * (4 * sh2 - sh) / 3);
    }
  }
  return out;
}

std::vector<double> diffusion_apply(const SlitFieldPair& pair,
                                    const std::function<double(cplx)>& X, Chart chart,
                                    const std::vector<cplx>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (cplx z : points) {
    auto flowed = [&](const RationalField& v, double s) {
      return X(flow_field(v, chart, z, s).first);
    };
    double h = tol::fd_step;
    auto d1 = [&](double hh) {
      return (flowed(pair.delta, hh) - flowed(pair.delta, -hh)) / (2 * hh);
    };
    double ld = (4 * d1(h / 2) - d1(h)) / 3;
    double h2 = 5e-3;
    double x0 = X(z);
    auto second = [&](double hh) {
      return (flowed(pair.sigma, hh) - 2 * x0 + flowed(pair.sigma, -hh)) / (hh * hh);
    };
    out.push_back(ld + 0.5 * (4 * second(h2 / 2) - second(h2)) / 3);
  }
  return out;
}

}  // namespace slitflow
