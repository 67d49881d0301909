#pragma once
// Small dense polynomials and rational functions over the complex numbers,
// used for the vector-field algebra (Lie brackets, Ito correctors). All
// manipulation here is coefficient arithmetic; nothing is fitted by sampling.

#include <vector>
#include <algorithm>
#include <cstddef>

#include "slitflow/common.hpp"

namespace slitflow {

struct Poly {
  std::vector<cplx> c;  // ascending powers; c[k] multiplies z^k

  Poly() = default;
  explicit Poly(std::vector<cplx> coeffs) : c(std::move(coeffs)) { trim(); }

  static Poly monomial(std::size_t k, cplx a = 1.0) {
    Poly p;
    p.c.assign(k + 1, cplx(0.0));
    p.c[k] = a;
    return p;
  }

  void trim(double eps = 0.0) {
    double scale = 0.0;
    for (auto& v : c) scale = std::max(scale, std::abs(v));
    double cut = eps * scale;
    while (!c.empty() && std::abs(c.back()) <= cut) c.pop_back();
  }

  int degree() const { return static_cast<int>(c.size()) - 1; }  // -1 for zero poly
  bool is_zero() const { return c.empty(); }

  cplx eval(cplx z) const {
    cplx r = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * z + c[k];
    return r;
  }

  Poly deriv() const {
    Poly d;
    if (c.size() <= 1) return d;
    d.c.resize(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d.c[k - 1] = c[k] * static_cast<double>(k);
    return d;
  }
};

inline Poly operator+(const Poly& a, const Poly& b) {
  Poly r;
  r.c.resize(std::max(a.c.size(), b.c.size()), cplx(0.0));
  for (std::size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (std::size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
  r.trim();
  return r;
}

inline Poly operator-(const Poly& a, const Poly& b) {
  Poly r;
  r.c.resize(std::max(a.c.size(), b.c.size()), cplx(0.0));
  for (std::size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (std::size_t k = 0; k < b.c.size(); ++k) r.c[k] -= b.c[k];
  r.trim();
  return r;
}

inline Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  if (a.is_zero() || b.is_zero()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, cplx(0.0));
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

inline Poly operator*(cplx s, const Poly& a) {
  Poly r = a;
  for (auto& v : r.c) v *= s;
  r.trim();
  return r;
}

// Rational function num/den. Denominators in this library are monomials
// (z^k up to scale) for the Laurent-class fields, but products and brackets
// are formed generically and reduced by cancelling shared monomial factors.
struct Rat {
  Poly num, den;

  Rat() : den(Poly::monomial(0)) {}
  Rat(Poly n, Poly d) : num(std::move(n)), den(std::move(d)) {
    if (den.is_zero()) throw NormalizationError("rational: zero denominator");
    reduce_monomial();
  }

  // cancel common z^k factor and normalize the denominator's leading scale
  void reduce_monomial() {
    num.trim(1e-15);
    den.trim(1e-15);
    while (!num.is_zero() && !den.is_zero() && num.c.size() > 0 && den.c.size() > 1 &&
           std::abs(num.c[0]) < 1e-14 * max_coeff(num) &&
           std::abs(den.c[0]) < 1e-14 * max_coeff(den)) {
      num.c.erase(num.c.begin());
      den.c.erase(den.c.begin());
    }
    num.trim(1e-15);
    den.trim(1e-15);
  }

  static double max_coeff(const Poly& p) {
    double m = 0.0;
    for (auto& v : p.c) m = std::max(m, std::abs(v));
    return m > 0 ? m : 1.0;
  }

  cplx eval(cplx z) const {
    cplx d = den.eval(z);
    if (std::abs(d) < 1e-12 * std::max(1.0, std::pow(std::abs(z), std::max(0, den.degree()))))
      throw PoleError("rational function evaluated at a pole");
    return num.eval(z) / d;
  }

  Rat deriv() const {  // quotient rule
    return Rat(num.deriv() * den - num * den.deriv(), den * den);
  }
};

inline Rat operator+(const Rat& a, const Rat& b) {
  return Rat(a.num * b.den + b.num * a.den, a.den * b.den);
}
inline Rat operator-(const Rat& a, const Rat& b) {
  return Rat(a.num * b.den - b.num * a.den, a.den * b.den);
}
inline Rat operator*(const Rat& a, const Rat& b) { return Rat(a.num * b.num, a.den * b.den); }
inline Rat operator*(cplx s, const Rat& a) { return Rat(s * a.num, a.den); }

// v w' - v' w, the commutator of the associated vector fields
inline Rat lie_bracket_rat(const Rat& v, const Rat& w) {
  return v * w.deriv() - v.deriv() * w;
}

// equality up to coefficient noise, compared via cross multiplication
inline bool rat_near(const Rat& a, const Rat& b, double tol) {
  Poly d = a.num * b.den - b.num * a.den;
  double scale = std::max(Rat::max_coeff(a.num * b.den), Rat::max_coeff(b.num * a.den));
  for (auto& v : d.c)
    if (std::abs(v) > tol * scale) return false;
  return true;
}

}  // namespace slitflow
