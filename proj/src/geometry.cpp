#include "slitflow/geometry.hpp"

#include <cmath>

namespace slitflow {

const char* chart_name(Chart c) {
  switch (c) {
    case Chart::HalfPlane: return "halfplane";
    case Chart::Disk: return "disk";
    case Chart::Strip: return "strip";
    case Chart::Log: return "log";
  }
  return "?";
}

Chart chart_from_name(const std::string& s) {
  if (s == "halfplane") return Chart::HalfPlane;
  if (s == "disk") return Chart::Disk;
  if (s == "strip") return Chart::Strip;
  if (s == "log") return Chart::Log;
  throw ConfigError("unknown chart name: " + s);
}

bool in_chart(Chart c, cplx z) {
  switch (c) {
    case Chart::HalfPlane: return z.imag() > 0.0;
    case Chart::Disk: return std::abs(z) < 1.0;
    case Chart::Strip: return z.imag() > 0.0 && z.imag() < PI;
    case Chart::Log: return z.imag() > 0.0;
  }
  return false;
}

void require_in_chart(Chart c, cplx z) {
  if (!in_chart(c, z))
    throw DomainError(std::string("point outside open image of chart ") + chart_name(c));
}

namespace {

// source chart -> half plane, with first three derivatives
MapJet to_half(Chart from, cplx z) {
  switch (from) {
    case Chart::HalfPlane:
      return {z, 1.0, 0.0, 0.0};
    case Chart::Disk: {
      if (std::abs(z + 1.0) < tol::singular_dist)
        throw SingularityError("disk chart: map singular at z = -1");
      cplx s = 1.0 + z;
      return {I * (1.0 - z) / s, -2.0 * I / (s * s), 4.0 * I / (s * s * s),
              -12.0 * I / (s * s * s * s)};
    }
    case Chart::Strip: {
      cplx w = std::tanh(0.5 * z);
      cplx d1 = 0.5 * (1.0 - w * w);
      return {w, d1, -w * d1, d1 * (3.0 * w * w - 1.0) * 0.5};
    }
    case Chart::Log: {
      cplx w = std::tan(0.5 * z);
      cplx d1 = 0.5 * (1.0 + w * w);
      return {w, d1, w * d1, d1 * (3.0 * w * w + 1.0) * 0.5};
    }
  }
  throw DomainError("bad chart");
}

// half plane -> target chart; branch selects the sheet for Chart::Log
MapJet from_half(Chart to, cplx w, int branch) {
  switch (to) {
    case Chart::HalfPlane:
      return {w, 1.0, 0.0, 0.0};
    case Chart::Disk: {
      cplx s = I + w;
      if (std::abs(s) < tol::singular_dist)
        throw SingularityError("half plane -> disk: singular at w = -i");
      return {(I - w) / s, -2.0 * I / (s * s), 4.0 * I / (s * s * s),
              -12.0 * I / (s * s * s * s)};
    }
    case Chart::Strip: {
      if (std::abs(w - 1.0) < tol::singular_dist || std::abs(w + 1.0) < tol::singular_dist)
        throw SingularityError("half plane -> strip: singular at w = +-1");
      cplx z = std::log((1.0 + w) / (1.0 - w));
      cplx q = 1.0 - w * w;
      return {z, 2.0 / q, 4.0 * w / (q * q), (4.0 + 12.0 * w * w) / (q * q * q)};
    }
    case Chart::Log: {
      if (std::abs(w - I) < tol::singular_dist)
        throw BranchError("half plane -> log: puncture at w = i");
      cplx q = 1.0 + w * w;
      cplx z = 2.0 * std::atan(w) + 2.0 * PI * branch;
      return {z, 2.0 / q, -4.0 * w / (q * q), (12.0 * w * w - 4.0) / (q * q * q)};
    }
  }
  throw DomainError("bad chart");
}

}  // namespace

MapJet transition_eval_jet(const Transition& t, cplx z) {
  require_in_chart(t.from, z);
  if (t.from == t.to && !(t.from == Chart::Log && t.branch != 0)) return {z, 1.0, 0.0, 0.0};
  if (t.from == Chart::Log && t.to == Chart::Log)  // pure sheet shift
    return {z + 2.0 * PI * t.branch, 1.0, 0.0, 0.0};
  MapJet a = to_half(t.from, z);
  MapJet b = from_half(t.to, a.w, t.branch);
  // chain rule through the half plane
  cplx d1 = b.d1 * a.d1;
  cplx d2 = b.d2 * a.d1 * a.d1 + b.d1 * a.d2;
  cplx d3 = b.d3 * a.d1 * a.d1 * a.d1 + 3.0 * b.d2 * a.d1 * a.d2 + b.d1 * a.d3;
  check_finite(b.w, "transition_eval");
  check_finite(d1, "transition_eval derivative");
  return {b.w, d1, d2, d3};
}

std::pair<cplx, cplx> transition_eval(const Transition& t, cplx z) {
  MapJet j = transition_eval_jet(t, z);
  return {j.w, j.d1};
}

}  // namespace slitflow
