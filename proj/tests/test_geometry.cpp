#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "slitflow/geometry.hpp"

using namespace slitflow;

TEST_CASE("disk to half plane at the origin") {
  auto [w, dw] = transition_eval({Chart::Disk, Chart::HalfPlane}, cplx(0, 0));
  CHECK(std::abs(w - I) < 1e-14);
  CHECK(std::abs(dw - cplx(0, -2)) < 1e-14);
}

TEST_CASE("strip to half plane at i*pi/2") {
  auto [w, dw] = transition_eval({Chart::Strip, Chart::HalfPlane}, cplx(0, PI / 2));
  CHECK(std::abs(w - I) < 1e-14);
  CHECK(std::abs(dw - 1.0) < 1e-14);
}

TEST_CASE("round trips recover the point and invert the derivative") {
  const Chart charts[] = {Chart::Disk, Chart::Strip, Chart::Log};
  const cplx pts[] = {cplx(0.3, 0.2), cplx(-0.25, 0.45), cplx(0.1, 0.7)};
  for (Chart c : charts) {
    for (cplx z0 : pts) {
      cplx z = z0;
      if (c == Chart::Strip) z = cplx(z0.real(), 0.4 + 2.0 * z0.imag());  // keep inside strip
      if (c == Chart::Log) z = cplx(2.0 * z0.real(), 0.3 + z0.imag());
      auto [w, dw] = transition_eval({c, Chart::HalfPlane}, z);
      auto [z2, dz] = transition_eval({Chart::HalfPlane, c}, w);
      CHECK(std::abs(z2 - z) < 1e-12);
      CHECK(std::abs(dw * dz - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("transition composition obeys the chain rule") {
  // disk -> strip directly vs. through two explicit legs
  cplx z(0.2, -0.1);
  auto [w, dw] = transition_eval({Chart::Disk, Chart::Strip}, z);
  auto [h, dh] = transition_eval({Chart::Disk, Chart::HalfPlane}, z);
  auto [w2, dw2] = transition_eval({Chart::HalfPlane, Chart::Strip}, h);
  CHECK(std::abs(w - w2) < 1e-13);
  CHECK(std::abs(dw - dw2 * dh) < 1e-13);
  CHECK(in_chart(Chart::Strip, w));
}

TEST_CASE("second derivative of the jet matches finite differences") {
  const double h = 1e-5;
  const Transition trips[] = {{Chart::Disk, Chart::Strip},
                              {Chart::Strip, Chart::Disk},
                              {Chart::HalfPlane, Chart::Log},
                              {Chart::Log, Chart::HalfPlane}};
  const cplx base[] = {cplx(0.1, 0.2), cplx(0.3, 1.2), cplx(0.4, 0.8), cplx(0.5, 0.6)};
  for (int k = 0; k < 4; ++k) {
    MapJet j = transition_eval_jet(trips[k], base[k]);
    MapJet jp = transition_eval_jet(trips[k], base[k] + h);
    MapJet jm = transition_eval_jet(trips[k], base[k] - h);
    CHECK(std::abs((jp.d1 - jm.d1) / (2 * h) - j.d2) < 1e-6 * std::max(1.0, std::abs(j.d2)));
    CHECK(std::abs((jp.w - jm.w) / (2 * h) - j.d1) < 1e-6 * std::max(1.0, std::abs(j.d1)));
  }
}

TEST_CASE("boundary and exterior points are rejected") {
  CHECK_THROWS_AS(transition_eval({Chart::Disk, Chart::HalfPlane}, cplx(0, 2)), DomainError);
  CHECK_THROWS_AS(transition_eval({Chart::HalfPlane, Chart::Disk}, cplx(0.5, 0)), DomainError);
  CHECK_THROWS_AS(transition_eval({Chart::Strip, Chart::HalfPlane}, cplx(0, 4)), DomainError);
  CHECK_THROWS_AS(transition_eval({Chart::Strip, Chart::HalfPlane}, cplx(1, 0)), DomainError);
  // interior but on top of the map singularity
  CHECK_THROWS_AS(transition_eval({Chart::HalfPlane, Chart::Log}, cplx(0, 1)), BranchError);
}

TEST_CASE("log chart branches differ by 2*pi and project identically") {
  cplx w(0.7, 0.9);
  auto [z0, d0] = transition_eval({Chart::HalfPlane, Chart::Log, 0}, w);
  auto [z3, d3] = transition_eval({Chart::HalfPlane, Chart::Log, 3}, w);
  CHECK(std::abs(z3 - z0 - 6.0 * PI) < 1e-12);
  CHECK(std::abs(d3 - d0) < 1e-14);
  // the projection back is 2*pi periodic
  auto [w0, dw0] = transition_eval({Chart::Log, Chart::HalfPlane}, z0);
  auto [w3, dw3] = transition_eval({Chart::Log, Chart::HalfPlane}, z3);
  CHECK(std::abs(w0 - w3) < 1e-12);
  CHECK(std::abs(w0 - w) < 1e-12);
  CHECK(std::abs(dw0 - dw3) < 1e-12);
}

TEST_CASE("boundary arcs map to boundary arcs") {
  // a disk boundary point near 1 maps to a half-plane point near 0
  cplx z = std::polar(1.0 - 1e-9, 0.3);
  auto [w, dw] = transition_eval({Chart::Disk, Chart::HalfPlane}, z);
  (void)dw;
  CHECK(w.imag() > 0);
  CHECK(w.imag() < 1e-6);  // nearly real: boundary goes to boundary
}
