#pragma once
// Charts and transition maps. Four charts cover the slit domains used here:
//   halfplane  upper half plane, boundary R, distinguished boundary point 0
//   disk       unit disk, boundary circle, distinguished boundary point 1
//   strip      {0 < Im z < pi}
//   log        upper half plane seen through z = tan(./2); 2*pi-periodic,
//              sheets indexed by an integer branch
//
// transition_eval gives the change-of-chart map and its derivative. All maps
// are composed through the half plane. Points must lie in the source chart's
// open image (DomainError otherwise); points within tol::singular_dist of a
// singular point of the map are rejected; the log-chart target singularity
// (the puncture) raises BranchError.

#include <string>
#include <utility>

#include "slitflow/common.hpp"

namespace slitflow {

enum class Chart { HalfPlane, Disk, Strip, Log };

const char* chart_name(Chart c);
Chart chart_from_name(const std::string& s);  // ConfigError on unknown name

struct Transition {
  Chart from = Chart::HalfPlane;
  Chart to = Chart::HalfPlane;
  int branch = 0;  // sheet index, used only when `to` or `from` is Chart::Log
};

// value and first three derivatives of the map at a point
struct MapJet {
  cplx w;
  cplx d1;
  cplx d2;
  cplx d3;
};

bool in_chart(Chart c, cplx z);                    // strict interior test
void require_in_chart(Chart c, cplx z);            // DomainError if not
MapJet transition_eval_jet(const Transition& t, cplx z);
std::pair<cplx, cplx> transition_eval(const Transition& t, cplx z);  // (w, dw)

}  // namespace slitflow
