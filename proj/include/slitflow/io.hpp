#pragma once
// Artifact emission: CSV tables and standalone SVG plots, written atomically.

#include <string>
#include <vector>

#include "slitflow/gff.hpp"
#include "slitflow/loewner.hpp"

namespace slitflow {

// Write content to path via a temporary file in the same directory followed
// by an atomic rename; IoError on any filesystem failure.
void write_text_atomic(const std::string& path, const std::string& content);

// Trajectory table with one row per grid record and tracked point:
// t,path_id,point_id,re_w,im_w,re_d,im_d,alive. '.' decimal, %.17g floats,
// LF line endings, header row.
std::string trajectory_csv(const std::vector<LoewnerRun>& runs);

// Slit traces as a standalone SVG document, one polyline per trace,
// imaginary axis drawn upward. No external assets.
std::string trace_svg(const std::vector<std::vector<cplx>>& traces);

// Ensemble table: sample,<one column per observable pairing>.
std::string ensemble_csv(const GffEnsemble& ens);

}  // namespace slitflow
