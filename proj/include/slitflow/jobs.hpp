#pragma once
// Config-driven job runner behind the command line and python entry points:
// validate a JSON config, run the matching library pipeline, and return a
// JSON report. Every job is deterministic in (config, seed, threads).

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace slitflow {

// kind is one of: classify | check | mc | simulate | sample-gff.
// seed_flag overrides the config's "seed" key when set (flags win).
// threads <= 0 selects the hardware default. out_dir prefixes relative
// output paths. With dry_run the config is fully validated and the resolved
// plan is returned without computing or writing anything.
//
// Reports carry a "verdict" ("pass"/"fail") where a check semantics exists;
// ConfigError on malformed configs (unknown keys rejected), IoError on
// filesystem failures.
nlohmann::json run_job(const std::string& kind, const nlohmann::json& config,
                       std::optional<std::uint64_t> seed_flag = std::nullopt,
                       int threads = 0, const std::string& out_dir = ".",
                       bool dry_run = false);

}  // namespace slitflow
