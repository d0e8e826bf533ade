#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "dabound/common.hpp"

namespace dab {

// One fully-resolved CLI run: a subcommand, its parameter block, and the
// shared output knobs.
struct RunConfig {
  std::string subcommand;  // gen | estimate | bound | sweep | align | probe | meta
  nlohmann::json params;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool emit_plots = true;
  int jobs = 1;
};

// Validates the documented schema; errors carry the offending field path.
RunConfig parse_run_config(const nlohmann::json& root);

// Applies a dotted-path override ("gen.ratios=[0.5,0.5]") onto a config tree.
void apply_override(nlohmann::json& root, const std::string& assignment);

// Canonical JSON of the effective config (what the manifest hash covers).
nlohmann::json effective_config_json(const RunConfig& cfg);

// Executes the run, writing result.json, manifest.json and any subcommand
// artifacts under cfg.out_dir. Returns the process exit code: 0 success,
// 2 validation error, 3 numerical failure.
int run(const RunConfig& cfg);

std::string fnv1a64_hex(const std::string& data);

}  // namespace dab
