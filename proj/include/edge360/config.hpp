#pragma once

#include <cstdint>
#include <string>

#include "edge360/env.hpp"
#include "edge360/policy.hpp"
#include "edge360/rl/trainer.hpp"

namespace edge360::config {

// A run configuration with videos/traces fully resolved (files loaded,
// inline generator specs expanded). Relative paths resolve against the
// config file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string regime;  // low/medium/high tag, informational
  env::EnvConfig environment;

  std::string policy_name = "random";  // bba | fixed | random | checkpoint:<path>
  policy::BbaParams bba;
  int fixed_level = 0;
  pipeline::Placement fixed_placement = pipeline::Placement::kHeadset;

  rl::TrainConfig train;

  std::uint64_t config_hash = 0;  // FNV-1a of the raw config text
};

RunConfig load_run_config(const std::string& path);
// Parse from a JSON string (base_dir resolves relative file references).
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir);

}  // namespace edge360::config
