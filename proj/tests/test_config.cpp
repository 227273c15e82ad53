#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "edge360/config.hpp"
#include "edge360/media.hpp"
#include "edge360/net.hpp"

using namespace edge360;

namespace {

const char* kInlineConfig = R"({
  "seed": 7,
  "regime": "medium",
  "env": {
    "users": 2,
    "episode_gops": 8,
    "buffer_max_s": 4.0,
    "alpha": 2.1,
    "beta": 0.6,
    "h0_rebuffer_s": 2.0,
    "videos": [
      {"gops": 8, "levels": 4, "base_bitrate_bits": 2e8, "level_growth": 1.6}
    ],
    "traces": [
      {"duration_s": 30, "sample_interval_s": 0.5, "mean_bps": 1.5e9, "log_std": 0.3}
    ]
  },
  "policy": {"name": "bba", "reservoir_s": 0.5, "cushion_s": 3.0, "placement": "ecu_full"},
  "train": {"rounds": 5, "n_policy": 10, "n_aux": 2, "n_update": 2, "hidden": 32}
})";

}  // namespace

TEST_CASE("inline config parses and resolves") {
  auto run = config::parse_run_config(kInlineConfig, "");
  CHECK(run.seed == 7);
  CHECK(run.regime == "medium");
  CHECK(run.environment.user_count == 2);
  CHECK(run.environment.episode_gops == 8);
  CHECK(run.environment.videos.size() == 1);
  CHECK(run.environment.videos[0].level_count == 4);
  CHECK(run.environment.traces.size() == 1);
  CHECK(run.environment.traces[0].rates_bps.size() == 60);
  CHECK(run.policy_name == "bba");
  CHECK(run.bba.reservoir_s == 0.5);
  CHECK(run.bba.placement == pipeline::Placement::kEcuFull);
  CHECK(run.train.rounds == 5);
  CHECK(run.train.hidden == 32);
  CHECK(run.train.seed == 7);
  CHECK(run.config_hash != 0);
}

TEST_CASE("config is deterministic per seed") {
  auto a = config::parse_run_config(kInlineConfig, "");
  auto b = config::parse_run_config(kInlineConfig, "");
  CHECK(a.environment.videos[0].compressed_bits == b.environment.videos[0].compressed_bits);
  CHECK(a.environment.traces[0] == b.environment.traces[0]);
}

TEST_CASE("schema violations produce config errors") {
  CHECK_THROWS_AS(config::parse_run_config("{not json", ""), std::invalid_argument);
  CHECK_THROWS_AS(config::parse_run_config(R"({"seed": 1})", ""), std::invalid_argument);
  CHECK_THROWS_AS(
      config::parse_run_config(R"({"env": {"episode_gops": 5, "videos": [], "traces": []}})", ""),
      std::invalid_argument);
  // missing required generator field
  CHECK_THROWS_WITH_AS(
      config::parse_run_config(
          R"({"env": {"episode_gops": 5, "videos": [{"gops": 5, "levels": 3}],
              "traces": [{"mean_bps": 1e9}]}})",
          ""),
      doctest::Contains("base_bitrate_bits"), std::invalid_argument);
  // nonexistent file reference
  CHECK_THROWS_WITH_AS(
      config::parse_run_config(
          R"({"env": {"episode_gops": 5, "videos": [{"file": "nope.csv"}],
              "traces": [{"mean_bps": 1e9}]}})",
          ""),
      doctest::Contains("does not exist"), std::invalid_argument);
}

TEST_CASE("file references load relative to the config directory") {
  // write a video + trace into the working directory, reference them relatively
  media::VideoGenSpec vs;
  vs.gop_count = 6;
  vs.level_count = 3;
  vs.base_bitrate_bits = 1e8;
  auto ladder = media::generate_video(vs);
  media::save_video(ladder, media::MediaFactors{}, "cfgtest_video.csv");

  net::TraceGenSpec ts;
  ts.duration_s = 20;
  ts.mean_bps = 1e9;
  auto trace = net::generate_trace(ts);
  net::save_trace(trace, "cfgtest_trace.csv");

  const char* cfg = R"({
    "seed": 1,
    "env": {
      "users": 1, "episode_gops": 6,
      "videos": [{"file": "cfgtest_video.csv"}],
      "traces": [{"file": "cfgtest_trace.csv"}]
    }
  })";
  {
    std::ofstream out("cfgtest_run.json");
    out << cfg;
  }
  auto run = config::load_run_config("cfgtest_run.json");
  CHECK(run.environment.videos[0].compressed_bits == ladder.compressed_bits);
  CHECK(run.environment.traces[0] == trace);
  CHECK(run.environment.video_names[0] == "cfgtest_video");

  std::remove("cfgtest_video.csv");
  std::remove("cfgtest_video.json");
  std::remove("cfgtest_trace.csv");
  std::remove("cfgtest_run.json");
}
