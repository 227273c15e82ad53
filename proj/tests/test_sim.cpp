#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "edge360/sim.hpp"
#include "test_helpers.hpp"

using namespace edge360;

namespace {

config::RunConfig small_run(std::uint64_t seed = 5) {
  config::RunConfig run;
  run.seed = seed;
  run.environment = testing::make_env_config(3, 4, 8, 1.2e9, seed);
  run.bba.reservoir_s = 1.0;
  run.bba.cushion_s = 3.0;
  run.bba.placement = pipeline::Placement::kEcuFull;
  run.fixed_level = 1;
  run.fixed_placement = pipeline::Placement::kEcuDecode;
  return run;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate produces episodes x users rows in order") {
  auto run = small_run();
  auto rows = sim::simulate_episodes(run, "random", 10);
  REQUIRE(rows.size() == 30);
  for (int e = 0; e < 10; ++e) {
    for (int n = 0; n < 3; ++n) {
      const auto& r = rows[e * 3 + n];
      CHECK(r.episode == e);
      CHECK(r.user == n);
      CHECK(r.avq_db > 0.0);
      CHECK(r.rt_s >= 0.0);
    }
  }
}

TEST_CASE("simulation output is bit-identical across runs") {
  auto run = small_run();
  auto rows1 = sim::simulate_episodes(run, "bba", 6);
  auto rows2 = sim::simulate_episodes(run, "bba", 6);
  sim::write_metrics_csv(rows1, "simtest_a.csv");
  sim::write_metrics_csv(rows2, "simtest_b.csv");
  CHECK(slurp("simtest_a.csv") == slurp("simtest_b.csv"));
  std::remove("simtest_a.csv");
  std::remove("simtest_b.csv");
}

TEST_CASE("metrics CSV round-trips") {
  auto run = small_run();
  auto rows = sim::simulate_episodes(run, "fixed", 4);
  sim::write_metrics_csv(rows, "simtest_rt.csv");
  auto loaded = sim::read_metrics_csv("simtest_rt.csv");
  REQUIRE(loaded.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(loaded[i].episode == rows[i].episode);
    CHECK(loaded[i].video == rows[i].video);
    CHECK(loaded[i].avq_db == rows[i].avq_db);
    CHECK(loaded[i].qoe == rows[i].qoe);
  }
  std::remove("simtest_rt.csv");
}

TEST_CASE("bba rebuffers no more than random on average") {
  auto run = small_run(11);
  // tighter network so rate choices matter
  run.environment = testing::make_env_config(3, 4, 8, 0.9e9, 11);
  auto bba_rows = sim::simulate_episodes(run, "bba", 50);
  auto random_rows = sim::simulate_episodes(run, "random", 50);
  double bba_rt = 0.0, random_rt = 0.0;
  for (const auto& r : bba_rows) bba_rt += r.rt_s;
  for (const auto& r : random_rows) random_rt += r.rt_s;
  CHECK(bba_rt / bba_rows.size() <= random_rt / random_rows.size());
}

TEST_CASE("trajectory dump contains one record per step") {
  auto run = small_run();
  std::vector<std::string> trajectories;
  sim::simulate_episodes(run, "fixed", 2, &trajectories);
  REQUIRE(trajectories.size() == 2);
  for (const auto& blob : trajectories) {
    int lines = 0;
    for (char c : blob) lines += c == '\n';
    CHECK(lines == 8);  // episode_gops
    CHECK(blob.find("\"reward\"") != std::string::npos);
    CHECK(blob.find("\"timings\"") != std::string::npos);
  }
}

TEST_CASE("report of a single episode has zero std") {
  auto run = small_run();
  auto rows = sim::simulate_episodes(run, "bba", 1);
  auto report = sim::aggregate_report({{"bba", rows}});
  REQUIRE(!report.empty());
  CHECK(report[0].video == "(all)");
  CHECK(report[0].episodes == 1);
  CHECK(report[0].avq.std == 0.0);
  CHECK(report[0].rt.std == 0.0);
}

TEST_CASE("report aggregates match an independent recomputation") {
  auto run = small_run();
  auto rows = sim::simulate_episodes(run, "random", 12);
  auto report = sim::aggregate_report({{"random", rows}});

  // recompute the (all) row by hand: per-episode means, then mean/std
  std::vector<double> episode_means(12, 0.0);
  for (const auto& r : rows) episode_means[r.episode] += r.avq_db / 3.0;
  auto ms = util::mean_std(episode_means);
  CHECK(report[0].avq.mean == doctest::Approx(ms.mean).epsilon(1e-12));
  CHECK(report[0].avq.std == doctest::Approx(ms.std).epsilon(1e-12));

  // per-video rows cover every video label
  std::size_t video_rows = 0;
  for (const auto& r : report) video_rows += r.video != "(all)";
  CHECK(video_rows == 2);  // two videos in the config
}

TEST_CASE("report CSV writes and the labels stick") {
  auto run = small_run();
  auto rows = sim::simulate_episodes(run, "fixed", 3);
  auto report = sim::aggregate_report({{"low", rows}, {"high", rows}});
  sim::write_report_csv(report, "simtest_report.csv");
  const std::string text = slurp("simtest_report.csv");
  CHECK(text.find("label,video,episodes") == 0);
  CHECK(text.find("low,(all)") != std::string::npos);
  CHECK(text.find("high,(all)") != std::string::npos);
  std::remove("simtest_report.csv");
}
