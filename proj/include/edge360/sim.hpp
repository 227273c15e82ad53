#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "edge360/config.hpp"
#include "edge360/rl/network.hpp"
#include "edge360/util.hpp"

namespace edge360::sim {

struct MetricRow {
  int episode = 0;
  int user = 0;
  std::string video;
  double avq_db = 0.0;
  double qv_db = 0.0;
  double rt_s = 0.0;
  double qoe = 0.0;
};

// Runs `episodes` independent episodes of the named policy over the run's
// environment (parallel across episodes; output order is by episode, so the
// result is identical for any thread count). Policy names: bba, fixed,
// random, checkpoint:<path>. `trajectories`, when non-null, receives one
// JSON-lines blob per episode.
std::vector<MetricRow> simulate_episodes(const config::RunConfig& run,
                                         const std::string& policy_name, int episodes,
                                         std::vector<std::string>* trajectories = nullptr);

// Same loop for an in-memory model with greedy action selection.
std::vector<MetricRow> evaluate_model(const config::RunConfig& run, const rl::AgentModel& model,
                                      int episodes);

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

struct ReportRow {
  std::string label;
  std::string video;  // "(all)" for the per-label aggregate
  int episodes = 0;
  util::MeanStd avq, qv, rt, qoe;
};

// Per-episode means first, then mean ± sample std across episodes; one
// aggregate row per label plus one row per (label, video).
std::vector<ReportRow> aggregate_report(
    const std::vector<std::pair<std::string, std::vector<MetricRow>>>& inputs);
void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path);

}  // namespace edge360::sim
