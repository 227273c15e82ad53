#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "edge360/media.hpp"
#include "edge360/net.hpp"
#include "edge360/pipeline.hpp"
#include "edge360/qoe.hpp"

namespace edge360::env {

// Per-user feature rows, already normalized by config-derived scales. Raw
// buffer levels ride along for rule-based policies.
struct Observation {
  int users = 0;
  int width = 0;
  std::vector<double> features;  // users*width row-major
  std::vector<double> buffer_s;
  int level_count = 0;
  int remaining_gops = 0;

  double feature(int user, int f) const { return features[user * width + f]; }
};

struct JointAction {
  std::vector<int> level;
  std::vector<pipeline::Placement> placement;
};

struct StepResult {
  Observation observation;
  std::vector<double> reward;
  bool done = false;
  std::vector<pipeline::GopTimings> timings;
  std::vector<double> quality_db;
};

// Minimal rollout surface shared by the streaming environment and test
// doubles the trainer runs against.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual Observation reset(std::uint64_t episode_seed) = 0;
  virtual StepResult step(const JointAction& action) = 0;
  virtual int user_count() const = 0;
  virtual int level_count() const = 0;
  virtual int feature_width() const = 0;
  virtual int episode_gops() const = 0;
  virtual void set_duals(const qoe::DualCoefficients&) {}
  virtual qoe::DualCoefficients duals() const { return {}; }
  // H0 plus the mean of the per-user H1 draws for the current episode.
  virtual qoe::QoeTargets episode_targets() const { return {}; }
};

struct EnvConfig {
  int user_count = 6;
  std::vector<media::QualityLadder> videos;  // assigned to users round-robin
  std::vector<std::string> video_names;      // optional, parallel to videos
  std::vector<net::ThroughputTrace> traces;  // assigned to users round-robin
  media::MediaFactors factors;
  pipeline::DeviceSpeeds speeds;
  double buffer_max_s = 4.0;
  double gop_duration_s = 1.0;
  int episode_gops = 0;  // M
  double h0_rebuffer_s = 2.0;
  double h1_min_db = 1.09;
  double h1_max_db = 2.99;
  qoe::DualCoefficients duals;
  int future_window = 5;  // K future GoP sizes in the observation
  std::uint64_t seed = 0;
};
void validate(const EnvConfig& cfg);

// Feature width for a config: 6 playback stats + K future sizes + remaining.
int feature_width(const EnvConfig& cfg);

// Synchronized multi-user episode: every step requests GoP m for all users,
// shares the ECU proportionally, advances each playback buffer, and pays the
// per-user change in Lagrangian QoE as reward. Set duals before reset; the
// telescoping reward identity assumes they are fixed within an episode.
class StreamingEnv : public RolloutEnv {
 public:
  explicit StreamingEnv(EnvConfig cfg);

  Observation reset(std::uint64_t episode_seed) override;
  StepResult step(const JointAction& action) override;

  int user_count() const override { return cfg_.user_count; }
  int level_count() const override { return cfg_.videos.front().level_count; }
  int feature_width() const override { return env::feature_width(cfg_); }
  int episode_gops() const override { return cfg_.episode_gops; }
  void set_duals(const qoe::DualCoefficients& duals) override { duals_ = duals; }
  qoe::DualCoefficients duals() const override { return duals_; }
  qoe::QoeTargets episode_targets() const override;

  const EnvConfig& config() const { return cfg_; }
  const std::vector<qoe::EpisodeMetrics>& metrics() const { return metrics_; }
  double user_qoe(int user) const;  // current Lagrangian QoE
  double user_h1(int user) const { return h1_db_[user]; }
  const std::string& video_name(int user) const;

 private:
  Observation make_observation() const;
  const media::QualityLadder& ladder(int user) const {
    return cfg_.videos[user % cfg_.videos.size()];
  }
  const net::ThroughputTrace& trace(int user) const {
    return cfg_.traces[user % cfg_.traces.size()];
  }

  EnvConfig cfg_;
  qoe::DualCoefficients duals_;
  std::vector<std::string> user_video_names_;
  std::vector<double> rate_scale_bps_;
  std::vector<double> bits_scale_;

  // per-episode state
  std::vector<pipeline::PlaybackState> playback_;
  std::vector<qoe::EpisodeMetrics> metrics_;
  std::vector<double> h1_db_;
  std::vector<double> trace_offset_s_;
  std::vector<double> qoe_prev_;
  std::vector<double> prev_rate_bps_, prev_decode_s_, prev_transmit_s_, prev_render_s_;
  std::vector<int> prev_level_;
  int gop_ = 0;
  bool in_episode_ = false;
};

using PolicyFn = std::function<JointAction(const Observation&)>;

struct TrajectoryStep {
  Observation obs;
  JointAction action;
  std::vector<double> reward;
  Observation next_obs;
  bool done = false;
  std::vector<pipeline::GopTimings> timings;
  std::vector<double> quality_db;
};

struct EpisodeResult {
  std::vector<TrajectoryStep> steps;
  std::vector<qoe::EpisodeMetrics> metrics;  // recomputed from step info
  std::vector<double> reward_sum;            // per user
  std::vector<double> final_qoe;             // Lagrangian, from metrics+duals
  qoe::QoeTargets targets;
};

// Rolls one full episode. Optionally writes one JSON record per step
// (observation, action, reward, timings) to trajectory_jsonl.
EpisodeResult run_episode(RolloutEnv& env, const PolicyFn& policy, std::uint64_t episode_seed,
                          std::ostream* trajectory_jsonl = nullptr);

}  // namespace edge360::env
