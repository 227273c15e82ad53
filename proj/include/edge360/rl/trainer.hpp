#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "edge360/env.hpp"
#include "edge360/policy.hpp"
#include "edge360/qoe.hpp"
#include "edge360/rl/network.hpp"

namespace edge360::rl {

struct TrainConfig {
  double gamma = 0.99;
  double clip_eps = 0.2;
  double dual_clip_c = 3.0;
  double entropy_weight = 0.01;  // kappa
  double learning_rate = 3e-4;
  int n_policy = 80;   // policy-phase optimization steps per round
  int n_aux = 6;       // auxiliary-phase iterations per round
  int n_update = 4;    // episodes per round
  int batch_size = 0;  // policy-phase minibatch; 0 = full buffer
  int rounds = 1;
  std::uint64_t seed = 0;
  bool use_conv = true;
  int conv_channels = 8;
  int conv_width = 3;
  int hidden = 64;
};
void validate(const TrainConfig& cfg);

struct TrainLogEntry {
  int round = 0;
  std::string phase;  // policy | aux_value | aux_joint
  double loss = 0.0;
  double entropy = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mean_qoe = 0.0;
};

struct TrainResult {
  AgentModel model;
  std::vector<TrainLogEntry> log;
  qoe::DualCoefficients duals;
  int episodes = 0;
};

// Runs the full training loop: per round, n_update sampled episodes with a
// per-episode dual-coefficient update, then n_policy dual-clip policy steps
// and n_aux (value, joint) auxiliary steps; the buffer is cleared and the
// old-policy snapshot advanced at the end of every round.
TrainResult train(env::RolloutEnv& environment, const TrainConfig& cfg, ArchKind kind);

void save_train_log(const std::vector<TrainLogEntry>& log, const std::string& path);

class GreedyModelPolicy : public policy::Policy {
 public:
  explicit GreedyModelPolicy(const AgentModel& model) : model_(&model) {}
  env::JointAction decide(const env::Observation& obs) override {
    return model_->greedy(obs.features);
  }

 private:
  const AgentModel* model_;
};

class SamplingModelPolicy : public policy::Policy {
 public:
  SamplingModelPolicy(const AgentModel& model, std::uint64_t seed) : model_(&model), rng_(seed) {}
  env::JointAction decide(const env::Observation& obs) override {
    return model_->sample(obs.features, rng_).action;
  }

 private:
  const AgentModel* model_;
  std::mt19937_64 rng_;
};

}  // namespace edge360::rl
