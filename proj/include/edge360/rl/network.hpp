#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "edge360/env.hpp"
#include "edge360/rl/tensor.hpp"

namespace edge360::rl {

struct Param {
  Matrix value, grad, m1, m2;  // m1/m2 are Adam moments
  Param() = default;
  Param(int r, int c) : value(r, c), grad(r, c), m1(r, c), m2(r, c) {}
  void zero_grad() { grad.fill(0.0); }
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<Param*>& params);

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

struct DenseLayer {
  Param w;  // out×in
  Param b;  // 1×out
  DenseLayer() = default;
  DenseLayer(int in, int out) : w(out, in), b(1, out) {}
  int in_features() const { return w.value.cols; }
  int out_features() const { return w.value.rows; }
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter grads from dy against the cached input x; returns dx.
  Matrix backward(const Matrix& x, const Matrix& dy);
  void init_xavier(std::mt19937_64& rng);
};

struct Conv1dLayer {
  int blocks = 0;
  int in_width = 0;
  Param w;  // channels×ksize
  Param b;  // 1×channels
  Conv1dLayer() = default;
  Conv1dLayer(int blocks, int in_width, int channels, int ksize)
      : blocks(blocks), in_width(in_width), w(channels, ksize), b(1, channels) {}
  int channels() const { return w.value.rows; }
  int ksize() const { return w.value.cols; }
  int out_width() const { return in_width - ksize() + 1; }
  int out_features() const { return blocks * channels() * out_width(); }
  Matrix forward(const Matrix& x) const;
  void backward(const Matrix& x, const Matrix& dy);  // param grads only
  void init_xavier(std::mt19937_64& rng);
};

// One policy/value stage: shared-kernel conv over each user's feature row,
// a mixing dense layer, and whichever heads the stage owns. Heads start at
// zero so the initial policy is uniform and value estimates are zero.
struct ActorConfig {
  int users = 0;
  int row_features = 0;  // per-user input width (state + any cascade one-hot)
  int rate_levels = 0;   // 0 = no rate head
  int placements = 0;    // 0 = no placement head
  bool value_head = true;
  bool use_conv = true;
  int conv_channels = 8;
  int conv_width = 3;
  int hidden = 64;
};

struct ActorOutput {
  Matrix rate_logp;   // batch×(users*levels), log-probs per user block
  Matrix place_logp;  // batch×(users*placements)
  Matrix values;      // batch×users
  // trunk cache for backward
  Matrix input, conv_pre, conv_act, hid_pre, hid_act;
};

class ActorNet {
 public:
  ActorNet() = default;
  ActorNet(const ActorConfig& cfg, std::uint64_t seed);

  const ActorConfig& config() const { return cfg_; }
  ActorOutput forward(const Matrix& x) const;
  // d_* are gradients w.r.t. head pre-softmax logits / raw values; pass an
  // empty matrix to skip a head. Accumulates into parameter grads.
  void backward(const ActorOutput& out, const Matrix& d_rate_logits,
                const Matrix& d_place_logits, const Matrix& d_values);
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  void zero_grads();

 private:
  ActorConfig cfg_;
  Conv1dLayer conv_;
  DenseLayer trunk_;
  DenseLayer rate_head_, place_head_, value_head_;
  friend struct CheckpointCodec;
};

enum class ArchKind { kMtrc, kR1C2, kC1R2, kEcuR, kHeadsetR };
const char* arch_name(ArchKind kind);
ArchKind arch_from_name(const std::string& name);

struct ModelConfig {
  ArchKind kind = ArchKind::kMtrc;
  int users = 0;
  int features = 0;  // per-user state width F
  int levels = 0;
  bool use_conv = true;
  int conv_channels = 8;
  int conv_width = 3;
  int hidden = 64;
  pipeline::Placement fixed_placement = pipeline::Placement::kEcuFull;  // rate-only archs
};

// Hash of everything that must match between training and evaluation for a
// checkpoint to be loadable against an environment.
std::uint64_t shape_hash(const ModelConfig& cfg);

// Actor stage(s) plus critic. Cascade stages are separate networks fed the
// raw state; stage 2 additionally receives the one-hot of the stage-1 action,
// which is treated as a constant (no gradient flows back through it).
class AgentModel {
 public:
  AgentModel() = default;
  AgentModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  bool is_cascade() const {
    return cfg_.kind == ArchKind::kR1C2 || cfg_.kind == ArchKind::kC1R2;
  }
  bool has_placement_head() const {
    return cfg_.kind != ArchKind::kEcuR && cfg_.kind != ArchKind::kHeadsetR;
  }
  // Width of a stage-1 action one-hot (cascades only).
  int stage1_action_width() const;

  ActorNet& stage1() { return stage1_; }
  ActorNet& stage2() { return stage2_; }
  ActorNet& critic() { return critic_; }
  const ActorNet& stage1() const { return stage1_; }
  const ActorNet& stage2() const { return stage2_; }
  const ActorNet& critic() const { return critic_; }

  struct Sample {
    env::JointAction action;
    std::vector<double> rate_logp;   // users*levels
    std::vector<double> place_logp;  // users*3, empty without a placement head
  };
  Sample sample(const std::vector<double>& features, std::mt19937_64& rng) const;
  env::JointAction greedy(const std::vector<double>& features) const;

  // Stage-2 training input built from observations and stored stage-1 actions.
  Matrix build_stage2_input(const Matrix& obs, const std::vector<env::JointAction>& actions) const;

  std::vector<Param*> actor_params();

 private:
  env::JointAction assemble_action(const std::vector<int>& levels,
                                   const std::vector<int>& placements) const;
  ModelConfig cfg_;
  ActorNet stage1_, stage2_, critic_;
};

// Versioned JSON checkpoint: model config, parameters, shape hash, and the
// (informational) full run-config hash.
void save_checkpoint(const AgentModel& model, const std::string& path,
                     std::uint64_t run_config_hash);
struct LoadedCheckpoint {
  AgentModel model;
  std::uint64_t run_config_hash = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace edge360::rl
