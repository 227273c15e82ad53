#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "edge360/env.hpp"

namespace edge360::policy {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual env::JointAction decide(const env::Observation& obs) = 0;
};

struct BbaParams {
  double reservoir_s = 1.0;
  double cushion_s = 3.0;
  pipeline::Placement placement = pipeline::Placement::kEcuFull;
};
void validate(const BbaParams& params, double buffer_max_s);

// Buffer-based rate map: level 0 at/below the reservoir, top level at/above
// the cushion, linear (floored) in between. Placement is fixed.
env::JointAction bba_decide(const env::Observation& obs, const BbaParams& params);

class BbaPolicy : public Policy {
 public:
  explicit BbaPolicy(BbaParams params) : params_(params) {}
  env::JointAction decide(const env::Observation& obs) override {
    return bba_decide(obs, params_);
  }

 private:
  BbaParams params_;
};

class FixedPolicy : public Policy {
 public:
  FixedPolicy(int level, pipeline::Placement placement) : level_(level), placement_(placement) {}
  env::JointAction decide(const env::Observation& obs) override;

 private:
  int level_;
  pipeline::Placement placement_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  env::JointAction decide(const env::Observation& obs) override;

 private:
  std::mt19937_64 rng_;
};

}  // namespace edge360::policy
