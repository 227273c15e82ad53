#include "edge360/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edge360::policy {

void validate(const BbaParams& params, double buffer_max_s) {
  if (!(params.reservoir_s > 0.0 && params.reservoir_s < params.cushion_s &&
        params.cushion_s <= buffer_max_s)) {
    throw std::invalid_argument("BBA needs 0 < reservoir < cushion <= buffer_max");
  }
}

env::JointAction bba_decide(const env::Observation& obs, const BbaParams& params) {
  env::JointAction action;
  action.level.resize(obs.users);
  action.placement.assign(obs.users, params.placement);
  const int top = obs.level_count - 1;
  for (int n = 0; n < obs.users; ++n) {
    const double b = obs.buffer_s[n];
    int level;
    if (b <= params.reservoir_s) {
      level = 0;
    } else if (b >= params.cushion_s) {
      level = top;
    } else {
      const double frac = (b - params.reservoir_s) / (params.cushion_s - params.reservoir_s);
      level = std::min(top, static_cast<int>(std::floor(top * frac)));
    }
    action.level[n] = level;
  }
  return action;
}

env::JointAction FixedPolicy::decide(const env::Observation& obs) {
  if (level_ < 0 || level_ >= obs.level_count) {
    throw std::invalid_argument("fixed policy level out of range");
  }
  env::JointAction action;
  action.level.assign(obs.users, level_);
  action.placement.assign(obs.users, placement_);
  return action;
}

env::JointAction RandomPolicy::decide(const env::Observation& obs) {
  std::uniform_int_distribution<int> level(0, obs.level_count - 1);
  std::uniform_int_distribution<int> place(0, 2);
  env::JointAction action;
  action.level.resize(obs.users);
  action.placement.resize(obs.users);
  for (int n = 0; n < obs.users; ++n) {
    action.level[n] = level(rng_);
    action.placement[n] = static_cast<pipeline::Placement>(place(rng_));
  }
  return action;
}

}  // namespace edge360::policy
