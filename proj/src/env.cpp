#include "edge360/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "edge360/util.hpp"
#include "json.hpp"

namespace edge360::env {

void validate(const EnvConfig& cfg) {
  if (cfg.user_count < 1) throw std::invalid_argument("user_count must be >= 1");
  if (cfg.episode_gops < 2) throw std::invalid_argument("episode_gops must be >= 2");
  if (cfg.videos.empty()) throw std::invalid_argument("config needs at least one video");
  if (cfg.traces.empty()) throw std::invalid_argument("config needs at least one trace");
  if (!cfg.video_names.empty() && cfg.video_names.size() != cfg.videos.size()) {
    throw std::invalid_argument("video_names must match videos");
  }
  const int levels = cfg.videos.front().level_count;
  for (const auto& v : cfg.videos) {
    media::validate(v);
    if (v.level_count != levels) {
      throw std::invalid_argument("all videos must share one level count");
    }
    if (v.gop_count < cfg.episode_gops) {
      throw std::invalid_argument("video shorter than episode_gops");
    }
    if (v.gop_duration_s != cfg.gop_duration_s) {
      throw std::invalid_argument("video gop_duration_s differs from config");
    }
  }
  for (const auto& t : cfg.traces) net::validate(t);
  media::validate(cfg.factors);
  pipeline::validate(cfg.speeds);
  qoe::validate(cfg.duals);
  if (!(cfg.gop_duration_s > 0.0)) throw std::invalid_argument("gop_duration_s must be > 0");
  if (!(cfg.buffer_max_s >= cfg.gop_duration_s)) {
    throw std::invalid_argument("buffer_max_s must be >= gop_duration_s");
  }
  if (!(cfg.h0_rebuffer_s >= 0.0)) throw std::invalid_argument("h0_rebuffer_s must be >= 0");
  if (!(cfg.h1_min_db >= 0.0 && cfg.h1_max_db >= cfg.h1_min_db)) {
    throw std::invalid_argument("invalid h1 range");
  }
  if (cfg.future_window < 1) throw std::invalid_argument("future_window must be >= 1");
}

int feature_width(const EnvConfig& cfg) { return 7 + cfg.future_window; }

StreamingEnv::StreamingEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  duals_ = cfg_.duals;
  user_video_names_.resize(cfg_.user_count);
  rate_scale_bps_.resize(cfg_.user_count);
  bits_scale_.resize(cfg_.user_count);
  for (int n = 0; n < cfg_.user_count; ++n) {
    const std::size_t vi = n % cfg_.videos.size();
    user_video_names_[n] = cfg_.video_names.empty() ? "video" + std::to_string(vi)
                                                    : cfg_.video_names[vi];
    rate_scale_bps_[n] = trace(n).mean_bps();
    const auto& lad = ladder(n);
    double top = 0.0;
    for (int m = 0; m < lad.gop_count; ++m) top = std::max(top, lad.bits(m, lad.level_count - 1));
    bits_scale_[n] = top;
  }
}

const std::string& StreamingEnv::video_name(int user) const { return user_video_names_[user]; }

qoe::QoeTargets StreamingEnv::episode_targets() const {
  double h1 = 0.0;
  for (double h : h1_db_) h1 += h;
  if (!h1_db_.empty()) h1 /= static_cast<double>(h1_db_.size());
  return {cfg_.h0_rebuffer_s, h1};
}

double StreamingEnv::user_qoe(int user) const {
  return qoe::lagrangian_qoe(metrics_[user], duals_, {cfg_.h0_rebuffer_s, h1_db_[user]});
}

Observation StreamingEnv::make_observation() const {
  Observation obs;
  obs.users = cfg_.user_count;
  obs.width = feature_width();
  obs.level_count = level_count();
  obs.remaining_gops = cfg_.episode_gops - gop_;
  obs.features.assign(static_cast<std::size_t>(obs.users) * obs.width, 0.0);
  obs.buffer_s.resize(obs.users);

  const int k = cfg_.future_window;
  const double level_span = std::max(1, level_count() - 1);
  for (int n = 0; n < obs.users; ++n) {
    double* row = obs.features.data() + static_cast<std::size_t>(n) * obs.width;
    row[0] = prev_rate_bps_[n] / rate_scale_bps_[n];
    row[1] = prev_decode_s_[n] / cfg_.buffer_max_s;
    row[2] = prev_transmit_s_[n] / cfg_.buffer_max_s;
    row[3] = prev_render_s_[n] / cfg_.buffer_max_s;
    row[4] = prev_level_[n] < 0 ? 0.0 : static_cast<double>(prev_level_[n]) / level_span;
    row[5] = playback_[n].buffer_s / cfg_.buffer_max_s;
    const auto& lad = ladder(n);
    for (int j = 0; j < k; ++j) {
      const int m = gop_ + j;
      row[6 + j] = m < cfg_.episode_gops
                       ? lad.bits(m, lad.level_count - 1) / bits_scale_[n]
                       : 0.0;
    }
    row[6 + k] = static_cast<double>(obs.remaining_gops) / cfg_.episode_gops;
    obs.buffer_s[n] = playback_[n].buffer_s;
  }
  return obs;
}

Observation StreamingEnv::reset(std::uint64_t episode_seed) {
  std::mt19937_64 rng(util::split_seed(cfg_.seed, "episode", episode_seed));
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  playback_.assign(cfg_.user_count, pipeline::PlaybackState{0.0, 0.0, 0, cfg_.buffer_max_s});
  metrics_.assign(cfg_.user_count, {});
  h1_db_.resize(cfg_.user_count);
  trace_offset_s_.resize(cfg_.user_count);
  qoe_prev_.resize(cfg_.user_count);
  prev_rate_bps_.assign(cfg_.user_count, 0.0);
  prev_decode_s_.assign(cfg_.user_count, 0.0);
  prev_transmit_s_.assign(cfg_.user_count, 0.0);
  prev_render_s_.assign(cfg_.user_count, 0.0);
  prev_level_.assign(cfg_.user_count, -1);
  for (int n = 0; n < cfg_.user_count; ++n) {
    trace_offset_s_[n] = uni(rng) * trace(n).duration_s();
    h1_db_[n] = cfg_.h1_min_db + uni(rng) * (cfg_.h1_max_db - cfg_.h1_min_db);
    qoe_prev_[n] = qoe::lagrangian_qoe(metrics_[n], duals_, {cfg_.h0_rebuffer_s, h1_db_[n]});
  }
  gop_ = 0;
  in_episode_ = true;
  return make_observation();
}

StepResult StreamingEnv::step(const JointAction& action) {
  if (!in_episode_) throw std::logic_error("step called on a finished episode (reset first)");
  const int n_users = cfg_.user_count;
  if (static_cast<int>(action.level.size()) != n_users ||
      static_cast<int>(action.placement.size()) != n_users) {
    throw std::out_of_range("joint action must carry one (level, placement) per user");
  }
  for (int n = 0; n < n_users; ++n) {
    if (action.level[n] < 0 || action.level[n] >= level_count()) {
      throw std::out_of_range("user " + std::to_string(n) + ": level " +
                              std::to_string(action.level[n]) + " out of range [0," +
                              std::to_string(level_count()) + ")");
    }
    const int p = static_cast<int>(action.placement[n]);
    if (p < 0 || p > 2) {
      throw std::out_of_range("user " + std::to_string(n) + ": placement index " +
                              std::to_string(p) + " out of range [0,3)");
    }
  }

  const int m = gop_;
  std::vector<double> decode_demand(n_users), render_demand(n_users);
  for (int n = 0; n < n_users; ++n) {
    decode_demand[n] = media::decode_complexity_bits(ladder(n), m, action.level[n]);
    render_demand[n] = media::render_complexity_bits(ladder(n), cfg_.factors, m, action.level[n]);
  }
  const pipeline::EcuAllocation alloc =
      pipeline::allocate_ecu(action.placement, decode_demand, render_demand, cfg_.speeds);

  StepResult result;
  result.reward.resize(n_users);
  result.timings.resize(n_users);
  result.quality_db.resize(n_users);
  for (int n = 0; n < n_users; ++n) {
    const pipeline::GopTimings raw = pipeline::gop_timings(
        ladder(n), cfg_.factors, m, action.level[n], action.placement[n], cfg_.speeds,
        alloc.decode_share_bps[n], alloc.render_share_bps[n], trace(n),
        trace_offset_s_[n] + playback_[n].clock_s);
    const auto adv = pipeline::advance_buffer(playback_[n], raw, cfg_.gop_duration_s);
    playback_[n] = adv.state;
    result.timings[n] = adv.timings;

    const double q = ladder(n).psnr(m, action.level[n]);
    result.quality_db[n] = q;
    metrics_[n].record(q, adv.timings.rebuffer_s);

    const double qoe_now =
        qoe::lagrangian_qoe(metrics_[n], duals_, {cfg_.h0_rebuffer_s, h1_db_[n]});
    result.reward[n] = qoe::step_reward(qoe_prev_[n], qoe_now);
    qoe_prev_[n] = qoe_now;

    const double payload =
        media::payload_bits(ladder(n), cfg_.factors, m, action.level[n], action.placement[n]);
    prev_rate_bps_[n] = adv.timings.transmit_s > 0.0 ? payload / adv.timings.transmit_s : 0.0;
    prev_decode_s_[n] = adv.timings.decode_s;
    prev_transmit_s_[n] = adv.timings.transmit_s;
    prev_render_s_[n] = adv.timings.render_s;
    prev_level_[n] = action.level[n];
  }

  ++gop_;
  result.done = gop_ == cfg_.episode_gops;
  if (result.done) in_episode_ = false;
  result.observation = make_observation();
  return result;
}

namespace {

nlohmann::json timings_json(const pipeline::GopTimings& t) {
  return {{"decode_s", t.decode_s},
          {"render_s", t.render_s},
          {"transmit_s", t.transmit_s},
          {"wait_s", t.wait_s},
          {"rebuffer_s", t.rebuffer_s}};
}

}  // namespace

EpisodeResult run_episode(RolloutEnv& env, const PolicyFn& policy, std::uint64_t episode_seed,
                          std::ostream* trajectory_jsonl) {
  EpisodeResult result;
  const int n_users = env.user_count();
  result.metrics.assign(n_users, {});
  result.reward_sum.assign(n_users, 0.0);

  Observation obs = env.reset(episode_seed);
  int step_index = 0;
  bool done = false;
  while (!done) {
    JointAction action = policy(obs);
    StepResult sr = env.step(action);
    done = sr.done;
    for (int n = 0; n < n_users; ++n) {
      result.reward_sum[n] += sr.reward[n];
      result.metrics[n].record(sr.quality_db[n], sr.timings[n].rebuffer_s);
    }
    if (trajectory_jsonl != nullptr) {
      nlohmann::json rec;
      rec["step"] = step_index;
      rec["observation"] = obs.features;
      nlohmann::json act;
      act["levels"] = action.level;
      std::vector<std::string> names;
      names.reserve(action.placement.size());
      for (auto p : action.placement) names.emplace_back(media::placement_name(p));
      act["placements"] = names;
      rec["action"] = act;
      rec["reward"] = sr.reward;
      nlohmann::json ts = nlohmann::json::array();
      for (const auto& t : sr.timings) ts.push_back(timings_json(t));
      rec["timings"] = ts;
      rec["done"] = sr.done;
      *trajectory_jsonl << rec.dump() << '\n';
    }
    result.steps.push_back(TrajectoryStep{std::move(obs), std::move(action), sr.reward,
                                          sr.observation, sr.done, sr.timings, sr.quality_db});
    obs = std::move(sr.observation);
    ++step_index;
  }

  result.targets = env.episode_targets();
  const auto duals = env.duals();
  result.final_qoe.resize(n_users);
  for (int n = 0; n < n_users; ++n) {
    result.final_qoe[n] = qoe::lagrangian_qoe(result.metrics[n], duals, result.targets);
  }
  return result;
}

}  // namespace edge360::env
