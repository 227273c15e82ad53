#include "edge360/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "edge360/media.hpp"
#include "edge360/net.hpp"
#include "edge360/util.hpp"
#include "json.hpp"

namespace edge360::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

double get_num(const json& j, const std::string& key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail("missing required field '" + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number()) fail("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::string resolve(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

media::QualityLadder parse_video(const json& j, const std::string& base_dir, std::uint64_t seed,
                                 std::size_t index, double gop_duration_s, std::string& name) {
  if (j.contains("file")) {
    const std::string path = resolve(base_dir, j.at("file").get<std::string>());
    if (!std::filesystem::exists(path)) fail("video file does not exist: " + path);
    auto file = media::load_video(path);
    name = std::filesystem::path(path).stem().string();
    return file.ladder;
  }
  media::VideoGenSpec spec;
  spec.gop_count = static_cast<int>(get_num(j, "gops", 0, true));
  spec.level_count = static_cast<int>(get_num(j, "levels", 0, true));
  spec.base_bitrate_bits = get_num(j, "base_bitrate_bits", 0, true);
  spec.level_growth = get_num(j, "level_growth", 1.5);
  spec.psnr_base_db = get_num(j, "psnr_base_db", 48.0);
  spec.psnr_step_db = get_num(j, "psnr_step_db", 2.0);
  spec.temporal_jitter = get_num(j, "temporal_jitter", 0.0);
  spec.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>()
                                 : util::split_seed(seed, "video", index);
  auto ladder = media::generate_video(spec);
  ladder.gop_duration_s = gop_duration_s;
  name = j.contains("name") ? j.at("name").get<std::string>() : "video" + std::to_string(index);
  return ladder;
}

net::ThroughputTrace parse_trace(const json& j, const std::string& base_dir, std::uint64_t seed,
                                 std::size_t index) {
  if (j.contains("file")) {
    const std::string path = resolve(base_dir, j.at("file").get<std::string>());
    if (!std::filesystem::exists(path)) fail("trace file does not exist: " + path);
    return net::load_trace(path, j.value("loop", true));
  }
  net::TraceGenSpec spec;
  spec.duration_s = get_num(j, "duration_s", 60.0);
  spec.sample_interval_s = get_num(j, "sample_interval_s", 1.0);
  spec.mean_bps = get_num(j, "mean_bps", 0, true);
  spec.log_std = get_num(j, "log_std", 0.0);
  spec.blockage_prob = get_num(j, "blockage_prob", 0.0);
  spec.blockage_factor = get_num(j, "blockage_factor", 0.2);
  spec.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>()
                                 : util::split_seed(seed, "trace", index);
  return net::generate_trace(spec);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  RunConfig run;
  run.config_hash = util::fnv1a64(json_text);
  if (j.contains("seed")) run.seed = j.at("seed").get<std::uint64_t>();
  run.regime = j.value("regime", std::string());

  if (!j.contains("env") || !j.at("env").is_object()) fail("missing 'env' object");
  const json& je = j.at("env");
  env::EnvConfig& ec = run.environment;
  ec.seed = run.seed;
  ec.user_count = static_cast<int>(get_num(je, "users", 6));
  ec.episode_gops = static_cast<int>(get_num(je, "episode_gops", 0, true));
  ec.gop_duration_s = get_num(je, "gop_duration_s", 1.0);
  ec.buffer_max_s = get_num(je, "buffer_max_s", 4.0);
  ec.factors.alpha = get_num(je, "alpha", 2.1);
  ec.factors.beta = get_num(je, "beta", 0.6);
  if (je.contains("speeds")) {
    const json& js = je.at("speeds");
    ec.speeds.headset_decode_bps = get_num(js, "headset_decode_bps", 0.2e9);
    ec.speeds.headset_render_bps = get_num(js, "headset_render_bps", 9.4e9);
    ec.speeds.ecu_decode_bps = get_num(js, "ecu_decode_bps", 7.5e9);
    ec.speeds.ecu_render_bps = get_num(js, "ecu_render_bps", 20.0e9);
  }
  ec.h0_rebuffer_s = get_num(je, "h0_rebuffer_s", 2.0);
  ec.h1_min_db = get_num(je, "h1_min_db", 1.09);
  ec.h1_max_db = get_num(je, "h1_max_db", 2.99);
  if (je.contains("duals")) {
    const json& jd = je.at("duals");
    ec.duals.mu0 = get_num(jd, "mu0", 0.1);
    ec.duals.mu1 = get_num(jd, "mu1", 0.1);
    ec.duals.step = get_num(jd, "step", 0.01);
  }
  ec.future_window = static_cast<int>(get_num(je, "future_window", 5));

  if (!je.contains("videos") || !je.at("videos").is_array() || je.at("videos").empty()) {
    fail("'env.videos' must be a non-empty array");
  }
  std::size_t vi = 0;
  for (const json& jv : je.at("videos")) {
    std::string name;
    ec.videos.push_back(parse_video(jv, base_dir, run.seed, vi, ec.gop_duration_s, name));
    ec.video_names.push_back(name);
    ++vi;
  }
  if (!je.contains("traces") || !je.at("traces").is_array() || je.at("traces").empty()) {
    fail("'env.traces' must be a non-empty array");
  }
  std::size_t ti = 0;
  for (const json& jt : je.at("traces")) {
    ec.traces.push_back(parse_trace(jt, base_dir, run.seed, ti));
    ++ti;
  }
  try {
    env::validate(ec);
  } catch (const std::invalid_argument& e) {
    fail(std::string("env: ") + e.what());
  }

  if (j.contains("policy")) {
    const json& jp = j.at("policy");
    run.policy_name = jp.value("name", std::string("random"));
    run.bba.reservoir_s = get_num(jp, "reservoir_s", 1.0);
    run.bba.cushion_s = get_num(jp, "cushion_s", ec.buffer_max_s - 1.0);
    if (jp.contains("placement")) {
      run.bba.placement = media::placement_from_name(jp.at("placement").get<std::string>());
      run.fixed_placement = run.bba.placement;
    }
    run.fixed_level = static_cast<int>(get_num(jp, "level", 0));
  } else {
    run.bba.cushion_s = ec.buffer_max_s - 1.0;
  }

  if (j.contains("train")) {
    const json& jt = j.at("train");
    rl::TrainConfig& tc = run.train;
    tc.gamma = get_num(jt, "gamma", tc.gamma);
    tc.clip_eps = get_num(jt, "clip_eps", tc.clip_eps);
    tc.dual_clip_c = get_num(jt, "dual_clip_c", tc.dual_clip_c);
    tc.entropy_weight = get_num(jt, "entropy_weight", tc.entropy_weight);
    tc.learning_rate = get_num(jt, "learning_rate", tc.learning_rate);
    tc.n_policy = static_cast<int>(get_num(jt, "n_policy", tc.n_policy));
    tc.n_aux = static_cast<int>(get_num(jt, "n_aux", tc.n_aux));
    tc.n_update = static_cast<int>(get_num(jt, "n_update", tc.n_update));
    tc.batch_size = static_cast<int>(get_num(jt, "batch_size", tc.batch_size));
    tc.rounds = static_cast<int>(get_num(jt, "rounds", tc.rounds));
    tc.use_conv = jt.value("use_conv", tc.use_conv);
    tc.conv_channels = static_cast<int>(get_num(jt, "conv_channels", tc.conv_channels));
    tc.conv_width = static_cast<int>(get_num(jt, "conv_width", tc.conv_width));
    tc.hidden = static_cast<int>(get_num(jt, "hidden", tc.hidden));
    rl::validate(tc);
  }
  run.train.seed = run.seed;
  return run;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace edge360::config
