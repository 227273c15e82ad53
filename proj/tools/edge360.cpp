#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edge360/config.hpp"
#include "edge360/media.hpp"
#include "edge360/net.hpp"
#include "edge360/rl/trainer.hpp"
#include "edge360/sim.hpp"
#include "edge360/util.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace edge360;

void write_manifest(const std::string& out_dir, const nlohmann::json& manifest) {
  std::ofstream out(fs::path(out_dir) / "run.json");
  if (!out) throw std::runtime_error("cannot write run.json in " + out_dir);
  out << manifest.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

config::RunConfig load_config(const CommonOpts& opts) {
  config::RunConfig run = config::load_run_config(opts.config_path);
  if (opts.seed_set) {
    run.seed = opts.seed;
    run.environment.seed = opts.seed;
    run.train.seed = opts.seed;
  }
  return run;
}

int cmd_gen_video(const std::string& out, const media::VideoGenSpec& spec, double alpha,
                  double beta, double gop_duration_s) {
  media::QualityLadder ladder = media::generate_video(spec);
  ladder.gop_duration_s = gop_duration_s;
  media::MediaFactors factors{alpha, beta};
  media::validate(factors);
  media::save_video(ladder, factors, out);
  std::cout << "wrote " << out << " (" << ladder.gop_count << " GoPs x " << ladder.level_count
            << " levels)\n";
  return 0;
}

int cmd_gen_trace(const std::string& out, const net::TraceGenSpec& spec) {
  net::ThroughputTrace trace = net::generate_trace(spec);
  net::save_trace(trace, out);
  std::cout << "wrote " << out << " (" << trace.rates_bps.size() << " samples, mean "
            << util::format_double(trace.mean_bps()) << " bps)\n";
  return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& policy_override, int episodes,
                 bool dump_trajectories) {
  config::RunConfig run = load_config(opts);
  const std::string policy = policy_override.empty() ? run.policy_name : policy_override;
  ensure_dir(opts.out_dir);

  std::vector<std::string> trajectories;
  auto rows = sim::simulate_episodes(run, policy, episodes,
                                     dump_trajectories ? &trajectories : nullptr);
  const std::string metrics_path = (fs::path(opts.out_dir) / "metrics.csv").string();
  sim::write_metrics_csv(rows, metrics_path);
  if (dump_trajectories) {
    std::ofstream tout(fs::path(opts.out_dir) / "trajectories.jsonl");
    for (const auto& blob : trajectories) tout << blob;
  }
  write_manifest(opts.out_dir, {{"command", "simulate"},
                                {"config", opts.config_path},
                                {"config_hash", run.config_hash},
                                {"seed", run.seed},
                                {"policy", policy},
                                {"episodes", episodes},
                                {"regime", run.regime}});
  std::cout << "wrote " << metrics_path << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& arch_name, int rounds_override) {
  config::RunConfig run = load_config(opts);
  if (rounds_override > 0) run.train.rounds = rounds_override;
  const rl::ArchKind kind = rl::arch_from_name(arch_name);
  ensure_dir(opts.out_dir);

  env::StreamingEnv environment(run.environment);
  rl::TrainResult result = rl::train(environment, run.train, kind);

  const std::string ckpt_path = (fs::path(opts.out_dir) / "checkpoint.json").string();
  rl::save_checkpoint(result.model, ckpt_path, run.config_hash);
  const std::string log_path = (fs::path(opts.out_dir) / "train_log.csv").string();
  rl::save_train_log(result.log, log_path);
  write_manifest(opts.out_dir, {{"command", "train"},
                                {"config", opts.config_path},
                                {"config_hash", run.config_hash},
                                {"seed", run.seed},
                                {"arch", arch_name},
                                {"rounds", run.train.rounds},
                                {"episodes", result.episodes},
                                {"final_mu0", result.duals.mu0},
                                {"final_mu1", result.duals.mu1}});
  std::cout << "wrote " << ckpt_path << " and " << log_path << " (" << result.episodes
            << " episodes)\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint_path, int episodes) {
  config::RunConfig run = load_config(opts);
  rl::LoadedCheckpoint loaded = rl::load_checkpoint(checkpoint_path);

  env::StreamingEnv environment(run.environment);
  const rl::ModelConfig& mc = loaded.model.config();
  if (mc.users != environment.user_count() || mc.features != environment.feature_width() ||
      mc.levels != environment.level_count()) {
    std::cerr << "error: checkpoint/config shape mismatch: checkpoint expects users="
              << mc.users << " features=" << mc.features << " levels=" << mc.levels
              << ", config provides users=" << environment.user_count()
              << " features=" << environment.feature_width()
              << " levels=" << environment.level_count() << "\n";
    return 1;
  }
  ensure_dir(opts.out_dir);
  auto rows = sim::evaluate_model(run, loaded.model, episodes);
  const std::string metrics_path = (fs::path(opts.out_dir) / "metrics.csv").string();
  sim::write_metrics_csv(rows, metrics_path);
  write_manifest(opts.out_dir, {{"command", "eval"},
                                {"config", opts.config_path},
                                {"config_hash", run.config_hash},
                                {"checkpoint", checkpoint_path},
                                {"checkpoint_config_hash", loaded.run_config_hash},
                                {"seed", run.seed},
                                {"episodes", episodes},
                                {"regime", run.regime}});
  std::cout << "wrote " << metrics_path << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<std::pair<std::string, std::vector<sim::MetricRow>>> labeled;
  for (const auto& in : inputs) {
    std::string label, path;
    const auto eq = in.find('=');
    if (eq == std::string::npos) {
      path = in;
      label = fs::path(in).stem().string();
    } else {
      label = in.substr(0, eq);
      path = in.substr(eq + 1);
    }
    labeled.emplace_back(label, sim::read_metrics_csv(path));
  }
  auto rows = sim::aggregate_report(labeled);
  sim::write_report_csv(rows, out_path);
  std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven multi-user edge-assisted 360-degree streaming simulator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic videos or throughput traces");
  gen->require_subcommand(1);
  auto* gen_video = gen->add_subcommand("video", "Generate a rate/quality ladder");
  media::VideoGenSpec vspec;
  vspec.gop_count = 60;
  vspec.level_count = 7;
  vspec.base_bitrate_bits = 2e8;
  double alpha = 2.1, beta = 0.6, gop_duration = 1.0;
  std::string gen_out;
  gen_video->add_option("--out", gen_out, "Output CSV path")->required();
  gen_video->add_option("--gops", vspec.gop_count, "GoP count");
  gen_video->add_option("--levels", vspec.level_count, "Quality levels");
  gen_video->add_option("--base-bitrate", vspec.base_bitrate_bits, "Level-0 GoP size in bits");
  gen_video->add_option("--growth", vspec.level_growth, "Per-level size ratio");
  gen_video->add_option("--psnr-base", vspec.psnr_base_db, "Level-0 PSNR in dB");
  gen_video->add_option("--psnr-step", vspec.psnr_step_db, "Per-level PSNR step in dB");
  gen_video->add_option("--jitter", vspec.temporal_jitter, "Per-GoP relative jitter");
  gen_video->add_option("--seed", vspec.seed, "Generator seed");
  gen_video->add_option("--alpha", alpha, "Rendered-size expansion factor");
  gen_video->add_option("--beta", beta, "Compression reduction factor");
  gen_video->add_option("--gop-duration", gop_duration, "GoP duration in seconds");

  auto* gen_trace = gen->add_subcommand("trace", "Generate a throughput trace");
  net::TraceGenSpec tspec;
  std::string gen_trace_out;
  gen_trace->add_option("--out", gen_trace_out, "Output CSV path")->required();
  gen_trace->add_option("--duration", tspec.duration_s, "Trace duration in seconds");
  gen_trace->add_option("--interval", tspec.sample_interval_s, "Sample interval in seconds");
  gen_trace->add_option("--mean-bps", tspec.mean_bps, "Mean throughput in bits/s")->required();
  gen_trace->add_option("--log-std", tspec.log_std, "Log-normal sigma");
  gen_trace->add_option("--blockage-prob", tspec.blockage_prob, "Per-sample blockage probability");
  gen_trace->add_option("--blockage-factor", tspec.blockage_factor, "Blockage rate multiplier");
  gen_trace->add_option("--seed", tspec.seed, "Generator seed");

  // simulate
  CommonOpts sim_opts;
  std::string sim_policy;
  int sim_episodes = 10;
  bool sim_traj = false;
  auto* simulate = app.add_subcommand("simulate", "Run baseline policies and export metrics");
  simulate->add_option("--config", sim_opts.config_path, "Run config JSON")->required();
  simulate->add_option("--policy", sim_policy,
                       "bba | fixed | random | checkpoint:<path> (default from config)");
  simulate->add_option("--episodes", sim_episodes, "Episode count");
  simulate->add_option("--out", sim_opts.out_dir, "Output directory");
  auto* sim_seed = simulate->add_option("--seed", sim_opts.seed, "Root seed override");
  simulate->add_flag("--trajectories", sim_traj, "Also dump per-step JSON-lines trajectories");

  // train
  CommonOpts train_opts;
  std::string arch = "mtrc";
  int rounds = 0;
  auto* train = app.add_subcommand("train", "Train an agent");
  train->add_option("--config", train_opts.config_path, "Run config JSON")->required();
  train->add_option("--arch", arch, "mtrc | r1c2 | c1r2 | ecur | headsetr");
  train->add_option("--rounds", rounds, "Override training rounds");
  train->add_option("--out", train_opts.out_dir, "Output directory");
  auto* train_seed = train->add_option("--seed", train_opts.seed, "Root seed override");

  // eval
  CommonOpts eval_opts;
  std::string checkpoint;
  int eval_episodes = 50;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with greedy actions");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--config", eval_opts.config_path, "Run config JSON")->required();
  eval->add_option("--episodes", eval_episodes, "Episode count");
  eval->add_option("--out", eval_opts.out_dir, "Output directory");
  auto* eval_seed = eval->add_option("--seed", eval_opts.seed, "Root seed override");

  // report
  std::vector<std::string> report_inputs;
  std::string report_out = "report.csv";
  auto* report = app.add_subcommand("report", "Aggregate metric CSVs into mean/std tables");
  report->add_option("--in", report_inputs, "label=metrics.csv (repeatable)")->required();
  report->add_option("--out", report_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen_video->parsed()) return cmd_gen_video(gen_out, vspec, alpha, beta, gop_duration);
    if (gen_trace->parsed()) return cmd_gen_trace(gen_trace_out, tspec);
    if (simulate->parsed()) {
      sim_opts.seed_set = sim_seed->count() > 0;
      return cmd_simulate(sim_opts, sim_policy, sim_episodes, sim_traj);
    }
    if (train->parsed()) {
      train_opts.seed_set = train_seed->count() > 0;
      return cmd_train(train_opts, arch, rounds);
    }
    if (eval->parsed()) {
      eval_opts.seed_set = eval_seed->count() > 0;
      return cmd_eval(eval_opts, checkpoint, eval_episodes);
    }
    if (report->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
