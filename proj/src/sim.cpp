#include "edge360/sim.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "edge360/qoe.hpp"
#include "edge360/rl/trainer.hpp"
#include "json.hpp"

namespace edge360::sim {

namespace {

std::unique_ptr<policy::Policy> make_policy(const config::RunConfig& run,
                                            const std::string& name, int episode,
                                            const rl::AgentModel* model) {
  if (name == "bba") {
    policy::validate(run.bba, run.environment.buffer_max_s);
    return std::make_unique<policy::BbaPolicy>(run.bba);
  }
  if (name == "fixed") {
    return std::make_unique<policy::FixedPolicy>(run.fixed_level, run.fixed_placement);
  }
  if (name == "random") {
    return std::make_unique<policy::RandomPolicy>(
        util::split_seed(run.seed, "policy", static_cast<std::uint64_t>(episode)));
  }
  if (model != nullptr) return std::make_unique<rl::GreedyModelPolicy>(*model);
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string trajectory_jsonl(const env::EpisodeResult& result, int episode) {
  std::ostringstream out;
  int step = 0;
  for (const auto& s : result.steps) {
    nlohmann::json rec;
    rec["episode"] = episode;
    rec["step"] = step++;
    rec["observation"] = s.obs.features;
    nlohmann::json act;
    act["levels"] = s.action.level;
    std::vector<std::string> names;
    for (auto p : s.action.placement) names.emplace_back(media::placement_name(p));
    act["placements"] = names;
    rec["action"] = act;
    rec["reward"] = s.reward;
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : s.timings) {
      ts.push_back({{"decode_s", t.decode_s},
                    {"render_s", t.render_s},
                    {"transmit_s", t.transmit_s},
                    {"wait_s", t.wait_s},
                    {"rebuffer_s", t.rebuffer_s}});
    }
    rec["timings"] = ts;
    rec["done"] = s.done;
    out << rec.dump() << '\n';
  }
  return out.str();
}

std::vector<MetricRow> run_episodes(const config::RunConfig& run, const std::string& policy_name,
                                    int episodes, const rl::AgentModel* model,
                                    std::vector<std::string>* trajectories) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const int users = run.environment.user_count;
  std::vector<MetricRow> rows(static_cast<std::size_t>(episodes) * users);
  if (trajectories != nullptr) trajectories->assign(episodes, {});
  make_policy(run, policy_name, 0, model);  // surface policy errors before the parallel region

  std::string error;
#pragma omp parallel for schedule(dynamic) if (episodes > 1)
  for (int e = 0; e < episodes; ++e) {
    try {
      env::StreamingEnv environment(run.environment);
      auto pol = make_policy(run, policy_name, e, model);
      env::EpisodeResult result = env::run_episode(
          environment, [&](const env::Observation& obs) { return pol->decide(obs); },
          static_cast<std::uint64_t>(e));
      for (int n = 0; n < users; ++n) {
        MetricRow& row = rows[static_cast<std::size_t>(e) * users + n];
        row.episode = e;
        row.user = n;
        row.video = environment.video_name(n);
        row.avq_db = qoe::avq(result.metrics[n]);
        row.qv_db = qoe::qv(result.metrics[n]);
        row.rt_s = qoe::rt(result.metrics[n]);
        row.qoe = environment.user_qoe(n);
      }
      if (trajectories != nullptr) (*trajectories)[e] = trajectory_jsonl(result, e);
    } catch (const std::exception& ex) {
#pragma omp critical
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("episode failed: " + error);
  return rows;
}

}  // namespace

std::vector<MetricRow> simulate_episodes(const config::RunConfig& run,
                                         const std::string& policy_name, int episodes,
                                         std::vector<std::string>* trajectories) {
  std::unique_ptr<rl::AgentModel> model;
  std::string name = policy_name;
  if (name.rfind("checkpoint:", 0) == 0) {
    const std::string path = name.substr(std::string("checkpoint:").size());
    model = std::make_unique<rl::AgentModel>(rl::load_checkpoint(path).model);
    name = "checkpoint";
  }
  return run_episodes(run, name, episodes, model.get(), trajectories);
}

std::vector<MetricRow> evaluate_model(const config::RunConfig& run, const rl::AgentModel& model,
                                      int episodes) {
  return run_episodes(run, "checkpoint", episodes, &model, nullptr);
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,user,video,avq_db,qv_db,rt_s,qoe\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << r.user << ',' << r.video << ','
        << util::format_double(r.avq_db) << ',' << util::format_double(r.qv_db) << ','
        << util::format_double(r.rt_s) << ',' << util::format_double(r.qoe) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw util::ParseError(path, 1, "empty file");
  ++line_no;
  if (util::split_csv_line(line) !=
      std::vector<std::string>{"episode", "user", "video", "avq_db", "qv_db", "rt_s", "qoe"}) {
    throw util::ParseError(path, 1, "unexpected metrics header");
  }
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = util::split_csv_line(line);
    if (f.size() != 7) throw util::ParseError(path, line_no, "expected 7 fields");
    try {
      MetricRow r;
      r.episode = static_cast<int>(util::parse_double(f[0]));
      r.user = static_cast<int>(util::parse_double(f[1]));
      r.video = f[2];
      r.avq_db = util::parse_double(f[3]);
      r.qv_db = util::parse_double(f[4]);
      r.rt_s = util::parse_double(f[5]);
      r.qoe = util::parse_double(f[6]);
      rows.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw util::ParseError(path, line_no, e.what());
    }
  }
  return rows;
}

namespace {

struct Accum {
  // per-episode sums for per-episode means
  std::map<int, std::pair<double, int>> avq, qv, rt, qoe;
  void add(const MetricRow& r) {
    auto push = [&](std::map<int, std::pair<double, int>>& m, double v) {
      auto& slot = m[r.episode];
      slot.first += v;
      slot.second += 1;
    };
    push(avq, r.avq_db);
    push(qv, r.qv_db);
    push(rt, r.rt_s);
    push(qoe, r.qoe);
  }
  static std::vector<double> episode_means(const std::map<int, std::pair<double, int>>& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (const auto& [ep, sum] : m) out.push_back(sum.first / sum.second);
    return out;
  }
};

ReportRow finish(const std::string& label, const std::string& video, const Accum& acc) {
  ReportRow row;
  row.label = label;
  row.video = video;
  row.avq = util::mean_std(Accum::episode_means(acc.avq));
  row.qv = util::mean_std(Accum::episode_means(acc.qv));
  row.rt = util::mean_std(Accum::episode_means(acc.rt));
  row.qoe = util::mean_std(Accum::episode_means(acc.qoe));
  row.episodes = static_cast<int>(acc.avq.size());
  return row;
}

}  // namespace

std::vector<ReportRow> aggregate_report(
    const std::vector<std::pair<std::string, std::vector<MetricRow>>>& inputs) {
  std::vector<ReportRow> out;
  for (const auto& [label, rows] : inputs) {
    Accum all;
    std::map<std::string, Accum> by_video;
    for (const auto& r : rows) {
      all.add(r);
      by_video[r.video].add(r);
    }
    out.push_back(finish(label, "(all)", all));
    for (const auto& [video, acc] : by_video) out.push_back(finish(label, video, acc));
  }
  return out;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "label,video,episodes,avq_mean,avq_std,qv_mean,qv_std,rt_mean,rt_std,qoe_mean,qoe_std\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.video << ',' << r.episodes << ','
        << util::format_double(r.avq.mean) << ',' << util::format_double(r.avq.std) << ','
        << util::format_double(r.qv.mean) << ',' << util::format_double(r.qv.std) << ','
        << util::format_double(r.rt.mean) << ',' << util::format_double(r.rt.std) << ','
        << util::format_double(r.qoe.mean) << ',' << util::format_double(r.qoe.std) << '\n';
  }
}

}  // namespace edge360::sim
