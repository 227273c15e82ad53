#include "edge360/rl/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "edge360/rl/kernels.hpp"
#include "edge360/util.hpp"
#include "json.hpp"

namespace edge360::rl {

namespace {

void add_inplace(Matrix& a, const Matrix& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.v[i] += b.v[i];
}

int argmax_block(const double* x, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

int sample_block_logp(const double* logp, int n, double u) {
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += std::exp(logp[i]);
    if (u < cum) return i;
  }
  return n - 1;
}

}  // namespace

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.v[i];
      p->m1.v[i] = cfg_.beta1 * p->m1.v[i] + (1.0 - cfg_.beta1) * g;
      p->m2.v[i] = cfg_.beta2 * p->m2.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = p->m1.v[i] / bc1;
      const double vhat = p->m2.v[i] / bc2;
      p->value.v[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

Matrix DenseLayer::forward(const Matrix& x) const {
  Matrix y(x.rows, out_features());
  kernels::matmul_nt(x, w.value, y);
  kernels::add_bias_rows(y, b.value);
  return y;
}

Matrix DenseLayer::backward(const Matrix& x, const Matrix& dy) {
  kernels::matmul_tn_acc(dy, x, w.grad);
  kernels::col_sums_acc(dy, b.grad);
  Matrix dx(x.rows, x.cols);
  kernels::matmul_nn(dy, w.value, dx);
  return dx;
}

void DenseLayer::init_xavier(std::mt19937_64& rng) {
  const double lim = std::sqrt(6.0 / (in_features() + out_features()));
  std::uniform_real_distribution<double> uni(-lim, lim);
  for (auto& x : w.value.v) x = uni(rng);
  b.value.fill(0.0);
}

Matrix Conv1dLayer::forward(const Matrix& x) const {
  Matrix y(x.rows, out_features());
  kernels::conv1d_forward(x, w.value, b.value, blocks, in_width, y);
  return y;
}

void Conv1dLayer::backward(const Matrix& x, const Matrix& dy) {
  kernels::conv1d_backward_params(x, dy, blocks, in_width, channels(), ksize(), w.grad, b.grad);
}

void Conv1dLayer::init_xavier(std::mt19937_64& rng) {
  const double lim = std::sqrt(6.0 / (ksize() + channels() * ksize()));
  std::uniform_real_distribution<double> uni(-lim, lim);
  for (auto& x : w.value.v) x = uni(rng);
  b.value.fill(0.0);
}

ActorNet::ActorNet(const ActorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.users < 1 || cfg.row_features < 1) throw std::invalid_argument("bad actor dims");
  int trunk_in = cfg.users * cfg.row_features;
  if (cfg.use_conv) {
    if (cfg.row_features < cfg.conv_width) {
      throw std::invalid_argument("conv width exceeds per-user feature width");
    }
    conv_ = Conv1dLayer(cfg.users, cfg.row_features, cfg.conv_channels, cfg.conv_width);
    trunk_in = conv_.out_features();
  }
  trunk_ = DenseLayer(trunk_in, cfg.hidden);
  std::mt19937_64 rng(seed);
  if (cfg.use_conv) conv_.init_xavier(rng);
  trunk_.init_xavier(rng);
  // Zero-initialized heads: uniform initial policies, zero value estimates.
  if (cfg.rate_levels > 0) rate_head_ = DenseLayer(cfg.hidden, cfg.users * cfg.rate_levels);
  if (cfg.placements > 0) place_head_ = DenseLayer(cfg.hidden, cfg.users * cfg.placements);
  if (cfg.value_head) value_head_ = DenseLayer(cfg.hidden, cfg.users);
}

ActorOutput ActorNet::forward(const Matrix& x) const {
  if (x.cols != cfg_.users * cfg_.row_features) {
    throw std::invalid_argument("observation width does not match network input");
  }
  ActorOutput out;
  out.input = x;
  const Matrix* trunk_in = &out.input;
  if (cfg_.use_conv) {
    out.conv_pre = conv_.forward(x);
    out.conv_act = Matrix(out.conv_pre.rows, out.conv_pre.cols);
    kernels::relu(out.conv_pre, out.conv_act);
    trunk_in = &out.conv_act;
  }
  out.hid_pre = trunk_.forward(*trunk_in);
  out.hid_act = Matrix(out.hid_pre.rows, out.hid_pre.cols);
  kernels::relu(out.hid_pre, out.hid_act);

  if (cfg_.rate_levels > 0) {
    Matrix logits = rate_head_.forward(out.hid_act);
    out.rate_logp = Matrix(logits.rows, logits.cols);
    kernels::log_softmax_blocks(logits, cfg_.rate_levels, out.rate_logp);
  }
  if (cfg_.placements > 0) {
    Matrix logits = place_head_.forward(out.hid_act);
    out.place_logp = Matrix(logits.rows, logits.cols);
    kernels::log_softmax_blocks(logits, cfg_.placements, out.place_logp);
  }
  if (cfg_.value_head) out.values = value_head_.forward(out.hid_act);
  return out;
}

void ActorNet::backward(const ActorOutput& out, const Matrix& d_rate_logits,
                        const Matrix& d_place_logits, const Matrix& d_values) {
  Matrix dhid(out.hid_act.rows, out.hid_act.cols);
  if (!d_rate_logits.empty()) add_inplace(dhid, rate_head_.backward(out.hid_act, d_rate_logits));
  if (!d_place_logits.empty()) {
    add_inplace(dhid, place_head_.backward(out.hid_act, d_place_logits));
  }
  if (!d_values.empty()) add_inplace(dhid, value_head_.backward(out.hid_act, d_values));

  Matrix dhid_pre(dhid.rows, dhid.cols);
  kernels::relu_backward(out.hid_pre, dhid, dhid_pre);
  const Matrix& trunk_in = cfg_.use_conv ? out.conv_act : out.input;
  Matrix dtrunk_in = trunk_.backward(trunk_in, dhid_pre);
  if (cfg_.use_conv) {
    Matrix dconv_pre(dtrunk_in.rows, dtrunk_in.cols);
    kernels::relu_backward(out.conv_pre, dtrunk_in, dconv_pre);
    conv_.backward(out.input, dconv_pre);
  }
}

std::vector<Param*> ActorNet::params() {
  std::vector<Param*> out;
  if (cfg_.use_conv) {
    out.push_back(&conv_.w);
    out.push_back(&conv_.b);
  }
  out.push_back(&trunk_.w);
  out.push_back(&trunk_.b);
  if (cfg_.rate_levels > 0) {
    out.push_back(&rate_head_.w);
    out.push_back(&rate_head_.b);
  }
  if (cfg_.placements > 0) {
    out.push_back(&place_head_.w);
    out.push_back(&place_head_.b);
  }
  if (cfg_.value_head) {
    out.push_back(&value_head_.w);
    out.push_back(&value_head_.b);
  }
  return out;
}

std::vector<const Param*> ActorNet::params() const {
  auto mut = const_cast<ActorNet*>(this)->params();
  return {mut.begin(), mut.end()};
}

void ActorNet::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

const char* arch_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::kMtrc:
      return "mtrc";
    case ArchKind::kR1C2:
      return "r1c2";
    case ArchKind::kC1R2:
      return "c1r2";
    case ArchKind::kEcuR:
      return "ecur";
    case ArchKind::kHeadsetR:
      return "headsetr";
  }
  return "?";
}

ArchKind arch_from_name(const std::string& name) {
  if (name == "mtrc") return ArchKind::kMtrc;
  if (name == "r1c2") return ArchKind::kR1C2;
  if (name == "c1r2") return ArchKind::kC1R2;
  if (name == "ecur") return ArchKind::kEcuR;
  if (name == "headsetr") return ArchKind::kHeadsetR;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

std::uint64_t shape_hash(const ModelConfig& cfg) {
  std::string s = std::string(arch_name(cfg.kind)) + "|" + std::to_string(cfg.users) + "|" +
                  std::to_string(cfg.features) + "|" + std::to_string(cfg.levels) + "|" +
                  (cfg.use_conv ? "conv" : "dense") + "|" + std::to_string(cfg.conv_channels) +
                  "|" + std::to_string(cfg.conv_width) + "|" + std::to_string(cfg.hidden);
  return util::fnv1a64(s);
}

int AgentModel::stage1_action_width() const {
  if (cfg_.kind == ArchKind::kR1C2) return cfg_.levels;
  if (cfg_.kind == ArchKind::kC1R2) return 3;
  return 0;
}

AgentModel::AgentModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.levels < 1) throw std::invalid_argument("model needs at least one rate level");
  if (cfg.kind == ArchKind::kEcuR) cfg_.fixed_placement = pipeline::Placement::kEcuFull;
  if (cfg.kind == ArchKind::kHeadsetR) cfg_.fixed_placement = pipeline::Placement::kHeadset;

  ActorConfig base;
  base.users = cfg.users;
  base.row_features = cfg.features;
  base.use_conv = cfg.use_conv;
  base.conv_channels = cfg.conv_channels;
  base.conv_width = cfg.conv_width;
  base.hidden = cfg.hidden;

  ActorConfig s1 = base;
  switch (cfg.kind) {
    case ArchKind::kMtrc:
      s1.rate_levels = cfg.levels;
      s1.placements = 3;
      break;
    case ArchKind::kR1C2:
    case ArchKind::kEcuR:
    case ArchKind::kHeadsetR:
      s1.rate_levels = cfg.levels;
      break;
    case ArchKind::kC1R2:
      s1.placements = 3;
      break;
  }
  stage1_ = ActorNet(s1, util::split_seed(seed, "stage1"));

  if (is_cascade()) {
    ActorConfig s2 = base;
    s2.row_features = cfg.features + stage1_action_width();
    if (cfg.kind == ArchKind::kR1C2) {
      s2.placements = 3;
    } else {
      s2.rate_levels = cfg.levels;
    }
    stage2_ = ActorNet(s2, util::split_seed(seed, "stage2"));
  }

  ActorConfig cr = base;
  cr.value_head = true;
  critic_ = ActorNet(cr, util::split_seed(seed, "critic"));
}

env::JointAction AgentModel::assemble_action(const std::vector<int>& levels,
                                             const std::vector<int>& placements) const {
  env::JointAction action;
  action.level = levels;
  action.placement.resize(cfg_.users);
  for (int n = 0; n < cfg_.users; ++n) {
    action.placement[n] = has_placement_head() ? static_cast<pipeline::Placement>(placements[n])
                                               : cfg_.fixed_placement;
  }
  return action;
}

AgentModel::Sample AgentModel::sample(const std::vector<double>& features,
                                      std::mt19937_64& rng) const {
  if (static_cast<int>(features.size()) != cfg_.users * cfg_.features) {
    throw std::invalid_argument("observation width does not match model");
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix x(1, cfg_.users * cfg_.features);
  std::copy(features.begin(), features.end(), x.v.begin());

  Sample s;
  std::vector<int> levels(cfg_.users, 0), placements(cfg_.users, 0);
  auto sample_head = [&](const Matrix& logp, int block, std::vector<int>& out_idx) {
    for (int n = 0; n < cfg_.users; ++n) {
      out_idx[n] = sample_block_logp(logp.row(0) + n * block, block, uni(rng));
    }
  };

  const ActorOutput out1 = stage1_.forward(x);
  switch (cfg_.kind) {
    case ArchKind::kMtrc:
      sample_head(out1.rate_logp, cfg_.levels, levels);
      sample_head(out1.place_logp, 3, placements);
      s.rate_logp = out1.rate_logp.v;
      s.place_logp = out1.place_logp.v;
      break;
    case ArchKind::kEcuR:
    case ArchKind::kHeadsetR:
      sample_head(out1.rate_logp, cfg_.levels, levels);
      s.rate_logp = out1.rate_logp.v;
      break;
    case ArchKind::kR1C2: {
      sample_head(out1.rate_logp, cfg_.levels, levels);
      s.rate_logp = out1.rate_logp.v;
      env::JointAction partial = assemble_action(levels, placements);
      const Matrix x2 = build_stage2_input(x, {partial});
      const ActorOutput out2 = stage2_.forward(x2);
      sample_head(out2.place_logp, 3, placements);
      s.place_logp = out2.place_logp.v;
      break;
    }
    case ArchKind::kC1R2: {
      sample_head(out1.place_logp, 3, placements);
      s.place_logp = out1.place_logp.v;
      env::JointAction partial = assemble_action(levels, placements);
      const Matrix x2 = build_stage2_input(x, {partial});
      const ActorOutput out2 = stage2_.forward(x2);
      sample_head(out2.rate_logp, cfg_.levels, levels);
      s.rate_logp = out2.rate_logp.v;
      break;
    }
  }
  s.action = assemble_action(levels, placements);
  return s;
}

env::JointAction AgentModel::greedy(const std::vector<double>& features) const {
  Matrix x(1, cfg_.users * cfg_.features);
  if (features.size() != x.v.size()) {
    throw std::invalid_argument("observation width does not match model");
  }
  std::copy(features.begin(), features.end(), x.v.begin());

  std::vector<int> levels(cfg_.users, 0), placements(cfg_.users, 0);
  auto pick = [&](const Matrix& logp, int block, std::vector<int>& out_idx) {
    for (int n = 0; n < cfg_.users; ++n) {
      out_idx[n] = argmax_block(logp.row(0) + n * block, block);
    }
  };
  const ActorOutput out1 = stage1_.forward(x);
  switch (cfg_.kind) {
    case ArchKind::kMtrc:
      pick(out1.rate_logp, cfg_.levels, levels);
      pick(out1.place_logp, 3, placements);
      break;
    case ArchKind::kEcuR:
    case ArchKind::kHeadsetR:
      pick(out1.rate_logp, cfg_.levels, levels);
      break;
    case ArchKind::kR1C2: {
      pick(out1.rate_logp, cfg_.levels, levels);
      const Matrix x2 = build_stage2_input(x, {assemble_action(levels, placements)});
      pick(stage2_.forward(x2).place_logp, 3, placements);
      break;
    }
    case ArchKind::kC1R2: {
      pick(out1.place_logp, 3, placements);
      const Matrix x2 = build_stage2_input(x, {assemble_action(levels, placements)});
      pick(stage2_.forward(x2).rate_logp, cfg_.levels, levels);
      break;
    }
  }
  return assemble_action(levels, placements);
}

Matrix AgentModel::build_stage2_input(const Matrix& obs,
                                      const std::vector<env::JointAction>& actions) const {
  if (!is_cascade()) throw std::logic_error("stage-2 input requested for a non-cascade model");
  if (static_cast<int>(actions.size()) != obs.rows) {
    throw std::invalid_argument("one action per observation row required");
  }
  const int a_width = stage1_action_width();
  const int f = cfg_.features;
  Matrix x2(obs.rows, cfg_.users * (f + a_width));
  for (int r = 0; r < obs.rows; ++r) {
    const double* src = obs.row(r);
    double* dst = x2.row(r);
    for (int n = 0; n < cfg_.users; ++n) {
      std::copy(src + n * f, src + (n + 1) * f, dst + n * (f + a_width));
      const int idx = cfg_.kind == ArchKind::kR1C2
                          ? actions[r].level[n]
                          : static_cast<int>(actions[r].placement[n]);
      dst[n * (f + a_width) + f + idx] = 1.0;
    }
  }
  return x2;
}

std::vector<Param*> AgentModel::actor_params() {
  std::vector<Param*> out = stage1_.params();
  if (is_cascade()) {
    auto p2 = stage2_.params();
    out.insert(out.end(), p2.begin(), p2.end());
  }
  return out;
}

// --- checkpoint serialization -----------------------------------------------

struct CheckpointCodec {
  static nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.v}};
  }
  static void matrix_from_json(const nlohmann::json& j, Matrix& m) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    auto data = j.at("data").get<std::vector<double>>();
    if (m.rows != rows || m.cols != cols || data.size() != m.size()) {
      throw std::runtime_error("checkpoint parameter shape mismatch");
    }
    m.v = std::move(data);
  }
  static nlohmann::json net_to_json(const ActorNet& net) {
    nlohmann::json j;
    const auto params = net.params();
    j["params"] = nlohmann::json::array();
    for (const Param* p : params) j["params"].push_back(matrix_to_json(p->value));
    return j;
  }
  static void net_from_json(const nlohmann::json& j, ActorNet& net) {
    auto params = net.params();
    const auto& arr = j.at("params");
    if (arr.size() != params.size()) throw std::runtime_error("checkpoint layer count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) matrix_from_json(arr[i], params[i]->value);
  }
};

void save_checkpoint(const AgentModel& model, const std::string& path,
                     std::uint64_t run_config_hash) {
  const ModelConfig& cfg = model.config();
  nlohmann::json j;
  j["format_version"] = 1;
  j["arch"] = arch_name(cfg.kind);
  j["model_config"] = {{"users", cfg.users},
                       {"features", cfg.features},
                       {"levels", cfg.levels},
                       {"use_conv", cfg.use_conv},
                       {"conv_channels", cfg.conv_channels},
                       {"conv_width", cfg.conv_width},
                       {"hidden", cfg.hidden},
                       {"fixed_placement", media::placement_name(cfg.fixed_placement)}};
  j["shape_hash"] = shape_hash(cfg);
  j["run_config_hash"] = run_config_hash;
  j["stage1"] = CheckpointCodec::net_to_json(model.stage1());
  if (model.is_cascade()) j["stage2"] = CheckpointCodec::net_to_json(model.stage2());
  j["critic"] = CheckpointCodec::net_to_json(model.critic());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported checkpoint format version");
  }
  ModelConfig cfg;
  cfg.kind = arch_from_name(j.at("arch").get<std::string>());
  const auto& mc = j.at("model_config");
  cfg.users = mc.at("users").get<int>();
  cfg.features = mc.at("features").get<int>();
  cfg.levels = mc.at("levels").get<int>();
  cfg.use_conv = mc.at("use_conv").get<bool>();
  cfg.conv_channels = mc.at("conv_channels").get<int>();
  cfg.conv_width = mc.at("conv_width").get<int>();
  cfg.hidden = mc.at("hidden").get<int>();
  cfg.fixed_placement = media::placement_from_name(mc.at("fixed_placement").get<std::string>());

  LoadedCheckpoint loaded;
  loaded.model = AgentModel(cfg, 0);
  CheckpointCodec::net_from_json(j.at("stage1"), loaded.model.stage1());
  if (loaded.model.is_cascade()) CheckpointCodec::net_from_json(j.at("stage2"), loaded.model.stage2());
  CheckpointCodec::net_from_json(j.at("critic"), loaded.model.critic());
  if (j.at("shape_hash").get<std::uint64_t>() != shape_hash(cfg)) {
    throw std::runtime_error("checkpoint shape hash mismatch (corrupt file?)");
  }
  loaded.run_config_hash = j.at("run_config_hash").get<std::uint64_t>();
  return loaded;
}

}  // namespace edge360::rl
