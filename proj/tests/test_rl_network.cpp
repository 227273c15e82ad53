#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "edge360/rl/losses.hpp"
#include "edge360/rl/network.hpp"

using namespace edge360;
using namespace edge360::rl;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  Matrix m(rows, cols);
  for (auto& x : m.v) x = uni(rng);
  return m;
}

void randomize_params(ActorNet& net, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  for (Param* p : net.params()) {
    for (auto& x : p->value.v) x = uni(rng);
  }
}

// Random linear functional of all outputs; differentiable everywhere the
// ReLUs are away from zero.
double linear_loss(const ActorNet& net, const Matrix& x, const Matrix& wr, const Matrix& wp,
                   const Matrix& wv) {
  ActorOutput out = net.forward(x);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.rate_logp.size(); ++i) loss += wr.v[i] * out.rate_logp.v[i];
  for (std::size_t i = 0; i < out.place_logp.size(); ++i) loss += wp.v[i] * out.place_logp.v[i];
  for (std::size_t i = 0; i < out.values.size(); ++i) loss += wv.v[i] * out.values.v[i];
  return loss;
}

// Analytic gradients of linear_loss via ActorNet::backward; compares every
// parameter against central finite differences.
double max_rel_error_fd(ActorNet& net, const Matrix& x, std::mt19937_64& rng, double h = 1e-5) {
  const auto& cfg = net.config();
  ActorOutput out = net.forward(x);
  const Matrix wr = random_matrix(out.rate_logp.rows, out.rate_logp.cols, rng);
  const Matrix wp = random_matrix(out.place_logp.rows, out.place_logp.cols, rng);
  const Matrix wv = random_matrix(out.values.rows, out.values.cols, rng);

  // d(loss)/d(logits) for sum_k w_k * logp_k over one softmax block:
  // dz_j = w_j - p_j * sum_k w_k
  auto logits_grad = [](const Matrix& logp, const Matrix& w, int block) {
    Matrix d(logp.rows, logp.cols);
    for (int r = 0; r < logp.rows; ++r) {
      for (int start = 0; start < logp.cols; start += block) {
        double wsum = 0.0;
        for (int j = 0; j < block; ++j) wsum += w(r, start + j);
        for (int j = 0; j < block; ++j) {
          d(r, start + j) = w(r, start + j) - std::exp(logp(r, start + j)) * wsum;
        }
      }
    }
    return d;
  };

  Matrix d_rate, d_place;
  if (cfg.rate_levels > 0) d_rate = logits_grad(out.rate_logp, wr, cfg.rate_levels);
  if (cfg.placements > 0) d_place = logits_grad(out.place_logp, wp, cfg.placements);
  net.zero_grads();
  net.backward(out, d_rate, d_place, wv);

  double max_rel = 0.0;
  for (Param* p : net.params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.v[i];
      p->value.v[i] = saved + h;
      const double up = linear_loss(net, x, wr, wp, wv);
      p->value.v[i] = saved - h;
      const double down = linear_loss(net, x, wr, wp, wv);
      p->value.v[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = p->grad.v[i];
      const double denom = std::max(1e-6, std::abs(fd) + std::abs(analytic));
      max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
    }
  }
  return max_rel;
}

ModelConfig small_config(ArchKind kind, bool use_conv = true) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.users = 2;
  cfg.features = 6;
  cfg.levels = 3;
  cfg.use_conv = use_conv;
  cfg.conv_channels = 2;
  cfg.conv_width = 3;
  cfg.hidden = 5;
  return cfg;
}

}  // namespace

TEST_CASE("zero-initialized heads give uniform policies and zero values") {
  for (ArchKind kind : {ArchKind::kMtrc, ArchKind::kR1C2, ArchKind::kC1R2, ArchKind::kEcuR}) {
    AgentModel model(small_config(kind), 3);
    std::mt19937_64 rng(1);
    const Matrix x = random_matrix(1, 12, rng);
    ActorOutput out = model.stage1().forward(x);
    if (out.rate_logp.size() > 0) {
      for (double lp : out.rate_logp.v) CHECK(lp == doctest::Approx(std::log(1.0 / 3)));
    }
    if (out.place_logp.size() > 0) {
      for (double lp : out.place_logp.v) CHECK(lp == doctest::Approx(std::log(1.0 / 3)));
    }
    for (double v : out.values.v) CHECK(v == 0.0);
  }
}

TEST_CASE("head probabilities sum to one per user") {
  AgentModel model(small_config(ArchKind::kMtrc), 11);
  std::mt19937_64 rng(2);
  randomize_params(model.stage1(), rng);
  const Matrix x = random_matrix(4, 12, rng);
  ActorOutput out = model.stage1().forward(x);
  for (int r = 0; r < 4; ++r) {
    for (int n = 0; n < 2; ++n) {
      double rate_sum = 0.0, place_sum = 0.0;
      for (int l = 0; l < 3; ++l) rate_sum += std::exp(out.rate_logp(r, n * 3 + l));
      for (int p = 0; p < 3; ++p) place_sum += std::exp(out.place_logp(r, n * 3 + p));
      CHECK(rate_sum == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(place_sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("backward matches finite differences (conv and dense trunks)") {
  std::mt19937_64 rng(5);
  for (bool use_conv : {true, false}) {
    ActorConfig cfg;
    cfg.users = 2;
    cfg.row_features = 6;
    cfg.rate_levels = 3;
    cfg.placements = 3;
    cfg.use_conv = use_conv;
    cfg.conv_channels = 2;
    cfg.conv_width = 3;
    cfg.hidden = 5;
    ActorNet net(cfg, 17);
    randomize_params(net, rng);
    const Matrix x = random_matrix(3, 12, rng);
    CHECK(max_rel_error_fd(net, x, rng) < 1e-4);
  }
}

TEST_CASE("cascade stage-2 reacts to the stage-1 action") {
  AgentModel model(small_config(ArchKind::kR1C2), 23);
  std::mt19937_64 rng(6);
  randomize_params(model.stage2(), rng);
  const Matrix obs = random_matrix(1, 12, rng);

  env::JointAction a0, a1;
  a0.level = {0, 0};
  a0.placement = {pipeline::Placement::kEcuFull, pipeline::Placement::kEcuFull};
  a1 = a0;
  a1.level = {2, 1};
  const Matrix in0 = model.build_stage2_input(obs, {a0});
  const Matrix in1 = model.build_stage2_input(obs, {a1});
  CHECK(!(in0 == in1));
  const ActorOutput out0 = model.stage2().forward(in0);
  const ActorOutput out1 = model.stage2().forward(in1);
  CHECK(out0.place_logp.v != out1.place_logp.v);
  // state part of the row is preserved
  for (int f = 0; f < 6; ++f) CHECK(in0(0, f) == obs(0, f));
}

TEST_CASE("cascade causality: stage-2 loss does not touch stage-1 parameters") {
  AgentModel model(small_config(ArchKind::kR1C2), 29);
  std::mt19937_64 rng(7);
  randomize_params(model.stage1(), rng);
  randomize_params(model.stage2(), rng);
  const Matrix obs = random_matrix(2, 12, rng);
  env::JointAction a;
  a.level = {1, 2};
  a.placement = {pipeline::Placement::kHeadset, pipeline::Placement::kHeadset};

  const Matrix in2 = model.build_stage2_input(obs, {a, a});
  ActorOutput out2 = model.stage2().forward(in2);
  Matrix d_place = random_matrix(out2.place_logp.rows, out2.place_logp.cols, rng);
  model.stage1().zero_grads();
  model.stage2().zero_grads();
  model.stage2().backward(out2, Matrix(), d_place, Matrix());
  for (Param* p : model.stage1().params()) {
    for (double g : p->grad.v) CHECK(g == 0.0);
  }
  // and stage-1 parameters do not change stage-2 outputs for a fixed action
  for (Param* p : model.stage1().params()) {
    for (auto& x : p->value.v) x += 0.37;
  }
  ActorOutput out2b = model.stage2().forward(in2);
  CHECK(out2.place_logp.v == out2b.place_logp.v);
}

TEST_CASE("joint ratio factorizes and joint KL is the sum of head KLs") {
  // two independent heads: KL of the product distribution = KL_e + KL_phi
  std::mt19937_64 rng(8);
  auto random_logp = [&](int n) {
    std::vector<double> z(n);
    double mx = -1e9;
    for (auto& v : z) {
      v = std::uniform_real_distribution<double>(-2, 2)(rng);
      mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (auto& v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (auto& v : z) v -= lse;
    return z;
  };
  const auto pe_old = random_logp(4), pe_new = random_logp(4);
  const auto pp_old = random_logp(3), pp_new = random_logp(3);

  // factorization of the joint probability ratio
  const double rho_e = std::exp(pe_new[1] - pe_old[1]);
  const double rho_p = std::exp(pp_new[2] - pp_old[2]);
  const double rho_joint = std::exp((pe_new[1] + pp_new[2]) - (pe_old[1] + pp_old[2]));
  CHECK(rho_joint == doctest::Approx(rho_e * rho_p).epsilon(1e-12));

  // additivity of KL over independent heads
  double kl_joint = 0.0;
  for (int e = 0; e < 4; ++e) {
    for (int p = 0; p < 3; ++p) {
      const double lo = pe_old[e] + pp_old[p];
      const double ln = pe_new[e] + pp_new[p];
      kl_joint += std::exp(lo) * (lo - ln);
    }
  }
  CHECK(kl_joint == doctest::Approx(kl_logp(pe_old.data(), pe_new.data(), 4) +
                                    kl_logp(pp_old.data(), pp_new.data(), 3))
                        .epsilon(1e-9));
}

TEST_CASE("sampling is seed-deterministic and log-probs match a fresh forward") {
  AgentModel model(small_config(ArchKind::kC1R2), 31);
  std::mt19937_64 rng(9);
  randomize_params(model.stage1(), rng);
  randomize_params(model.stage2(), rng);
  std::vector<double> features(12);
  for (auto& f : features) f = std::uniform_real_distribution<double>(0, 1)(rng);

  std::mt19937_64 s1(100), s2(100);
  auto a = model.sample(features, s1);
  auto b = model.sample(features, s2);
  CHECK(a.action.level == b.action.level);
  CHECK(a.action.placement == b.action.placement);
  CHECK(a.rate_logp == b.rate_logp);

  // old-policy invariance: re-evaluating the unchanged model reproduces the
  // stored log-probs, so every ratio is exactly one
  Matrix x(1, 12);
  std::copy(features.begin(), features.end(), x.v.begin());
  ActorOutput out1 = model.stage1().forward(x);
  CHECK(out1.place_logp.v == a.place_logp);
  const Matrix x2 = model.build_stage2_input(x, {a.action});
  ActorOutput out2 = model.stage2().forward(x2);
  CHECK(out2.rate_logp.v == a.rate_logp);

  // greedy is deterministic without an rng
  CHECK(model.greedy(features).level == model.greedy(features).level);
}

TEST_CASE("rate-only archs pin the placement") {
  AgentModel ecur(small_config(ArchKind::kEcuR), 41);
  AgentModel headr(small_config(ArchKind::kHeadsetR), 41);
  std::mt19937_64 rng(10);
  std::vector<double> features(12, 0.3);
  auto a = ecur.sample(features, rng);
  for (auto p : a.action.placement) CHECK(p == pipeline::Placement::kEcuFull);
  CHECK(a.place_logp.empty());
  auto b = headr.sample(features, rng);
  for (auto p : b.action.placement) CHECK(p == pipeline::Placement::kHeadset);
}

TEST_CASE("checkpoint round-trip preserves behaviour") {
  AgentModel model(small_config(ArchKind::kR1C2), 55);
  std::mt19937_64 rng(11);
  randomize_params(model.stage1(), rng);
  randomize_params(model.stage2(), rng);
  randomize_params(model.critic(), rng);

  const std::string path = "test_checkpoint.json";
  save_checkpoint(model, path, 0xdeadbeefULL);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.run_config_hash == 0xdeadbeefULL);
  CHECK(loaded.model.config().kind == ArchKind::kR1C2);
  CHECK(shape_hash(loaded.model.config()) == shape_hash(model.config()));

  std::vector<double> features(12);
  for (auto& f : features) f = std::uniform_real_distribution<double>(0, 1)(rng);
  CHECK(loaded.model.greedy(features).level == model.greedy(features).level);
  CHECK(loaded.model.greedy(features).placement == model.greedy(features).placement);
  std::remove(path.c_str());
}

TEST_CASE("shape hash distinguishes incompatible models") {
  auto a = small_config(ArchKind::kMtrc);
  auto b = a;
  b.levels = 4;
  CHECK(shape_hash(a) != shape_hash(b));
  auto c = a;
  c.kind = ArchKind::kR1C2;
  CHECK(shape_hash(a) != shape_hash(c));
}

TEST_CASE("adam with zero learning rate leaves parameters untouched") {
  ActorConfig cfg;
  cfg.users = 1;
  cfg.row_features = 4;
  cfg.rate_levels = 2;
  cfg.use_conv = false;
  cfg.hidden = 3;
  ActorNet net(cfg, 1);
  std::mt19937_64 rng(12);
  randomize_params(net, rng);
  std::vector<double> before;
  for (Param* p : net.params()) before.insert(before.end(), p->value.v.begin(), p->value.v.end());

  Adam opt({0.0});
  for (Param* p : net.params()) {
    for (auto& g : p->grad.v) g = 1.0;
  }
  opt.step(net.params());
  std::vector<double> after;
  for (Param* p : net.params()) after.insert(after.end(), p->value.v.begin(), p->value.v.end());
  CHECK(before == after);
}
