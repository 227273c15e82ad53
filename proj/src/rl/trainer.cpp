#include "edge360/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "edge360/rl/losses.hpp"
#include "edge360/util.hpp"

namespace edge360::rl {

void validate(const TrainConfig& cfg) {
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0)) {
    throw std::invalid_argument("clip_eps must be in (0,1)");
  }
  if (!(cfg.dual_clip_c > 1.0)) throw std::invalid_argument("dual_clip_c must be > 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0,1]");
  if (cfg.n_policy < 1 || cfg.n_aux < 1 || cfg.n_update < 1 || cfg.rounds < 1) {
    throw std::invalid_argument("iteration counts must be >= 1");
  }
  if (!(cfg.entropy_weight >= 0.0)) throw std::invalid_argument("entropy_weight must be >= 0");
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (cfg.batch_size < 0) throw std::invalid_argument("batch_size must be >= 0");
}

namespace {

struct BufferStep {
  std::vector<double> obs, next_obs;
  env::JointAction action;
  std::vector<double> reward;
  std::vector<double> old_rate_logp;   // users*levels
  std::vector<double> old_place_logp;  // users*3, empty for rate-only archs
  std::vector<double> v_targ;          // users
  bool terminal = false;
};

Matrix rows_from(const std::vector<BufferStep>& buffer, const std::vector<int>& idx,
                 std::vector<double> BufferStep::*field, int cols) {
  Matrix out(static_cast<int>(idx.size()), cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& src = buffer[idx[r]].*field;
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(r)));
  }
  return out;
}

class Trainer {
 public:
  Trainer(env::RolloutEnv& environment, const TrainConfig& cfg, ArchKind kind)
      : env_(environment),
        cfg_(cfg),
        adam_stage1_({cfg.learning_rate}),
        adam_stage2_({cfg.learning_rate}),
        adam_critic_({cfg.learning_rate}),
        rollout_rng_(util::split_seed(cfg.seed, "rollout")),
        batch_rng_(util::split_seed(cfg.seed, "batch")) {
    ModelConfig mc;
    mc.kind = kind;
    mc.users = env_.user_count();
    mc.features = env_.feature_width();
    mc.levels = env_.level_count();
    mc.use_conv = cfg.use_conv;
    mc.conv_channels = cfg.conv_channels;
    mc.conv_width = cfg.conv_width;
    mc.hidden = cfg.hidden;
    model_ = AgentModel(mc, util::split_seed(cfg.seed, "init"));
    duals_ = env_.duals();
  }

  TrainResult run() {
    TrainResult result;
    for (int round = 1; round <= cfg_.rounds; ++round) {
      const double mean_qoe = rollout_phase();
      policy_phase(round, mean_qoe, result.log);
      aux_phase(round, mean_qoe, result.log);
      buffer_.clear();
      // Old-policy snapshot: the sampling-time log-probs stored with the next
      // round's rollouts are exactly pi_old, so the sync is implicit here.
    }
    result.model = std::move(model_);
    result.duals = duals_;
    result.episodes = episode_counter_;
    return result;
  }

 private:
  // Phase (i)+(ii): collect n_update episodes, updating the dual coefficients
  // after each one. Returns the mean Lagrangian QoE across the round.
  double rollout_phase() {
    const int users = env_.user_count();
    double qoe_acc = 0.0;
    int qoe_count = 0;
    for (int e = 0; e < cfg_.n_update; ++e) {
      env_.set_duals(duals_);
      env::Observation obs = env_.reset(static_cast<std::uint64_t>(episode_counter_++));
      std::vector<qoe::EpisodeMetrics> metrics(users);
      std::vector<std::size_t> episode_steps;
      bool done = false;
      while (!done) {
        AgentModel::Sample s = model_.sample(obs.features, rollout_rng_);
        env::StepResult sr = env_.step(s.action);
        BufferStep step;
        step.obs = obs.features;
        step.next_obs = sr.observation.features;
        step.action = s.action;
        step.reward = sr.reward;
        step.old_rate_logp = std::move(s.rate_logp);
        step.old_place_logp = std::move(s.place_logp);
        step.terminal = sr.done;
        episode_steps.push_back(buffer_.size());
        buffer_.push_back(std::move(step));
        for (int n = 0; n < users; ++n) {
          metrics[n].record(sr.quality_db[n], sr.timings[n].rebuffer_s);
        }
        done = sr.done;
        obs = std::move(sr.observation);
      }
      // Monte Carlo discounted return-to-go as the value target.
      std::vector<double> running(users, 0.0);
      for (auto it = episode_steps.rbegin(); it != episode_steps.rend(); ++it) {
        BufferStep& step = buffer_[*it];
        step.v_targ.resize(users);
        for (int n = 0; n < users; ++n) {
          running[n] = step.reward[n] + cfg_.gamma * running[n];
          step.v_targ[n] = running[n];
        }
      }
      const qoe::QoeTargets targets = env_.episode_targets();
      double rt_mean = 0.0, qv_mean = 0.0;
      for (int n = 0; n < users; ++n) {
        rt_mean += qoe::rt(metrics[n]);
        qv_mean += metrics[n].gops >= 2 ? qoe::qv(metrics[n]) : 0.0;
        qoe_acc += qoe::lagrangian_qoe(metrics[n], duals_, targets);
        ++qoe_count;
      }
      rt_mean /= users;
      qv_mean /= users;
      duals_ = qoe::update_duals(duals_, rt_mean, qv_mean, targets);
    }
    return qoe_acc / qoe_count;
  }

  std::vector<int> select_batch() {
    const int total = static_cast<int>(buffer_.size());
    if (cfg_.batch_size <= 0 || cfg_.batch_size >= total) {
      std::vector<int> idx(total);
      std::iota(idx.begin(), idx.end(), 0);
      return idx;
    }
    std::uniform_int_distribution<int> pick(0, total - 1);
    std::vector<int> idx(cfg_.batch_size);
    for (int& i : idx) i = pick(batch_rng_);
    return idx;
  }

  // Advantages from the round-start critic, frozen across the policy phase.
  Matrix compute_advantages(const std::vector<int>& all_idx) {
    const int users = env_.user_count();
    const Matrix obs = rows_from(buffer_, all_idx, &BufferStep::obs, model_.config().users *
                                                                         model_.config().features);
    const Matrix next =
        rows_from(buffer_, all_idx, &BufferStep::next_obs,
                  model_.config().users * model_.config().features);
    const Matrix v_s = model_.critic().forward(obs).values;
    const Matrix v_next = model_.critic().forward(next).values;
    Matrix adv(v_s.rows, users);
    for (int b = 0; b < v_s.rows; ++b) {
      const BufferStep& step = buffer_[all_idx[b]];
      for (int n = 0; n < users; ++n) {
        adv(b, n) = advantage(step.reward[n], v_s(b, n), v_next(b, n), cfg_.gamma, step.terminal);
      }
    }
    return adv;
  }

  struct HeadGrad {
    Matrix d_rate, d_place;  // gradients w.r.t. head logits (empty = unused)
  };

  // Dual-clip surrogate + entropy for one head pair; returns the objective
  // contribution and fills logit gradients. `scale` is 1/(batch*users).
  void policy_phase(int round, double mean_qoe, std::vector<TrainLogEntry>& log) {
    const int users = env_.user_count();
    const int levels = model_.config().levels;
    const bool placement = model_.has_placement_head();
    const bool cascade = model_.is_cascade();
    const double kappa = cfg_.entropy_weight;

    std::vector<int> all_idx(buffer_.size());
    std::iota(all_idx.begin(), all_idx.end(), 0);
    const Matrix adv_all = compute_advantages(all_idx);
    const int state_cols = model_.config().users * model_.config().features;

    for (int step = 0; step < cfg_.n_policy; ++step) {
      const std::vector<int> idx = select_batch();
      const int batch = static_cast<int>(idx.size());
      const double scale = 1.0 / (static_cast<double>(batch) * users);

      const Matrix obs = rows_from(buffer_, idx, &BufferStep::obs, state_cols);
      std::vector<env::JointAction> actions(batch);
      for (int b = 0; b < batch; ++b) actions[b] = buffer_[idx[b]].action;

      ActorOutput out1 = model_.stage1().forward(obs);
      ActorOutput out2;
      Matrix stage2_in;
      if (cascade) {
        stage2_in = model_.build_stage2_input(obs, actions);
        out2 = model_.stage2().forward(stage2_in);
      }
      const Matrix& rate_logp = cascade && model_.config().kind == ArchKind::kC1R2
                                    ? out2.rate_logp
                                    : out1.rate_logp;
      const Matrix* place_logp = nullptr;
      if (placement) {
        place_logp = cascade && model_.config().kind == ArchKind::kR1C2 ? &out2.place_logp
                                                                        : &out1.place_logp;
      }

      Matrix d_rate(rate_logp.rows, rate_logp.cols);
      Matrix d_place = placement ? Matrix(place_logp->rows, place_logp->cols) : Matrix();
      double objective = 0.0;
      double entropy_sum = 0.0;

      for (int b = 0; b < batch; ++b) {
        const BufferStep& bs = buffer_[idx[b]];
        for (int n = 0; n < users; ++n) {
          const double adv = adv_all(idx[b], n);
          const int a_e = bs.action.level[n];
          const double lp_e_new = rate_logp(b, n * levels + a_e);
          const double lp_e_old = bs.old_rate_logp[n * levels + a_e];
          const double rho_e = std::exp(lp_e_new - lp_e_old);

          double rho_p = 1.0;
          int a_p = 0;
          double lp_p_new = 0.0;
          if (placement) {
            a_p = static_cast<int>(bs.action.placement[n]);
            lp_p_new = (*place_logp)(b, n * 3 + a_p);
            rho_p = std::exp(lp_p_new - bs.old_place_logp[n * 3 + a_p]);
          }

          // gradient coefficient on the chosen action's log-prob per head
          double coeff_e;
          double coeff_p = 0.0;
          if (model_.config().kind == ArchKind::kMtrc) {
            const double rho = rho_e * rho_p;
            objective += dual_clip_objective(rho, adv, cfg_.clip_eps, cfg_.dual_clip_c);
            const double drho = dual_clip_drho(rho, adv, cfg_.clip_eps, cfg_.dual_clip_c);
            coeff_e = drho * rho;  // d(rho)/d(lp_e) = rho for the joint ratio
            coeff_p = drho * rho;
          } else {
            objective += dual_clip_objective(rho_e, adv, cfg_.clip_eps, cfg_.dual_clip_c);
            coeff_e = dual_clip_drho(rho_e, adv, cfg_.clip_eps, cfg_.dual_clip_c) * rho_e;
            if (placement) {
              objective += dual_clip_objective(rho_p, adv, cfg_.clip_eps, cfg_.dual_clip_c);
              coeff_p = dual_clip_drho(rho_p, adv, cfg_.clip_eps, cfg_.dual_clip_c) * rho_p;
            }
          }

          // minimized loss = -objective - kappa*entropy (+ critic value loss)
          const double* lpe = rate_logp.row(b) + n * levels;
          double* dre = d_rate.row(b) + n * levels;
          const double ce = -scale * coeff_e;
          for (int k = 0; k < levels; ++k) dre[k] -= ce * std::exp(lpe[k]);
          dre[a_e] += ce;
          entropy_sum += entropy_logp(lpe, levels);
          entropy_grad_logits(lpe, levels, -kappa * scale, dre);

          if (placement) {
            const double* lpp = place_logp->row(b) + n * 3;
            double* drp = d_place.row(b) + n * 3;
            const double cp = -scale * coeff_p;
            for (int k = 0; k < 3; ++k) drp[k] -= cp * std::exp(lpp[k]);
            drp[a_p] += cp;
            entropy_sum += entropy_logp(lpp, 3);
            entropy_grad_logits(lpp, 3, -kappa * scale, drp);
          }
        }
      }

      const double mean_obj = objective * scale;
      const double mean_entropy = entropy_sum * scale;

      // backward + step actors
      model_.stage1().zero_grads();
      if (cascade) model_.stage2().zero_grads();
      switch (model_.config().kind) {
        case ArchKind::kMtrc:
          model_.stage1().backward(out1, d_rate, d_place, Matrix());
          break;
        case ArchKind::kEcuR:
        case ArchKind::kHeadsetR:
          model_.stage1().backward(out1, d_rate, Matrix(), Matrix());
          break;
        case ArchKind::kR1C2:
          model_.stage1().backward(out1, d_rate, Matrix(), Matrix());
          model_.stage2().backward(out2, Matrix(), d_place, Matrix());
          break;
        case ArchKind::kC1R2:
          model_.stage1().backward(out1, Matrix(), d_place, Matrix());
          model_.stage2().backward(out2, d_rate, Matrix(), Matrix());
          break;
      }
      adam_stage1_.step(model_.stage1().params());
      if (cascade) adam_stage2_.step(model_.stage2().params());

      // critic value loss on the same batch (Eq. (12) includes it)
      const Matrix v_targ = rows_from(buffer_, idx, &BufferStep::v_targ, users);
      ActorOutput cout = model_.critic().forward(obs);
      const double value_loss = half_mse(cout.values, v_targ);
      Matrix d_values(cout.values.rows, cout.values.cols);
      for (std::size_t i = 0; i < d_values.size(); ++i) {
        d_values.v[i] = (cout.values.v[i] - v_targ.v[i]) * scale;
      }
      model_.critic().zero_grads();
      model_.critic().backward(cout, Matrix(), Matrix(), d_values);
      adam_critic_.step(model_.critic().params());

      const double loss = -mean_obj - kappa * mean_entropy + value_loss;
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged: non-finite policy loss at round " +
                                 std::to_string(round));
      }
      log.push_back({round, "policy", loss, mean_entropy, duals_.mu0, duals_.mu1, mean_qoe});
    }
  }

  void aux_phase(int round, double mean_qoe, std::vector<TrainLogEntry>& log) {
    const int users = env_.user_count();
    const int levels = model_.config().levels;
    const bool placement = model_.has_placement_head();
    const bool cascade = model_.is_cascade();
    const int state_cols = model_.config().users * model_.config().features;

    std::vector<int> idx(buffer_.size());
    std::iota(idx.begin(), idx.end(), 0);
    const int batch = static_cast<int>(idx.size());
    const double scale = 1.0 / (static_cast<double>(batch) * users);

    const Matrix obs = rows_from(buffer_, idx, &BufferStep::obs, state_cols);
    const Matrix v_targ = rows_from(buffer_, idx, &BufferStep::v_targ, users);
    const Matrix old_rate = rows_from(buffer_, idx, &BufferStep::old_rate_logp, users * levels);
    const Matrix old_place =
        placement ? rows_from(buffer_, idx, &BufferStep::old_place_logp, users * 3) : Matrix();
    std::vector<env::JointAction> actions(batch);
    for (int b = 0; b < batch; ++b) actions[b] = buffer_[idx[b]].action;
    Matrix stage2_in;
    if (cascade) stage2_in = model_.build_stage2_input(obs, actions);

    for (int it = 0; it < cfg_.n_aux; ++it) {
      // value step (critic only)
      {
        ActorOutput cout = model_.critic().forward(obs);
        const double value_loss = half_mse(cout.values, v_targ);
        Matrix d_values(cout.values.rows, cout.values.cols);
        for (std::size_t i = 0; i < d_values.size(); ++i) {
          d_values.v[i] = (cout.values.v[i] - v_targ.v[i]) * scale;
        }
        model_.critic().zero_grads();
        model_.critic().backward(cout, Matrix(), Matrix(), d_values);
        adam_critic_.step(model_.critic().params());
        if (!std::isfinite(value_loss)) {
          throw std::runtime_error("training diverged: non-finite value loss");
        }
        log.push_back(
            {round, "aux_value", value_loss, 0.0, duals_.mu0, duals_.mu1, mean_qoe});
      }

      // joint step (actors): behavioral cloning KL per head + auxiliary value
      {
        ActorOutput out1 = model_.stage1().forward(obs);
        ActorOutput out2;
        if (cascade) out2 = model_.stage2().forward(stage2_in);
        const Matrix& rate_logp = cascade && model_.config().kind == ArchKind::kC1R2
                                      ? out2.rate_logp
                                      : out1.rate_logp;
        const Matrix* place_logp = nullptr;
        if (placement) {
          place_logp = cascade && model_.config().kind == ArchKind::kR1C2 ? &out2.place_logp
                                                                          : &out1.place_logp;
        }

        double kl_sum = 0.0;
        double entropy_sum = 0.0;
        Matrix d_rate(rate_logp.rows, rate_logp.cols);
        Matrix d_place = placement ? Matrix(place_logp->rows, place_logp->cols) : Matrix();
        for (int b = 0; b < batch; ++b) {
          for (int n = 0; n < users; ++n) {
            const double* lpe_new = rate_logp.row(b) + n * levels;
            const double* lpe_old = old_rate.row(b) + n * levels;
            kl_sum += kl_logp(lpe_old, lpe_new, levels);
            kl_grad_logits(lpe_old, lpe_new, levels, scale, d_rate.row(b) + n * levels);
            entropy_sum += entropy_logp(lpe_new, levels);
            if (placement) {
              const double* lpp_new = place_logp->row(b) + n * 3;
              const double* lpp_old = old_place.row(b) + n * 3;
              kl_sum += kl_logp(lpp_old, lpp_new, 3);
              kl_grad_logits(lpp_old, lpp_new, 3, scale, d_place.row(b) + n * 3);
              entropy_sum += entropy_logp(lpp_new, 3);
            }
          }
        }

        // auxiliary value heads, one per stage
        double aux_loss = half_mse(out1.values, v_targ);
        Matrix d_aux1(out1.values.rows, out1.values.cols);
        for (std::size_t i = 0; i < d_aux1.size(); ++i) {
          d_aux1.v[i] = (out1.values.v[i] - v_targ.v[i]) * scale;
        }
        Matrix d_aux2;
        if (cascade) {
          aux_loss += half_mse(out2.values, v_targ);
          d_aux2 = Matrix(out2.values.rows, out2.values.cols);
          for (std::size_t i = 0; i < d_aux2.size(); ++i) {
            d_aux2.v[i] = (out2.values.v[i] - v_targ.v[i]) * scale;
          }
        }

        model_.stage1().zero_grads();
        if (cascade) model_.stage2().zero_grads();
        switch (model_.config().kind) {
          case ArchKind::kMtrc:
            model_.stage1().backward(out1, d_rate, d_place, d_aux1);
            break;
          case ArchKind::kEcuR:
          case ArchKind::kHeadsetR:
            model_.stage1().backward(out1, d_rate, Matrix(), d_aux1);
            break;
          case ArchKind::kR1C2:
            model_.stage1().backward(out1, d_rate, Matrix(), d_aux1);
            model_.stage2().backward(out2, Matrix(), d_place, d_aux2);
            break;
          case ArchKind::kC1R2:
            model_.stage1().backward(out1, Matrix(), d_place, d_aux1);
            model_.stage2().backward(out2, d_rate, Matrix(), d_aux2);
            break;
        }
        adam_stage1_.step(model_.stage1().params());
        if (cascade) adam_stage2_.step(model_.stage2().params());

        const double joint_loss = kl_sum * scale + aux_loss;
        if (!std::isfinite(joint_loss)) {
          throw std::runtime_error("training diverged: non-finite joint loss");
        }
        log.push_back({round, "aux_joint", joint_loss, entropy_sum * scale, duals_.mu0,
                       duals_.mu1, mean_qoe});
      }
    }
  }

  env::RolloutEnv& env_;
  TrainConfig cfg_;
  AgentModel model_;
  Adam adam_stage1_, adam_stage2_, adam_critic_;
  std::mt19937_64 rollout_rng_, batch_rng_;
  qoe::DualCoefficients duals_;
  std::vector<BufferStep> buffer_;
  int episode_counter_ = 0;
};

}  // namespace

TrainResult train(env::RolloutEnv& environment, const TrainConfig& cfg, ArchKind kind) {
  validate(cfg);
  Trainer trainer(environment, cfg, kind);
  return trainer.run();
}

void save_train_log(const std::vector<TrainLogEntry>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "round,phase,loss,entropy,mu0,mu1,mean_qoe\n";
  for (const auto& e : log) {
    out << e.round << ',' << e.phase << ',' << util::format_double(e.loss) << ','
        << util::format_double(e.entropy) << ',' << util::format_double(e.mu0) << ','
        << util::format_double(e.mu1) << ',' << util::format_double(e.mean_qoe) << '\n';
  }
}

}  // namespace edge360::rl
