#pragma once

#include "edge360/rl/tensor.hpp"

namespace edge360::rl {

// One-step TD advantage r + gamma*V(s') - V(s); terminal steps use V(s')=0.
double advantage(double reward, double v_s, double v_next, double gamma, bool terminal);

// Surrogate objectives (to be maximized). `rho` is the probability ratio.
double clip_objective(double rho, double adv, double eps);
// Applies the max(., c*adv) floor only where adv < 0.
double dual_clip_objective(double rho, double adv, double eps, double c);
// Subgradient of dual_clip_objective w.r.t. rho (kinks resolve toward the
// unclipped branch).
double dual_clip_drho(double rho, double adv, double eps, double c);

// Entropy of one categorical distribution given its log-probs.
double entropy_logp(const double* logp, int n);
// dlogits[k] += scale * dH/dz_k, with dH/dz_k = -p_k (logp_k + H).
void entropy_grad_logits(const double* logp, int n, double scale, double* dlogits);

// KL(old || new) of categoricals from log-probs.
double kl_logp(const double* logp_old, const double* logp_new, int n);
// dlogits[k] += scale * (p_new_k - p_old_k)  (gradient w.r.t. new logits).
void kl_grad_logits(const double* logp_old, const double* logp_new, int n, double scale,
                    double* dlogits);

// 0.5 * mean((pred - targ)^2) over all entries.
double half_mse(const Matrix& pred, const Matrix& targ);

}  // namespace edge360::rl
