#include "edge360/rl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edge360::rl {

double advantage(double reward, double v_s, double v_next, double gamma, bool terminal) {
  return reward + (terminal ? 0.0 : gamma * v_next) - v_s;
}

double clip_objective(double rho, double adv, double eps) {
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * adv, clipped * adv);
}

double dual_clip_objective(double rho, double adv, double eps, double c) {
  if (!(c > 1.0)) throw std::invalid_argument("dual-clip constant must be > 1");
  const double single = clip_objective(rho, adv, eps);
  return adv < 0.0 ? std::max(single, c * adv) : single;
}

double dual_clip_drho(double rho, double adv, double eps, double c) {
  if (adv >= 0.0) {
    // min(rho, 1+eps) * adv
    return rho <= 1.0 + eps ? adv : 0.0;
  }
  // single clip is max(rho, 1-eps) * adv; the dual floor kills the gradient
  // once the floor binds.
  const double single = std::max(rho, 1.0 - eps) * adv;
  if (single < c * adv) return 0.0;
  return rho >= 1.0 - eps ? adv : 0.0;
}

double entropy_logp(const double* logp, int n) {
  double h = 0.0;
  for (int i = 0; i < n; ++i) h -= std::exp(logp[i]) * logp[i];
  return h;
}

void entropy_grad_logits(const double* logp, int n, double scale, double* dlogits) {
  const double h = entropy_logp(logp, n);
  for (int i = 0; i < n; ++i) {
    const double p = std::exp(logp[i]);
    dlogits[i] += scale * (-p * (logp[i] + h));
  }
}

double kl_logp(const double* logp_old, const double* logp_new, int n) {
  double kl = 0.0;
  for (int i = 0; i < n; ++i) kl += std::exp(logp_old[i]) * (logp_old[i] - logp_new[i]);
  return kl;
}

void kl_grad_logits(const double* logp_old, const double* logp_new, int n, double scale,
                    double* dlogits) {
  for (int i = 0; i < n; ++i) {
    dlogits[i] += scale * (std::exp(logp_new[i]) - std::exp(logp_old[i]));
  }
}

double half_mse(const Matrix& pred, const Matrix& targ) {
  if (pred.rows != targ.rows || pred.cols != targ.cols) {
    throw std::invalid_argument("half_mse: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.v[i] - targ.v[i];
    acc += d * d;
  }
  return 0.5 * acc / static_cast<double>(pred.size());
}

}  // namespace edge360::rl
