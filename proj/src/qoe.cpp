#include "edge360/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edge360::qoe {

void validate(const DualCoefficients& coeffs) {
  if (!(coeffs.mu0 >= 0.0 && coeffs.mu1 >= 0.0)) {
    throw std::invalid_argument("dual coefficients must be >= 0");
  }
  if (!(coeffs.step > 0.0)) throw std::invalid_argument("dual step must be > 0");
}

void EpisodeMetrics::record(double quality_db, double rebuffer_s) {
  quality_sum_db += quality_db;
  if (gops >= 1) variation_sum_db += std::abs(quality_db - last_quality_db);
  rebuffer_sum_s += rebuffer_s;
  last_quality_db = quality_db;
  ++gops;
}

double avq(const EpisodeMetrics& m) {
  if (m.gops < 1) throw std::domain_error("avq needs at least one GoP");
  return m.quality_sum_db / static_cast<double>(m.gops);
}

double qv(const EpisodeMetrics& m) {
  if (m.gops < 2) throw std::domain_error("qv needs at least two GoPs");
  return m.variation_sum_db / static_cast<double>(m.gops - 1);
}

double rt(const EpisodeMetrics& m) { return m.rebuffer_sum_s; }

double lagrangian_qoe(const EpisodeMetrics& m, const DualCoefficients& coeffs,
                      const QoeTargets& targets) {
  const double q = m.gops >= 1 ? m.quality_sum_db / static_cast<double>(m.gops) : 0.0;
  const double v = m.gops >= 2 ? m.variation_sum_db / static_cast<double>(m.gops - 1) : 0.0;
  return q + coeffs.mu0 * (targets.h0_rebuffer_s - m.rebuffer_sum_s) +
         coeffs.mu1 * (targets.h1_quality_var_db - v);
}

double step_reward(double qoe_prev, double qoe_now) { return qoe_now - qoe_prev; }

DualCoefficients update_duals(const DualCoefficients& coeffs, double episode_rt_s,
                              double episode_qv_db, const QoeTargets& targets) {
  DualCoefficients next = coeffs;
  next.mu0 = std::max(0.0, coeffs.mu0 + coeffs.step * (episode_rt_s - targets.h0_rebuffer_s));
  next.mu1 = std::max(0.0, coeffs.mu1 + coeffs.step * (episode_qv_db - targets.h1_quality_var_db));
  return next;
}

}  // namespace edge360::qoe
