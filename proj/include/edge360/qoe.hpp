#pragma once

namespace edge360::qoe {

// Constraint targets: aggregate rebuffering bound and quality-variation bound.
struct QoeTargets {
  double h0_rebuffer_s = 2.0;
  double h1_quality_var_db = 2.0;
};

// Lagrangian weights and their dual-ascent step.
struct DualCoefficients {
  double mu0 = 0.1;  // rebuffering weight
  double mu1 = 0.1;  // quality-variation weight
  double step = 0.01;
};
void validate(const DualCoefficients& coeffs);

// Per-user running sums over an episode.
struct EpisodeMetrics {
  double quality_sum_db = 0.0;
  double variation_sum_db = 0.0;
  double rebuffer_sum_s = 0.0;
  double last_quality_db = 0.0;
  int gops = 0;

  void record(double quality_db, double rebuffer_s);
};

// AVQ = mean quality over recorded GoPs (needs >= 1).
double avq(const EpisodeMetrics& m);
// QV = mean |quality delta| over consecutive GoPs (needs >= 2).
double qv(const EpisodeMetrics& m);
// RT = total rebuffering time.
double rt(const EpisodeMetrics& m);

// Q + mu0*(H0 - S) + mu1*(H1 - V) with the running sums recorded so far.
// Total on any state: Q is 0 before the first GoP, V is 0 before the second.
double lagrangian_qoe(const EpisodeMetrics& m, const DualCoefficients& coeffs,
                      const QoeTargets& targets);

double step_reward(double qoe_prev, double qoe_now);

// Projected dual ascent: mu' = max(0, mu + step * violation).
DualCoefficients update_duals(const DualCoefficients& coeffs, double episode_rt_s,
                              double episode_qv_db, const QoeTargets& targets);

}  // namespace edge360::qoe
