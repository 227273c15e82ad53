#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "edge360/qoe.hpp"

using namespace edge360;

namespace {

qoe::EpisodeMetrics record_all(const std::vector<double>& q, const std::vector<double>& s) {
  qoe::EpisodeMetrics m;
  for (std::size_t i = 0; i < q.size(); ++i) m.record(q[i], s[i]);
  return m;
}

}  // namespace

TEST_CASE("avq qv rt basics") {
  auto m = record_all({50.0, 50.0, 50.0}, {0.0, 0.0, 0.0});
  CHECK(qoe::avq(m) == doctest::Approx(50.0));
  CHECK(qoe::qv(m) == 0.0);

  auto m2 = record_all({48.0, 52.0}, {0.0, 0.0});
  CHECK(qoe::qv(m2) == doctest::Approx(4.0));

  auto m3 = record_all({50.0, 50.0, 50.0}, {0.0, 0.5, 1.0});
  CHECK(qoe::rt(m3) == doctest::Approx(1.5));
}

TEST_CASE("qv needs two GoPs") {
  qoe::EpisodeMetrics m;
  CHECK_THROWS_AS(qoe::avq(m), std::domain_error);
  m.record(50.0, 0.0);
  CHECK_THROWS_AS(qoe::qv(m), std::domain_error);
  CHECK(qoe::avq(m) == 50.0);
}

TEST_CASE("lagrangian qoe") {
  qoe::DualCoefficients coeffs{0.1, 0.1, 0.01};
  qoe::QoeTargets targets{2.0, 2.0};
  // Q=50, S=1, V=1 -> 50 + 0.1*(2-1) + 0.1*(2-1) = 50.2
  auto m = record_all({49.5, 50.5}, {1.0, 0.0});
  CHECK(qoe::lagrangian_qoe(m, coeffs, targets) == doctest::Approx(50.2));

  qoe::DualCoefficients zero{0.0, 0.0, 0.01};
  CHECK(qoe::lagrangian_qoe(m, zero, targets) == doctest::Approx(50.0));

  // constraints active at target -> plain Q
  qoe::QoeTargets att{1.0, 1.0};
  CHECK(qoe::lagrangian_qoe(m, coeffs, att) == doctest::Approx(50.0));
}

TEST_CASE("step reward and telescoping") {
  CHECK(qoe::step_reward(50.2, 50.2) == 0.0);
  CHECK(qoe::step_reward(50.0, 50.2) == doctest::Approx(0.2));

  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  qoe::DualCoefficients coeffs{0.3, 0.2, 0.01};
  qoe::QoeTargets targets{2.0, 1.5};
  for (int trial = 0; trial < 100; ++trial) {
    qoe::EpisodeMetrics m;
    const double initial = qoe::lagrangian_qoe(m, coeffs, targets);
    double prev = initial;
    double reward_sum = 0.0;
    const int gops = 2 + static_cast<int>(uni(rng) * 40);
    for (int g = 0; g < gops; ++g) {
      m.record(40.0 + uni(rng) * 16.0, uni(rng) < 0.3 ? uni(rng) : 0.0);
      const double now = qoe::lagrangian_qoe(m, coeffs, targets);
      reward_sum += qoe::step_reward(prev, now);
      prev = now;
    }
    const double final_qoe = qoe::lagrangian_qoe(m, coeffs, targets);
    CHECK(reward_sum == doctest::Approx(final_qoe - initial).epsilon(1e-9));
  }
}

TEST_CASE("metrics match a brute-force recomputation from the raw log") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int gops = 2 + static_cast<int>(uni(rng) * 30);
    std::vector<double> q(gops), s(gops);
    for (int g = 0; g < gops; ++g) {
      q[g] = 42.0 + uni(rng) * 14.0;
      s[g] = uni(rng) < 0.4 ? uni(rng) * 2.0 : 0.0;
    }
    auto m = record_all(q, s);
    double q_sum = 0.0, v_sum = 0.0, s_sum = 0.0;
    for (int g = 0; g < gops; ++g) {
      q_sum += q[g];
      s_sum += s[g];
      if (g > 0) v_sum += std::abs(q[g] - q[g - 1]);
    }
    CHECK(qoe::avq(m) == q_sum / gops);
    CHECK(qoe::qv(m) == v_sum / (gops - 1));
    CHECK(qoe::rt(m) == s_sum);
  }
}

TEST_CASE("dual updates") {
  qoe::QoeTargets targets{2.0, 2.0};
  qoe::DualCoefficients c{0.1, 0.1, 0.01};
  auto next = qoe::update_duals(c, 4.0, 2.0, targets);
  CHECK(next.mu0 == doctest::Approx(0.12));
  CHECK(next.mu1 == doctest::Approx(0.1));

  // at target: unchanged
  next = qoe::update_duals(c, 2.0, 2.0, targets);
  CHECK(next.mu0 == doctest::Approx(0.1));

  // projection at zero
  qoe::DualCoefficients small{0.005, 0.005, 0.01};
  next = qoe::update_duals(small, 1.0, 1.0, targets);
  CHECK(next.mu0 == 0.0);
  CHECK(next.mu1 == 0.0);
}

TEST_CASE("dual coefficients respond monotonically and stay nonnegative") {
  qoe::QoeTargets targets{2.0, 2.0};
  qoe::DualCoefficients c{0.1, 0.1, 0.01};
  // sustained violation: strictly increasing
  double prev = c.mu0;
  for (int i = 0; i < 20; ++i) {
    c = qoe::update_duals(c, 4.0, 2.0, targets);
    CHECK(c.mu0 > prev);
    prev = c.mu0;
  }
  // sustained satisfaction: nonincreasing, floored at zero
  for (int i = 0; i < 50; ++i) {
    const double before = c.mu0;
    c = qoe::update_duals(c, 0.0, 2.0, targets);
    CHECK(c.mu0 <= before);
    CHECK(c.mu0 >= 0.0);
  }
  CHECK(c.mu0 == 0.0);

  // random update sequences never drive the coefficients negative
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  qoe::DualCoefficients d{0.1, 0.1, 0.05};
  for (int i = 0; i < 1000; ++i) {
    d = qoe::update_duals(d, uni(rng) * 5.0, uni(rng) * 5.0, targets);
    CHECK(d.mu0 >= 0.0);
    CHECK(d.mu1 >= 0.0);
  }
}
