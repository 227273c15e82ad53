#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "edge360/net.hpp"
#include "edge360/util.hpp"

using namespace edge360;

namespace {

// Fine-step integration oracle: march forward in steps of at most h seconds,
// never stepping across a segment boundary, accumulating rate*dt until the
// payload is reached (final step interpolated). Brute force by construction;
// shares no code with the closed-form segment walk under test.
double fine_transmit_end(const net::ThroughputTrace& trace, double start, double payload,
                         double h) {
  const double period = trace.duration_s();
  const double dt_seg = trace.sample_interval_s;
  double acc = 0.0;
  double t = start;
  for (long step = 0; step < 400000000L; ++step) {
    double pos = t;
    if (trace.loop) {
      pos = std::fmod(pos, period);
    } else if (pos >= period) {
      return t;  // starved; callers only use completing cases
    }
    auto idx = static_cast<std::size_t>(pos / dt_seg);
    if (idx >= trace.rates_bps.size()) idx = trace.rates_bps.size() - 1;
    const double rate = trace.rates_bps[idx];
    const double to_boundary = (static_cast<double>(idx) + 1.0) * dt_seg - pos;
    double dt = std::min(h, to_boundary);
    if (dt <= 0.0) dt = h * 1e-3;  // nudge off an exact boundary
    if (rate > 0.0 && acc + rate * dt >= payload) {
      return t + (payload - acc) / rate;
    }
    acc += rate * dt;
    t += dt;
  }
  return t;
}

net::ThroughputTrace two_segment_trace() {
  net::ThroughputTrace t;
  t.sample_interval_s = 1.0;
  t.rates_bps = {1e9, 2e9, 2e9, 2e9, 2e9, 2e9};
  t.loop = true;
  return t;
}

}  // namespace

TEST_CASE("transmit at a constant rate") {
  net::ThroughputTrace t;
  t.sample_interval_s = 1.0;
  t.rates_bps = {1e9, 1e9, 1e9, 1e9};
  auto r = net::transmit(t, 0.0, 0.5e9);
  CHECK(r.duration_s == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.end_s == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("transmit across a rate change") {
  auto t = two_segment_trace();
  auto r = net::transmit(t, 0.0, 2e9);
  CHECK(r.duration_s == doctest::Approx(1.5).epsilon(1e-9));
  const double oracle = fine_transmit_end(t, 0.0, 2e9, 1e-6);
  CHECK(r.end_s == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("zero payload returns immediately") {
  auto t = two_segment_trace();
  auto r = net::transmit(t, 0.7, 0.0);
  CHECK(r.duration_s == 0.0);
  CHECK(r.end_s == 0.7);
}

TEST_CASE("transmit wraps looping traces") {
  net::ThroughputTrace t;
  t.sample_interval_s = 0.5;
  t.rates_bps = {1e9, 3e9};
  t.loop = true;
  // one full loop holds 2e9 bits; ask for 5.5 loops worth
  auto r = net::transmit(t, 0.25, 11e9);
  const double oracle = fine_transmit_end(t, 0.25, 11e9, 1e-6);
  CHECK(r.end_s == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("starvation without looping") {
  net::ThroughputTrace t;
  t.sample_interval_s = 1.0;
  t.rates_bps = {1e9, 0.0, 0.0};
  t.loop = false;
  // all-zero beyond the start position
  CHECK_THROWS_AS(net::transmit(t, 1.2, 1.0), net::StarvationError);
  // payload larger than the remaining trace capacity
  CHECK_THROWS_AS(net::transmit(t, 0.0, 2e9), net::StarvationError);
  // loop=true never starves while some rate is positive
  t.loop = true;
  CHECK_NOTHROW(net::transmit(t, 1.2, 5e9));
}

TEST_CASE("expected_rate basics") {
  net::ThroughputTrace c;
  c.sample_interval_s = 1.0;
  c.rates_bps = {1e9, 1e9};
  CHECK(net::expected_rate(c, 0.3, 1.7) == doctest::Approx(1e9).epsilon(1e-12));

  auto t = two_segment_trace();
  CHECK(net::expected_rate(t, 0.0, 1.5) == doctest::Approx(2e9 / 1.5).epsilon(1e-12));
  CHECK_THROWS_AS(net::expected_rate(t, 1.0, 1.0), std::domain_error);
}

TEST_CASE("expected_rate times duration recovers the payload") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    net::ThroughputTrace t;
    t.sample_interval_s = 0.05 + uni(rng) * 0.5;
    const int n = 2 + static_cast<int>(uni(rng) * 20);
    for (int i = 0; i < n; ++i) t.rates_bps.push_back(uni(rng) < 0.15 ? 0.0 : 1e8 + uni(rng) * 3e9);
    t.rates_bps[0] = 1e9;  // guarantee a positive rate
    t.loop = true;
    const double start = uni(rng) * 2.0 * t.duration_s();
    const double payload = 1e6 + uni(rng) * 4e9;
    auto r = net::transmit(t, start, payload);
    const double recovered = net::expected_rate(t, start, r.end_s) * r.duration_s;
    CHECK(recovered == doctest::Approx(payload).epsilon(1e-9));
  }
}

TEST_CASE("additivity: back-to-back transmissions compose") {
  auto t = two_segment_trace();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double start = uni(rng) * 10.0;
    const double a = uni(rng) * 3e9;
    const double b = uni(rng) * 3e9;
    auto first = net::transmit(t, start, a);
    auto second = net::transmit(t, first.end_s, b);
    auto whole = net::transmit(t, start, a + b);
    CHECK(second.end_s == doctest::Approx(whole.end_s).epsilon(1e-9));
  }
}

TEST_CASE("duration is nonincreasing under pointwise rate increases") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    net::ThroughputTrace lo;
    lo.sample_interval_s = 0.2;
    const int n = 3 + static_cast<int>(uni(rng) * 10);
    for (int i = 0; i < n; ++i) lo.rates_bps.push_back(1e8 + uni(rng) * 2e9);
    net::ThroughputTrace hi = lo;
    for (auto& r : hi.rates_bps) r += uni(rng) * 1e9;
    const double start = uni(rng) * 5.0;
    const double payload = uni(rng) * 5e9;
    CHECK(net::transmit(hi, start, payload).duration_s <=
          net::transmit(lo, start, payload).duration_s + 1e-12);
  }
}

TEST_CASE("generate_trace degenerate and deterministic") {
  net::TraceGenSpec spec;
  spec.duration_s = 10.0;
  spec.sample_interval_s = 0.5;
  spec.mean_bps = 1e9;
  spec.log_std = 0.0;
  spec.blockage_prob = 0.0;
  auto t = net::generate_trace(spec);
  CHECK(t.rates_bps.size() == 20);
  for (double r : t.rates_bps) CHECK(r == doctest::Approx(1e9).epsilon(1e-12));

  spec.log_std = 0.4;
  spec.blockage_prob = 0.1;
  spec.seed = 5;
  auto a = net::generate_trace(spec);
  auto b = net::generate_trace(spec);
  CHECK(a == b);
  spec.seed = 6;
  CHECK(!(net::generate_trace(spec) == a));
}

TEST_CASE("generated trace mean is close to the requested mean") {
  net::TraceGenSpec spec;
  spec.duration_s = 1e5;
  spec.sample_interval_s = 1.0;
  spec.mean_bps = 2e9;
  spec.log_std = 0.3;
  spec.blockage_prob = 0.0;
  spec.seed = 99;
  auto t = net::generate_trace(spec);
  CHECK(t.rates_bps.size() == 100000);
  CHECK(t.mean_bps() == doctest::Approx(2e9).epsilon(0.05));
}

TEST_CASE("trace file round-trip") {
  net::TraceGenSpec spec;
  spec.duration_s = 30.0;
  spec.sample_interval_s = 0.25;
  spec.mean_bps = 1.3e9;
  spec.log_std = 0.5;
  spec.blockage_prob = 0.2;
  spec.blockage_factor = 0.3;
  spec.seed = 8;
  auto t = net::generate_trace(spec);
  const std::string path = "test_trace_roundtrip.csv";
  net::save_trace(t, path);
  auto loaded = net::load_trace(path);
  CHECK(loaded == t);
  std::remove(path.c_str());
}

TEST_CASE("trace parse errors carry line numbers") {
  const std::string path = "test_trace_bad.csv";
  {
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("t_s,rate_bps\n0,1e9\n1,-2\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(net::load_trace(path), doctest::Contains(":3:"), util::ParseError);
  {
    FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("wrong,header\n0,1\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(net::load_trace(path), util::ParseError);
  std::remove(path.c_str());
}
