#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edge360::net {

// Transmission can never finish: looping disabled and the trace ran out.
class StarvationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-constant per-user channel rate, sampled on a uniform grid.
struct ThroughputTrace {
  double sample_interval_s = 1.0;
  std::vector<double> rates_bps;
  bool loop = true;

  double duration_s() const { return sample_interval_s * static_cast<double>(rates_bps.size()); }
  double mean_bps() const;

  friend bool operator==(const ThroughputTrace& a, const ThroughputTrace& b) {
    return a.sample_interval_s == b.sample_interval_s && a.rates_bps == b.rates_bps;
  }
};

struct TraceGenSpec {
  double duration_s = 60.0;
  double sample_interval_s = 1.0;
  double mean_bps = 1.0e9;
  double log_std = 0.0;          // sigma of log-rate; 0 = constant
  double blockage_prob = 0.0;    // per-sample probability of a blockage dip
  double blockage_factor = 0.2;  // multiplicative drop during blockage, in (0,1)
  std::uint64_t seed = 0;
};

void validate(const ThroughputTrace& trace);
void validate(const TraceGenSpec& spec);

struct TransmitResult {
  double end_s = 0.0;
  double duration_s = 0.0;
};

// Walk segments until the rate integral reaches payload_bits. Exact over the
// piecewise-constant trace; whole loops are skipped in O(1) once the per-loop
// capacity is known. Throws StarvationError when loop=false and the payload
// cannot complete by trace end.
TransmitResult transmit(const ThroughputTrace& trace, double start_s, double payload_bits);

// Integral of the rate over [start_s, end_s], in bits.
double integrate_bits(const ThroughputTrace& trace, double start_s, double end_s);

// Time-averaged rate over [start_s, end_s]. Throws std::domain_error when
// end_s <= start_s.
double expected_rate(const ThroughputTrace& trace, double start_s, double end_s);

// Deterministic per seed; log-normal around mean_bps with occasional blockage.
ThroughputTrace generate_trace(const TraceGenSpec& spec);

// CSV `t_s,rate_bps`, one row per sample at uniform spacing. The interval is
// inferred from row spacing on load (1.0 s for a single-row file); `loop` is
// not part of the format.
void save_trace(const ThroughputTrace& trace, const std::string& path);
ThroughputTrace load_trace(const std::string& path, bool loop = true);

}  // namespace edge360::net
