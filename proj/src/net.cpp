#include "edge360/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "edge360/util.hpp"

namespace edge360::net {

double ThroughputTrace::mean_bps() const {
  if (rates_bps.empty()) return 0.0;
  double sum = 0.0;
  for (double r : rates_bps) sum += r;
  return sum / static_cast<double>(rates_bps.size());
}

void validate(const ThroughputTrace& trace) {
  if (!(trace.sample_interval_s > 0.0)) {
    throw std::invalid_argument("sample_interval_s must be > 0");
  }
  if (trace.rates_bps.empty()) throw std::invalid_argument("trace has no samples");
  bool any_positive = false;
  for (double r : trace.rates_bps) {
    if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("rates must be finite and >= 0");
    any_positive |= r > 0.0;
  }
  if (!any_positive) throw std::invalid_argument("trace needs at least one positive rate");
}

void validate(const TraceGenSpec& spec) {
  if (!(spec.duration_s > 0.0)) throw std::invalid_argument("duration_s must be > 0");
  if (!(spec.sample_interval_s > 0.0)) throw std::invalid_argument("sample_interval_s must be > 0");
  if (!(spec.mean_bps > 0.0)) throw std::invalid_argument("mean_bps must be > 0");
  if (!(spec.log_std >= 0.0)) throw std::invalid_argument("log_std must be >= 0");
  if (!(spec.blockage_prob >= 0.0 && spec.blockage_prob <= 1.0)) {
    throw std::invalid_argument("blockage_prob must be in [0,1]");
  }
  if (!(spec.blockage_factor > 0.0 && spec.blockage_factor < 1.0)) {
    throw std::invalid_argument("blockage_factor must be in (0,1)");
  }
}

namespace {

double loop_capacity_bits(const ThroughputTrace& t) {
  double cap = 0.0;
  for (double r : t.rates_bps) cap += r * t.sample_interval_s;
  return cap;
}

// Segment index and time left in that segment at absolute position pos
// (already reduced modulo the period when looping).
struct SegPos {
  std::size_t seg;
  double time_left;
};

SegPos locate(const ThroughputTrace& t, double pos) {
  const double dt = t.sample_interval_s;
  auto seg = static_cast<std::size_t>(std::floor(pos / dt));
  if (seg >= t.rates_bps.size()) seg = t.rates_bps.size() - 1;
  double left = (static_cast<double>(seg) + 1.0) * dt - pos;
  if (left <= 0.0) {
    // pos landed exactly on (or past) the boundary
    seg = (seg + 1) % t.rates_bps.size();
    left = dt;
  }
  return {seg, left};
}

}  // namespace

TransmitResult transmit(const ThroughputTrace& trace, double start_s, double payload_bits) {
  if (!(payload_bits >= 0.0)) throw std::invalid_argument("payload_bits must be >= 0");
  if (!(start_s >= 0.0)) throw std::invalid_argument("start_s must be >= 0");
  if (payload_bits == 0.0) return {start_s, 0.0};

  const double dt = trace.sample_interval_s;
  const std::size_t n = trace.rates_bps.size();
  const double period = dt * static_cast<double>(n);

  double pos = start_s;
  if (trace.loop && pos >= period) {
    pos = std::fmod(pos, period);
  } else if (!trace.loop && pos >= period) {
    throw StarvationError("transmit: start is past trace end and loop is disabled");
  }

  double remaining = payload_bits;
  double duration = 0.0;
  SegPos sp = locate(trace, pos);
  std::size_t seg = sp.seg;
  double time_left = sp.time_left;
  double loop_cap = 0.0;  // computed lazily on first wrap

  while (true) {
    const double rate = trace.rates_bps[seg];
    if (rate > 0.0) {
      const double need = remaining / rate;
      if (need <= time_left) {
        duration += need;
        break;
      }
      remaining -= rate * time_left;
    }
    duration += time_left;
    time_left = dt;
    ++seg;
    if (seg == n) {
      if (!trace.loop) {
        throw StarvationError("transmit: trace exhausted with " +
                              util::format_double(remaining) + " bits left");
      }
      seg = 0;
      if (loop_cap == 0.0) loop_cap = loop_capacity_bits(trace);
      const double full_loops = std::floor(remaining / loop_cap);
      if (full_loops >= 1.0) {
        remaining -= full_loops * loop_cap;
        duration += full_loops * period;
        if (remaining <= 0.0) {
          // Floating-point overshoot from the bulk skip; land on the end.
          break;
        }
      }
    }
  }
  return {start_s + duration, duration};
}

double integrate_bits(const ThroughputTrace& trace, double start_s, double end_s) {
  if (!(end_s >= start_s)) throw std::domain_error("integrate_bits: end < start");
  if (end_s == start_s) return 0.0;
  const double dt = trace.sample_interval_s;
  const std::size_t n = trace.rates_bps.size();
  const double period = dt * static_cast<double>(n);

  // Prefix integral from 0 to t over the (possibly looping) rate function.
  auto prefix = [&](double t) -> double {
    double full = 0.0;
    if (trace.loop && t >= period) {
      const double k = std::floor(t / period);
      full = k * loop_capacity_bits(trace);
      t -= k * period;
    } else if (!trace.loop && t >= period) {
      return loop_capacity_bits(trace);  // rate is 0 past the end
    }
    auto seg = static_cast<std::size_t>(std::floor(t / dt));
    if (seg >= n) seg = n - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < seg; ++i) acc += trace.rates_bps[i] * dt;
    acc += trace.rates_bps[seg] * (t - static_cast<double>(seg) * dt);
    return full + acc;
  };
  return prefix(end_s) - prefix(start_s);
}

double expected_rate(const ThroughputTrace& trace, double start_s, double end_s) {
  if (!(end_s > start_s)) throw std::domain_error("expected_rate: end must be > start");
  return integrate_bits(trace, start_s, end_s) / (end_s - start_s);
}

ThroughputTrace generate_trace(const TraceGenSpec& spec) {
  validate(spec);
  ThroughputTrace trace;
  trace.sample_interval_s = spec.sample_interval_s;
  trace.loop = true;
  const auto samples = static_cast<std::size_t>(
      std::max(1.0, std::ceil(spec.duration_s / spec.sample_interval_s)));
  trace.rates_bps.resize(samples);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  // E[exp(sigma z - sigma^2/2)] = 1, so the process mean stays at mean_bps.
  const double drift = -0.5 * spec.log_std * spec.log_std;
  for (auto& r : trace.rates_bps) {
    r = spec.mean_bps * std::exp(spec.log_std * unit(rng) + drift);
    if (coin(rng) < spec.blockage_prob) r *= spec.blockage_factor;
  }
  validate(trace);
  return trace;
}

void save_trace(const ThroughputTrace& trace, const std::string& path) {
  validate(trace);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t_s,rate_bps\n";
  for (std::size_t i = 0; i < trace.rates_bps.size(); ++i) {
    out << util::format_double(static_cast<double>(i) * trace.sample_interval_s) << ','
        << util::format_double(trace.rates_bps[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ThroughputTrace load_trace(const std::string& path, bool loop) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw util::ParseError(path, 1, "empty file");
  ++line_no;
  if (util::split_csv_line(line) != std::vector<std::string>{"t_s", "rate_bps"}) {
    throw util::ParseError(path, 1, "expected header t_s,rate_bps");
  }
  ThroughputTrace trace;
  trace.loop = loop;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = util::split_csv_line(line);
    if (fields.size() != 2) throw util::ParseError(path, line_no, "expected 2 fields");
    try {
      times.push_back(util::parse_double(fields[0]));
      double rate = util::parse_double(fields[1]);
      if (!(rate >= 0.0)) throw std::invalid_argument("negative rate");
      trace.rates_bps.push_back(rate);
    } catch (const std::invalid_argument& e) {
      throw util::ParseError(path, line_no, e.what());
    }
  }
  if (trace.rates_bps.empty()) throw util::ParseError(path, line_no, "no samples");
  if (times.size() >= 2) {
    trace.sample_interval_s = times[1] - times[0];
    if (!(trace.sample_interval_s > 0.0)) {
      throw util::ParseError(path, 3, "non-increasing timestamps");
    }
    for (std::size_t i = 2; i < times.size(); ++i) {
      double expected = times[0] + static_cast<double>(i) * trace.sample_interval_s;
      if (std::abs(times[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
        throw util::ParseError(path, static_cast<int>(i) + 2, "non-uniform sample spacing");
      }
    }
  } else {
    trace.sample_interval_s = 1.0;
  }
  validate(trace);
  return trace;
}

}  // namespace edge360::net
