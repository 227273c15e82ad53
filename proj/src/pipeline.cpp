#include "edge360/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edge360::pipeline {

void validate(const DeviceSpeeds& speeds) {
  if (!(speeds.headset_decode_bps > 0.0 && speeds.headset_render_bps > 0.0 &&
        speeds.ecu_decode_bps > 0.0 && speeds.ecu_render_bps > 0.0)) {
    throw std::invalid_argument("device speeds must all be > 0");
  }
}

namespace {

// Proportional split of `capacity` over demands[i] where eligible[i], with a
// running clamp plus residual assignment so the cumulative sum lands on the
// capacity and never exceeds it.
std::vector<double> proportional_split(double capacity, const std::vector<double>& demands,
                                       const std::vector<char>& eligible) {
  std::vector<double> shares(demands.size(), 0.0);
  double total = 0.0;
  std::size_t count = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    if (!eligible[i]) continue;
    total += demands[i];
    ++count;
    last = i;
  }
  if (count == 0) return shares;
  double cum = 0.0;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    if (!eligible[i]) continue;
    double s;
    if (i == last) {
      s = capacity - cum;
    } else if (total > 0.0) {
      s = capacity * (demands[i] / total);
    } else {
      s = capacity / static_cast<double>(count);
    }
    s = std::clamp(s, 0.0, capacity - cum);
    shares[i] = s;
    cum += s;
  }
  return shares;
}

}  // namespace

EcuAllocation allocate_ecu(const std::vector<Placement>& placements,
                           const std::vector<double>& decode_demand_bits,
                           const std::vector<double>& render_demand_bits,
                           const DeviceSpeeds& speeds) {
  const std::size_t n = placements.size();
  if (decode_demand_bits.size() != n || render_demand_bits.size() != n) {
    throw std::invalid_argument("allocate_ecu: demand vectors must match placements");
  }
  std::vector<char> decode_elig(n, 0), render_elig(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    decode_elig[i] = placements[i] == Placement::kEcuFull || placements[i] == Placement::kEcuDecode;
    render_elig[i] = placements[i] == Placement::kEcuFull;
  }
  EcuAllocation alloc;
  alloc.decode_share_bps =
      proportional_split(speeds.ecu_decode_bps, decode_demand_bits, decode_elig);
  alloc.render_share_bps =
      proportional_split(speeds.ecu_render_bps, render_demand_bits, render_elig);
  return alloc;
}

GopTimings gop_timings(const media::QualityLadder& ladder, const media::MediaFactors& factors,
                       int gop, int level, Placement placement, const DeviceSpeeds& speeds,
                       double ecu_decode_share_bps, double ecu_render_share_bps,
                       const net::ThroughputTrace& trace, double request_time_s) {
  const double decode_bits = media::decode_complexity_bits(ladder, gop, level);
  const double render_bits = media::render_complexity_bits(ladder, factors, gop, level);
  const double payload = media::payload_bits(ladder, factors, gop, level, placement);

  GopTimings t;
  double ecu_compute_s = 0.0;
  switch (placement) {
    case Placement::kEcuFull:
      if (!(ecu_decode_share_bps > 0.0) && decode_bits > 0.0) {
        throw std::invalid_argument("gop_timings: ECU decode placement with zero decode share");
      }
      if (!(ecu_render_share_bps > 0.0) && render_bits > 0.0) {
        throw std::invalid_argument("gop_timings: ECU render placement with zero render share");
      }
      t.decode_s = decode_bits > 0.0 ? decode_bits / ecu_decode_share_bps : 0.0;
      t.render_s = render_bits > 0.0 ? render_bits / ecu_render_share_bps : 0.0;
      ecu_compute_s = t.decode_s + t.render_s;
      break;
    case Placement::kEcuDecode:
      if (!(ecu_decode_share_bps > 0.0) && decode_bits > 0.0) {
        throw std::invalid_argument("gop_timings: ECU decode placement with zero decode share");
      }
      t.decode_s = decode_bits > 0.0 ? decode_bits / ecu_decode_share_bps : 0.0;
      t.render_s = render_bits / speeds.headset_render_bps;
      ecu_compute_s = t.decode_s;
      break;
    case Placement::kHeadset:
      t.decode_s = decode_bits / speeds.headset_decode_bps;
      t.render_s = render_bits / speeds.headset_render_bps;
      break;
  }
  t.transmit_s = net::transmit(trace, request_time_s + ecu_compute_s, payload).duration_s;
  return t;
}

AdvanceResult advance_buffer(const PlaybackState& state, const GopTimings& timings,
                             double gop_duration_s) {
  auto pos = [](double x) { return x > 0.0 ? x : 0.0; };
  const double prep = timings.prep_s();

  AdvanceResult out;
  out.timings = timings;
  out.timings.rebuffer_s = pos(prep - state.buffer_s);

  const double drained = pos(state.buffer_s - prep);
  out.timings.wait_s = pos(drained + gop_duration_s - state.buffer_max_s);

  out.state = state;
  out.state.buffer_s =
      std::min(pos(drained + gop_duration_s - out.timings.wait_s), state.buffer_max_s);
  out.state.clock_s = state.clock_s + prep + out.timings.wait_s;
  out.state.gop_index = state.gop_index + 1;
  return out;
}

}  // namespace edge360::pipeline
