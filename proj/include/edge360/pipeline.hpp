#pragma once

#include <vector>

#include "edge360/media.hpp"
#include "edge360/net.hpp"

namespace edge360::pipeline {

using media::Placement;

// Maximum decode/render throughputs, all in bits of complexity per second.
struct DeviceSpeeds {
  double headset_decode_bps = 0.2e9;
  double headset_render_bps = 9.4e9;
  double ecu_decode_bps = 7.5e9;
  double ecu_render_bps = 20.0e9;
};
void validate(const DeviceSpeeds& speeds);

struct PlaybackState {
  double buffer_s = 0.0;
  double clock_s = 0.0;
  int gop_index = 0;
  double buffer_max_s = 4.0;
};

struct GopTimings {
  double decode_s = 0.0;
  double render_s = 0.0;
  double transmit_s = 0.0;
  double wait_s = 0.0;      // full-buffer waiting after reception
  double rebuffer_s = 0.0;  // stall while preparing this GoP
  double prep_s() const { return decode_s + render_s + transmit_s; }
};

// Per-user ECU compute shares for the current decision epoch.
struct EcuAllocation {
  std::vector<double> decode_share_bps;
  std::vector<double> render_share_bps;
};

// Proportional-to-demand split of the ECU decode/render capacity across the
// users whose placement needs it. Shares sum to the capacity when any user is
// eligible (never above it); ineligible users get 0.
EcuAllocation allocate_ecu(const std::vector<Placement>& placements,
                           const std::vector<double>& decode_demand_bits,
                           const std::vector<double>& render_demand_bits,
                           const DeviceSpeeds& speeds);

// Decode/render/transmit times for one GoP at the given placement. The
// transmission integrates the user's trace starting after whatever compute
// the ECU performs first (full ECU: decode+render; ECU decode: decode;
// headset: nothing).
GopTimings gop_timings(const media::QualityLadder& ladder, const media::MediaFactors& factors,
                       int gop, int level, Placement placement, const DeviceSpeeds& speeds,
                       double ecu_decode_share_bps, double ecu_render_share_bps,
                       const net::ThroughputTrace& trace, double request_time_s);

// One step of the playback-buffer recursion. Fills wait_s and rebuffer_s in
// the returned timings; advances buffer, clock and GoP index.
struct AdvanceResult {
  PlaybackState state;
  GopTimings timings;
};
AdvanceResult advance_buffer(const PlaybackState& state, const GopTimings& timings,
                             double gop_duration_s);

}  // namespace edge360::pipeline
