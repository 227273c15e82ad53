#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace edge360::media {

// Where a GoP gets decoded and rendered. Order matters: it is the index of
// the one-hot computation-distribution action and of the placement head.
enum class Placement : int {
  kEcuFull = 0,    // decode & render on the edge unit
  kEcuDecode = 1,  // decode on the edge unit, render on the headset
  kHeadset = 2,    // decode & render on the headset
};

const char* placement_name(Placement p);
Placement placement_from_name(const std::string& name);

// Per-GoP, per-level rate/quality table for one video. Entries are for the
// viewport-masked payload: bits of the compressed GoP and its viewport PSNR.
struct QualityLadder {
  int gop_count = 0;    // M
  int level_count = 0;  // L
  std::vector<double> compressed_bits;  // M*L row-major, strictly increasing per row
  std::vector<double> psnr_db;          // M*L row-major, strictly increasing per row
  double gop_duration_s = 1.0;

  double bits(int gop, int level) const { return compressed_bits[gop * level_count + level]; }
  double psnr(int gop, int level) const { return psnr_db[gop * level_count + level]; }
};

struct MediaFactors {
  double alpha = 2.1;  // rendered-size expansion, >= 2
  double beta = 0.6;   // compression reduction, in (0,1)
};

struct VideoGenSpec {
  int gop_count = 0;
  int level_count = 0;
  double base_bitrate_bits = 0.0;  // level-0 GoP size before jitter
  double level_growth = 1.5;       // per-level size ratio, > 1
  double psnr_base_db = 48.0;
  double psnr_step_db = 2.0;
  double temporal_jitter = 0.0;    // relative std-dev of the per-GoP factor, [0, 0.5]
  std::uint64_t seed = 0;
};

void validate(const QualityLadder& ladder);
void validate(const MediaFactors& factors);
void validate(const VideoGenSpec& spec);

// Bits that actually cross the link for one GoP at the given placement:
// compressed (headset), decoded d/beta (ECU decode), rendered alpha*d/beta (full ECU).
double payload_bits(const QualityLadder& ladder, const MediaFactors& factors, int gop, int level,
                    Placement placement);

// Decode work is the compressed size; render work is the decoded size.
double decode_complexity_bits(const QualityLadder& ladder, int gop, int level);
double render_complexity_bits(const QualityLadder& ladder, const MediaFactors& factors, int gop,
                              int level);

// 10*log10(255^2 / mse). Throws std::domain_error for mse <= 0.
double psnr_from_mse(double mse);

// Synthetic ladder, deterministic per spec.seed.
QualityLadder generate_video(const VideoGenSpec& spec);

// CSV `gop,level,bits,psnr_db` + JSON sidecar (same path, .json extension)
// carrying gop_count, level_count, gop_duration_s, alpha, beta. Values
// round-trip bit-exactly.
void save_video(const QualityLadder& ladder, const MediaFactors& factors,
                const std::string& csv_path);

struct VideoFile {
  QualityLadder ladder;
  MediaFactors factors;
};
VideoFile load_video(const std::string& csv_path);

}  // namespace edge360::media
