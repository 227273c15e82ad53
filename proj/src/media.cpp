#include "edge360/media.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "edge360/util.hpp"
#include "json.hpp"

namespace edge360::media {

const char* placement_name(Placement p) {
  switch (p) {
    case Placement::kEcuFull:
      return "ecu_full";
    case Placement::kEcuDecode:
      return "ecu_decode";
    case Placement::kHeadset:
      return "headset";
  }
  return "?";
}

Placement placement_from_name(const std::string& name) {
  if (name == "ecu_full") return Placement::kEcuFull;
  if (name == "ecu_decode") return Placement::kEcuDecode;
  if (name == "headset") return Placement::kHeadset;
  throw std::invalid_argument("unknown placement '" + name + "'");
}

void validate(const QualityLadder& ladder) {
  if (ladder.gop_count < 1 || ladder.level_count < 1) {
    throw std::invalid_argument("ladder needs at least one GoP and one level");
  }
  const std::size_t n = static_cast<std::size_t>(ladder.gop_count) * ladder.level_count;
  if (ladder.compressed_bits.size() != n || ladder.psnr_db.size() != n) {
    throw std::invalid_argument("ladder table size does not match gop_count*level_count");
  }
  if (!(ladder.gop_duration_s > 0.0)) throw std::invalid_argument("gop_duration_s must be > 0");
  for (int m = 0; m < ladder.gop_count; ++m) {
    for (int l = 0; l < ladder.level_count; ++l) {
      double b = ladder.bits(m, l);
      double q = ladder.psnr(m, l);
      if (!std::isfinite(b) || b <= 0.0 || !std::isfinite(q) || q <= 0.0) {
        throw std::invalid_argument("ladder entries must be finite and positive");
      }
      if (l > 0 && !(b > ladder.bits(m, l - 1) && q > ladder.psnr(m, l - 1))) {
        throw std::invalid_argument("ladder bits/psnr must be strictly increasing per level");
      }
    }
  }
}

void validate(const MediaFactors& factors) {
  if (!(factors.alpha >= 2.0)) throw std::invalid_argument("alpha must be >= 2");
  if (!(factors.beta > 0.0 && factors.beta < 1.0)) {
    throw std::invalid_argument("beta must be in (0,1)");
  }
}

void validate(const VideoGenSpec& spec) {
  if (spec.gop_count < 1 || spec.level_count < 1) {
    throw std::invalid_argument("video spec needs gop_count >= 1 and level_count >= 1");
  }
  if (!(spec.base_bitrate_bits > 0.0)) throw std::invalid_argument("base_bitrate_bits must be > 0");
  if (!(spec.level_growth > 1.0)) throw std::invalid_argument("level_growth must be > 1");
  if (!(spec.psnr_base_db > 0.0)) throw std::invalid_argument("psnr_base_db must be > 0");
  if (!(spec.psnr_step_db > 0.0)) throw std::invalid_argument("psnr_step_db must be > 0");
  if (!(spec.temporal_jitter >= 0.0 && spec.temporal_jitter <= 0.5)) {
    throw std::invalid_argument("temporal_jitter must be in [0, 0.5]");
  }
}

static void check_indices(const QualityLadder& ladder, int gop, int level) {
  if (gop < 0 || gop >= ladder.gop_count || level < 0 || level >= ladder.level_count) {
    throw std::out_of_range("gop/level index out of range");
  }
}

double payload_bits(const QualityLadder& ladder, const MediaFactors& factors, int gop, int level,
                    Placement placement) {
  check_indices(ladder, gop, level);
  const double d = ladder.bits(gop, level);
  switch (placement) {
    case Placement::kHeadset:
      return d;
    case Placement::kEcuDecode:
      return d / factors.beta;
    case Placement::kEcuFull:
      return factors.alpha * d / factors.beta;
  }
  throw std::invalid_argument("bad placement");
}

double decode_complexity_bits(const QualityLadder& ladder, int gop, int level) {
  check_indices(ladder, gop, level);
  return ladder.bits(gop, level);
}

double render_complexity_bits(const QualityLadder& ladder, const MediaFactors& factors, int gop,
                              int level) {
  check_indices(ladder, gop, level);
  return ladder.bits(gop, level) / factors.beta;
}

double psnr_from_mse(double mse) {
  if (!(mse > 0.0)) throw std::domain_error("psnr_from_mse: mse must be > 0");
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

QualityLadder generate_video(const VideoGenSpec& spec) {
  validate(spec);
  QualityLadder ladder;
  ladder.gop_count = spec.gop_count;
  ladder.level_count = spec.level_count;
  ladder.gop_duration_s = 1.0;
  ladder.compressed_bits.resize(static_cast<std::size_t>(spec.gop_count) * spec.level_count);
  ladder.psnr_db.resize(ladder.compressed_bits.size());

  std::vector<double> level_mult(spec.level_count, 1.0);
  for (int l = 1; l < spec.level_count; ++l) level_mult[l] = level_mult[l - 1] * spec.level_growth;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int m = 0; m < spec.gop_count; ++m) {
    // One size factor and one PSNR offset per GoP; constant across levels so
    // per-row strict monotonicity survives any jitter magnitude.
    double size_factor = std::max(0.05, 1.0 + spec.temporal_jitter * unit(rng));
    double psnr_offset = spec.temporal_jitter * spec.psnr_step_db * unit(rng);
    psnr_offset = std::max(psnr_offset, -0.5 * spec.psnr_base_db);
    for (int l = 0; l < spec.level_count; ++l) {
      ladder.compressed_bits[m * spec.level_count + l] =
          spec.base_bitrate_bits * level_mult[l] * size_factor;
      ladder.psnr_db[m * spec.level_count + l] =
          spec.psnr_base_db + l * spec.psnr_step_db + psnr_offset;
    }
  }
  validate(ladder);
  return ladder;
}

static std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void save_video(const QualityLadder& ladder, const MediaFactors& factors,
                const std::string& csv_path) {
  validate(ladder);
  validate(factors);
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << "gop,level,bits,psnr_db\n";
  for (int m = 0; m < ladder.gop_count; ++m) {
    for (int l = 0; l < ladder.level_count; ++l) {
      out << m << ',' << l << ',' << util::format_double(ladder.bits(m, l)) << ','
          << util::format_double(ladder.psnr(m, l)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + csv_path);

  nlohmann::json meta;
  meta["gop_count"] = ladder.gop_count;
  meta["level_count"] = ladder.level_count;
  meta["gop_duration_s"] = ladder.gop_duration_s;
  meta["alpha"] = factors.alpha;
  meta["beta"] = factors.beta;
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw std::runtime_error("cannot write " + sidecar_path(csv_path));
  side << meta.dump(2) << '\n';
}

VideoFile load_video(const std::string& csv_path) {
  nlohmann::json meta;
  {
    std::ifstream side(sidecar_path(csv_path));
    if (!side) throw std::runtime_error("missing sidecar " + sidecar_path(csv_path));
    side >> meta;
  }
  VideoFile file;
  file.ladder.gop_count = meta.at("gop_count").get<int>();
  file.ladder.level_count = meta.at("level_count").get<int>();
  file.ladder.gop_duration_s = meta.at("gop_duration_s").get<double>();
  file.factors.alpha = meta.at("alpha").get<double>();
  file.factors.beta = meta.at("beta").get<double>();
  const std::size_t n =
      static_cast<std::size_t>(file.ladder.gop_count) * file.ladder.level_count;
  file.ladder.compressed_bits.resize(n);
  file.ladder.psnr_db.resize(n);

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw util::ParseError(csv_path, 1, "empty file");
  ++line_no;
  if (util::split_csv_line(line) != std::vector<std::string>{"gop", "level", "bits", "psnr_db"}) {
    throw util::ParseError(csv_path, 1, "expected header gop,level,bits,psnr_db");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = util::split_csv_line(line);
    if (fields.size() != 4) throw util::ParseError(csv_path, line_no, "expected 4 fields");
    try {
      int m = static_cast<int>(util::parse_double(fields[0]));
      int l = static_cast<int>(util::parse_double(fields[1]));
      if (row >= n || m != static_cast<int>(row) / file.ladder.level_count ||
          l != static_cast<int>(row) % file.ladder.level_count) {
        throw std::invalid_argument("rows out of order vs. sidecar dimensions");
      }
      file.ladder.compressed_bits[row] = util::parse_double(fields[2]);
      file.ladder.psnr_db[row] = util::parse_double(fields[3]);
    } catch (const std::invalid_argument& e) {
      throw util::ParseError(csv_path, line_no, e.what());
    }
    ++row;
  }
  if (row != n) throw util::ParseError(csv_path, line_no, "row count does not match sidecar");
  validate(file.ladder);
  validate(file.factors);
  return file;
}

}  // namespace edge360::media
