#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edge360::util {

// Parse/format errors carry the offending file line when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// splitmix64; used to derive independent component seeds from one root seed.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over bytes, for config/shape hashes.
std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic child seed for a named component (+ optional index).
std::uint64_t split_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

// Shortest round-trip decimal form of a double (via std::to_chars).
std::string format_double(double v);

// Strict double parse of an entire token. Throws std::invalid_argument.
double parse_double(std::string_view token);

std::vector<std::string> split_csv_line(const std::string& line);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n-1); 0 when n < 2
  std::size_t n = 0;
};
MeanStd mean_std(const std::vector<double>& xs);

// One-sided paired t statistic for H1: mean(a - b) > 0.
// Returns the t value; degrees of freedom = n - 1.
double paired_t_statistic(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace edge360::util
