#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace renyiqkd::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Rate, SweepAlpha, Heatmap, RateVsM, MaxQber };

std::string command_name(Command c);

struct RunConfig {
  Command command = Command::Rate;
  double epsilon = 1e-10;
  std::vector<double> alpha_grid;
  std::vector<double> p_grid;
  std::vector<std::int64_t> m_grid;
  std::optional<double> p;
  std::optional<std::int64_t> m;
  double tol = 1e-6;
  int max_iter = 2000;
  int jobs = 1;
  std::string output_path;  // empty: standard output
  std::string cache_path;   // empty: no disk cache
  std::uint64_t seed = 20240917;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// 0.005, 0.010, ..., 0.130
std::vector<double> default_p_grid();

/// Logarithmically spaced from 1e3 to 1e15, three points per decade.
std::vector<std::int64_t> default_m_grid();

/// Parses a block length; accepts integers and exact scientific notation such as 1e15.
std::int64_t parse_block_length(const std::string& text);

}  // namespace renyiqkd::cli
