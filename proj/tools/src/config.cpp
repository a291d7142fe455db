#include "renyiqkd/cli/config.hpp"

#include <cmath>
#include <limits>

namespace renyiqkd::cli {

std::string command_name(Command c) {
  switch (c) {
    case Command::Rate: return "rate";
    case Command::SweepAlpha: return "sweep-alpha";
    case Command::Heatmap: return "heatmap";
    case Command::RateVsM: return "rate-vs-m";
    case Command::MaxQber: return "max-qber";
  }
  return "unknown";
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void require_qber(double p, const std::string& field, bool open) {
  const bool ok = open ? (p > 0.0 && p < 0.5) : (p >= 0.0 && p <= 0.5);
  require(ok, field + " = " + std::to_string(p) + (open ? " outside (0, 1/2)" : " outside [0, 1/2]"));
}

}  // namespace

void RunConfig::validate() const {
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(tol > 0.0, "tol must be positive");
  require(max_iter >= 0, "max-iter must be non-negative");
  require(jobs >= 1, "jobs must be at least 1");
  require(!alpha_grid.empty(), "alpha-grid is empty");
  for (double a : alpha_grid) require(a > 1.0 && a <= 2.0, "alpha-grid entries must lie in (1, 2]");

  switch (command) {
    case Command::Rate:
      require(p.has_value(), "rate requires --p");
      require(m.has_value(), "rate requires --m");
      require_qber(*p, "p", false);
      require(*m >= 1, "m must be a positive integer");
      break;
    case Command::SweepAlpha:
    case Command::Heatmap:
      require(!p_grid.empty(), "p-grid is empty");
      for (double v : p_grid) require_qber(v, "p-grid entry", true);
      break;
    case Command::RateVsM:
      require(p.has_value(), "rate-vs-m requires --p");
      require_qber(*p, "p", false);
      require(!m_grid.empty(), "m-grid is empty");
      for (auto v : m_grid) require(v >= 1, "m-grid entries must be positive");
      break;
    case Command::MaxQber:
      require(!m_grid.empty(), "m-grid is empty");
      for (auto v : m_grid) require(v >= 1000, "max-qber needs m-grid entries of at least 1000");
      break;
  }
}

std::vector<double> default_p_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 26; ++i) grid.push_back(0.005 * i);
  return grid;
}

std::vector<std::int64_t> default_m_grid() {
  std::vector<std::int64_t> grid;
  for (int k = 0; k <= 36; ++k) grid.push_back(std::llround(std::pow(10.0, 3.0 + k / 3.0)));
  return grid;
}

std::int64_t parse_block_length(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("block length '" + text + "' is not a number");
  }
  if (used != text.size()) throw ConfigError("block length '" + text + "' is not a number");
  if (!(v >= 1.0 && v < 9.0e18) || v != std::floor(v)) {
    throw ConfigError("block length '" + text + "' is not a positive integer");
  }
  if (text.find_first_not_of("0123456789") == std::string::npos) return std::stoll(text);
  return static_cast<std::int64_t>(v);
}

}  // namespace renyiqkd::cli
