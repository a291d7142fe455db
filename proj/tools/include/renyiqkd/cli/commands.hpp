#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "renyiqkd/cli/config.hpp"
#include "renyiqkd/keyrate.hpp"

namespace renyiqkd::cli {

struct ResultRecord {
  double p = 0.0;
  std::int64_t m = 0;
  double epsilon = 0.0;
  double rate = 0.0;  // signed certified lower bound
  double q_star = 0.0;
  double alpha_star = 0.0;
  double certificate_gap = 0.0;
  double wall_time = 0.0;
  int iterations = 0;
};

/// A comma-separated result with one header line, plus the certificate gap
/// behind each row for the manifest.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<double> certificate_gaps;
};

/// 9 significant digits.
std::string format_real(double v);

void write_csv(std::ostream& os, const Table& table);

/// Runs f(0), ..., f(n-1) on up to jobs threads; rethrows the first exception.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f);

ResultRecord run_rate(const RunConfig& cfg, const KeyRateEngine& engine);
Table run_sweep_alpha(const RunConfig& cfg, const KeyRateEngine& engine);
Table run_heatmap(const RunConfig& cfg, const KeyRateEngine& engine);
Table run_rate_vs_m(const RunConfig& cfg, const KeyRateEngine& engine);
Table run_max_qber(const RunConfig& cfg, const KeyRateEngine& engine);

Table record_table(const ResultRecord& r);

/// "0.1.0+<git describe>" as configured at build time.
std::string version_string();

/// Parses argv, runs the selected command and returns the process exit code.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace renyiqkd::cli
