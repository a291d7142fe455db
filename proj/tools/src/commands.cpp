#include "renyiqkd/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "renyiqkd/cli/cache.hpp"

#ifndef RENYIQKD_VERSION_STRING
#define RENYIQKD_VERSION_STRING "0.1.0"
#endif

namespace renyiqkd::cli {

namespace {

constexpr std::int64_t kAsymptoticProxy = 1000000000000000LL;

std::string join(const std::vector<std::string>& items, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

template <class T>
std::vector<std::string> formatted(const std::vector<T>& values) {
  std::vector<std::string> out;
  for (const T& v : values) {
    if constexpr (std::is_floating_point_v<T>) {
      out.push_back(format_real(v));
    } else {
      out.push_back(std::to_string(v));
    }
  }
  return out;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double clamp_rate(double r) { return std::max(r, 0.0); }

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& path, const RunConfig& cfg, const KeyRateEngine& engine,
                    const Table& table, std::chrono::system_clock::time_point started,
                    double wall_time) {
  std::ofstream os(path);
  const EngineOptions& o = engine.options();
  os << "command = " << command_name(cfg.command) << '\n'
     << "version = " << version_string() << '\n'
     << "output = " << cfg.output_path << '\n'
     << "epsilon = " << format_real(cfg.epsilon) << '\n'
     << "tol = " << format_real(o.solver.tol) << '\n'
     << "max_iter = " << o.solver.max_iter << '\n'
     << "random_restarts = " << o.solver.random_restarts << '\n'
     << "seed = " << o.solver.seed << '\n'
     << "q_tol = " << format_real(o.q_tol) << '\n'
     << "p_tol = " << format_real(o.p_tol) << '\n'
     << "positive_threshold = " << format_real(o.positive_threshold) << '\n'
     << "alpha_grid = " << join(formatted(cfg.alpha_grid)) << '\n'
     << "p_grid = " << join(formatted(cfg.p_grid)) << '\n'
     << "m_grid = " << join(formatted(cfg.m_grid)) << '\n'
     << "p = " << (cfg.p ? format_real(*cfg.p) : "") << '\n'
     << "m = " << (cfg.m ? std::to_string(*cfg.m) : "") << '\n'
     << "jobs = " << cfg.jobs << '\n'
     << "cache = " << cfg.cache_path << '\n'
     << "rows = " << table.rows.size() << '\n'
     << "certificate_gaps = " << join(formatted(table.certificate_gaps)) << '\n'
     << "started_at = " << utc_timestamp(started) << '\n'
     << "wall_time_seconds = " << format_real(wall_time) << '\n';
  if (!os) throw ConfigError("cannot write manifest " + path);
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_csv(std::ostream& os, const Table& table) {
  os << join(table.header) << '\n';
  for (const auto& row : table.rows) os << join(row) << '\n';
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ResultRecord run_rate(const RunConfig& cfg, const KeyRateEngine& engine) {
  const auto start = std::chrono::steady_clock::now();
  const RatePoint r = engine.optimize_alpha_q(*cfg.m, *cfg.p, cfg.alpha_grid, true);
  ResultRecord out;
  out.p = *cfg.p;
  out.m = *cfg.m;
  out.epsilon = engine.options().epsilon;
  out.rate = r.rate;
  out.q_star = r.q_star;
  out.alpha_star = r.alpha_star;
  out.certificate_gap = r.certificate_gap;
  out.iterations = r.iterations;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Table record_table(const ResultRecord& r) {
  Table t;
  t.header = {"p", "m", "epsilon", "rate", "q_star", "alpha_star", "certificate_gap", "iterations"};
  t.rows.push_back({format_real(r.p), std::to_string(r.m), format_real(r.epsilon),
                    format_real(r.rate), format_real(r.q_star), format_real(r.alpha_star),
                    format_real(r.certificate_gap), std::to_string(r.iterations)});
  t.certificate_gaps.push_back(r.certificate_gap);
  return t;
}

Table run_sweep_alpha(const RunConfig& cfg, const KeyRateEngine& engine) {
  const std::vector<double> alphas = sorted_unique(cfg.alpha_grid);
  std::vector<DeltaR> results(alphas.size());
  parallel_for(alphas.size(), cfg.jobs,
               [&](std::size_t i) { results[i] = engine.delta_r(alphas[i], cfg.p_grid); });
  Table t;
  t.header = {"alpha", "delta_r", "p_at_max"};
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    t.rows.push_back({format_real(alphas[i]), format_real(results[i].delta),
                      format_real(results[i].p_at_max)});
    t.certificate_gaps.push_back(results[i].certificate_gap);
  }
  return t;
}

Table run_heatmap(const RunConfig& cfg, const KeyRateEngine& engine) {
  const std::vector<double> alphas = sorted_unique(cfg.alpha_grid);
  const std::vector<double> ps = sorted_unique(cfg.p_grid);
  const std::int64_t m = cfg.m.value_or(kAsymptoticProxy);
  std::vector<RatePoint> cells(alphas.size() * ps.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    cells[i] = engine.optimize_q(m, alphas[i / ps.size()], ps[i % ps.size()]);
  });
  Table t;
  t.header = {"alpha", "p", "q_star", "rate", "forbidden"};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const RatePoint& c = cells[i];
    const bool forbidden = c.rate <= 0.0;
    t.rows.push_back({format_real(alphas[i / ps.size()]), format_real(ps[i % ps.size()]),
                      forbidden ? std::string() : format_real(c.q_star),
                      format_real(clamp_rate(c.rate)), forbidden ? "1" : "0"});
    t.certificate_gaps.push_back(c.certificate_gap);
  }
  return t;
}

Table run_rate_vs_m(const RunConfig& cfg, const KeyRateEngine& engine) {
  const std::vector<std::int64_t> ms = sorted_unique(cfg.m_grid);
  std::vector<RatePoint> points(2 * ms.size());
  parallel_for(points.size(), cfg.jobs, [&](std::size_t i) {
    points[i] = engine.optimize_alpha_q(ms[i / 2], *cfg.p, cfg.alpha_grid, i % 2 == 1);
  });
  Table t;
  t.header = {"m", "rate_q0", "rate_qstar", "q_star", "alpha_star"};
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const RatePoint& q0 = points[2 * k];
    const RatePoint& qs = points[2 * k + 1];
    t.rows.push_back({std::to_string(ms[k]), format_real(clamp_rate(q0.rate)),
                      format_real(clamp_rate(qs.rate)), format_real(qs.q_star),
                      format_real(qs.alpha_star)});
    t.certificate_gaps.push_back(std::max(q0.certificate_gap, qs.certificate_gap));
  }
  return t;
}

Table run_max_qber(const RunConfig& cfg, const KeyRateEngine& engine) {
  const std::vector<std::int64_t> ms = sorted_unique(cfg.m_grid);
  std::vector<QberThreshold> thresholds(2 * ms.size());
  parallel_for(thresholds.size(), cfg.jobs, [&](std::size_t i) {
    thresholds[i] = engine.max_tolerable_qber(ms[i / 2], i % 2 == 1, cfg.alpha_grid);
  });
  Table t;
  t.header = {"m", "pmax_q0", "pmax_qstar"};
  for (std::size_t k = 0; k < ms.size(); ++k) {
    t.rows.push_back({std::to_string(ms[k]), format_real(thresholds[2 * k].p_max),
                      format_real(thresholds[2 * k + 1].p_max)});
    t.certificate_gaps.push_back(
        std::max(thresholds[2 * k].certificate_gap, thresholds[2 * k + 1].certificate_gap));
  }
  return t;
}

std::string version_string() { return RENYIQKD_VERSION_STRING; }

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified finite-size BB84 key rates with trusted preprocessing noise", "renyi-qkd"};
  app.set_version_flag("--version", version_string());
  app.set_config("--config", "", "Key-value configuration file; flags override its entries");
  app.require_subcommand(1);

  RunConfig cfg;
  std::optional<double> p;
  std::string m_text;
  std::vector<std::string> m_grid_text;
  const char* env_cache = std::getenv("RENYI_QKD_CACHE");
  cfg.cache_path = env_cache ? env_cache : "";
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  app.add_option("--epsilon", cfg.epsilon, "Security parameter")->capture_default_str();
  app.add_option("--p", p, "QBER");
  app.add_option("--m", m_text, "Sifted block length (integer, 1e15 accepted)");
  app.add_option("--alpha-grid", cfg.alpha_grid, "Comma-separated Renyi orders")->delimiter(',');
  app.add_option("--p-grid", cfg.p_grid, "Comma-separated QBER values")->delimiter(',');
  app.add_option("--m-grid", m_grid_text, "Comma-separated block lengths")->delimiter(',');
  app.add_option("--tol", cfg.tol, "Frank-Wolfe gap tolerance in bits")->capture_default_str();
  app.add_option("--max-iter", cfg.max_iter, "Frank-Wolfe iteration budget")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Worker threads");
  app.add_option("--out", cfg.output_path, "Output CSV path (standard output if omitted)");
  app.add_option("--cache", cfg.cache_path, "Result cache directory (default $RENYI_QKD_CACHE)");
  app.add_option("--seed", cfg.seed, "Seed for random restarts")->capture_default_str();

  const std::pair<Command, const char*> commands[] = {
      {Command::Rate, "Single-point rate optimized over q and alpha"},
      {Command::SweepAlpha, "Largest rate gain from trusted noise per alpha"},
      {Command::Heatmap, "Optimal trusted noise over (alpha, p)"},
      {Command::RateVsM, "Rates with and without trusted noise versus block length"},
      {Command::MaxQber, "Maximum tolerable QBER versus block length"}};
  for (const auto& [c, help] : commands) {
    app.add_subcommand(command_name(c), help)->fallthrough()->callback([&cfg, c = c] {
      cfg.command = c;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  std::unique_ptr<DiskCache> cache;
  std::unique_ptr<KeyRateEngine> engine;
  try {
    cfg.p = p;
    if (!m_text.empty()) cfg.m = parse_block_length(m_text);
    for (const auto& s : m_grid_text) cfg.m_grid.push_back(parse_block_length(s));
    if (cfg.alpha_grid.empty()) cfg.alpha_grid = default_alpha_grid();
    if (cfg.p_grid.empty()) cfg.p_grid = default_p_grid();
    if (cfg.m_grid.empty()) cfg.m_grid = default_m_grid();
    cfg.validate();
    if (!cfg.cache_path.empty()) {
      cache = std::make_unique<DiskCache>(cfg.cache_path,
                                          [&err](const std::string& w) { err << "warning: " << w << '\n'; });
    }
    EngineOptions opts;
    opts.epsilon = cfg.epsilon;
    opts.solver.tol = cfg.tol;
    opts.solver.max_iter = cfg.max_iter;
    opts.solver.seed = cfg.seed;
    engine = std::make_unique<KeyRateEngine>(opts, cache.get());
  } catch (const std::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  Table table;
  try {
    switch (cfg.command) {
      case Command::Rate: table = record_table(run_rate(cfg, *engine)); break;
      case Command::SweepAlpha: table = run_sweep_alpha(cfg, *engine); break;
      case Command::Heatmap: table = run_heatmap(cfg, *engine); break;
      case Command::RateVsM: table = run_rate_vs_m(cfg, *engine); break;
      case Command::MaxQber: table = run_max_qber(cfg, *engine); break;
    }
  } catch (const InvalidInput& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    if (cfg.output_path.empty()) {
      write_csv(out, table);
    } else {
      {
        std::ofstream os(cfg.output_path);
        write_csv(os, table);
        if (!os) throw ConfigError("cannot write " + cfg.output_path);
      }
      write_manifest(cfg.output_path + ".manifest", cfg, *engine, table, started, wall);
      if (cfg.command == Command::Rate) write_csv(out, table);
    }
  } catch (const std::exception& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitSuccess;
}

}  // namespace renyiqkd::cli
