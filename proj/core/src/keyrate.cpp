#include "renyiqkd/keyrate.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <string>

namespace renyiqkd {

double finite_size_correction(double alpha, double epsilon) {
  if (!(alpha > 1.0)) throw InvalidInput("finite_size_correction: alpha must exceed 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw InvalidInput("finite_size_correction: epsilon must lie in (0, 1]");
  }
  return alpha / (alpha - 1.0) * std::log2(1.0 / epsilon) - 2.0;
}

const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> grid{1.0005, 1.001, 1.002, 1.005, 1.01, 1.02, 1.05, 1.1,
                                        1.15,   1.2,   1.3,   1.4,   1.5,  1.75, 2.0};
  return grid;
}

SolverOptions EngineOptions::default_solver_options() {
  SolverOptions s;
  s.random_restarts = 0;
  return s;
}

namespace {

void check_alpha_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInput("alpha grid is empty");
  for (double a : grid) {
    if (!(a > 1.0 && a <= 2.0)) throw InvalidInput("alpha grid entries must lie in (1, 2]");
  }
}

// Upper bound on any certified rate. The divergence is at most 1 bit, and at
// q = 0 at most the relative-entropy value 1 - h2(p); h2(s) >= h2(p) throughout.
double rate_ceiling(double p, bool with_noise) {
  const double h = binary_entropy(p);
  return with_noise ? 1.0 - h : 1.0 - 2.0 * h;
}

}  // namespace

KeyRateEngine::KeyRateEngine(EngineOptions opts, BoundStore* store)
    : opts_(std::move(opts)), store_(store) {
  if (!(opts_.solver.tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
  if (opts_.solver.max_iter < 0) throw InvalidInput("max_iter must be non-negative");
  if (!(opts_.q_tol > 0.0) || !(opts_.p_tol > 0.0)) throw InvalidInput("tolerances must be positive");
  finite_size_correction(2.0, opts_.epsilon);
}

DivergenceBound KeyRateEngine::divergence_bound(double p, double q, double alpha) const {
  const BoundKey key{p, q, alpha, opts_.solver.tol, opts_.solver.max_iter,
                     opts_.solver.random_restarts, opts_.solver.seed};
  {
    std::shared_lock lock(bounds_mutex_);
    if (auto it = bounds_.find(key); it != bounds_.end()) return it->second;
  }
  std::optional<DivergenceBound> found = store_ ? store_->lookup(key) : std::nullopt;
  if (!found) {
    ProtocolParams params;
    params.p = p;
    params.q = q;
    params.alpha = alpha;
    params.validate();
    const auto start = std::chrono::steady_clock::now();
    const OptimizationResult r = frank_wolfe(params, opts_.solver);
    DivergenceBound b;
    b.upper = r.upper_value;
    b.lower = r.lower_bound;
    b.gap = r.gap;
    b.iterations = r.iterations;
    b.converged = r.converged;
    b.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (store_) store_->store(key, b);
    found = b;
  }
  std::unique_lock lock(bounds_mutex_);
  bounds_.emplace(key, *found);
  return *found;
}

double KeyRateEngine::asymptotic_rate(double p, double q, double alpha) const {
  return divergence_bound(p, q, alpha).lower - binary_entropy(effective_qber(p, q));
}

RatePoint KeyRateEngine::assemble(double p, double q, double alpha, std::int64_t m) const {
  RatePoint out;
  out.params.p = p;
  out.params.q = q;
  out.params.alpha = alpha;
  out.params.epsilon = opts_.epsilon;
  out.params.m = m;
  out.params.validate();
  const DivergenceBound b = divergence_bound(p, q, alpha);
  out.rate = b.lower - binary_entropy(effective_qber(p, q)) -
             finite_size_correction(alpha, opts_.epsilon) / static_cast<double>(m);
  out.q_star = q;
  out.alpha_star = alpha;
  out.certificate_gap = b.gap;
  out.iterations = b.iterations;
  return out;
}

RatePoint KeyRateEngine::key_rate(const ProtocolParams& params) const {
  params.validate();
  RatePoint out = assemble(params.p, params.q, params.alpha, params.m);
  out.params.epsilon = params.epsilon;
  if (params.epsilon != opts_.epsilon) {
    out.rate += (finite_size_correction(params.alpha, opts_.epsilon) -
                 finite_size_correction(params.alpha, params.epsilon)) /
                static_cast<double>(params.m);
  }
  return out;
}

std::pair<double, double> KeyRateEngine::best_q(double p, double alpha) const {
  const auto memo_key = std::make_pair(p, alpha);
  {
    std::shared_lock lock(q_mutex_);
    if (auto it = q_memo_.find(memo_key); it != q_memo_.end()) return it->second;
  }
  const auto f = [&](double q) { return asymptotic_rate(p, q, alpha); };

  constexpr std::array<double, 6> scan{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double best_x = 0.0;
  double best_f = f(0.0);
  const double at_zero = best_f;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const double v = f(scan[i]);
    if (v > best_f) {
      best_f = v;
      best_x = scan[i];
    }
  }
  auto consider = [&](double x, double v) {
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(0.0, best_x - 0.1);
  double b = std::min(0.5, best_x + 0.1);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > opts_.q_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }

  if (best_f <= opts_.positive_threshold || best_f - at_zero <= opts_.solver.tol) {
    best_x = 0.0;
    best_f = at_zero;
  }
  const auto result = std::make_pair(best_x, best_f);
  std::unique_lock lock(q_mutex_);
  q_memo_.emplace(memo_key, result);
  return result;
}

RatePoint KeyRateEngine::optimize_q(std::int64_t m, double alpha, double p) const {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidInput("optimize_q: p must lie in [0, 1/2]");
  finite_size_correction(alpha, opts_.epsilon);
  const double q_star = best_q(p, alpha).first;
  return assemble(p, q_star, alpha, m);
}

RatePoint KeyRateEngine::optimize_alpha_q(std::int64_t m, double p,
                                          const std::vector<double>& alpha_grid,
                                          bool with_noise) const {
  check_alpha_grid(alpha_grid);
  std::optional<RatePoint> best;
  for (double alpha : alpha_grid) {
    RatePoint r = with_noise ? optimize_q(m, alpha, p) : assemble(p, 0.0, alpha, m);
    if (!best || r.rate > best->rate) best = r;
  }
  return *best;
}

DeltaR KeyRateEngine::delta_r(double alpha, const std::vector<double>& p_grid) const {
  finite_size_correction(alpha, opts_.epsilon);
  DeltaR out;
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 0.5)) throw InvalidInput("delta_r: p grid entries must lie in (0, 1/2)");
    const auto [q_star, best] = best_q(p, alpha);
    const double with_noise = std::max(best, 0.0);
    const double without = std::max(asymptotic_rate(p, 0.0, alpha), 0.0);
    out.certificate_gap = std::max({out.certificate_gap, divergence_bound(p, q_star, alpha).gap,
                                    divergence_bound(p, 0.0, alpha).gap});
    const double diff = std::abs(with_noise - without);
    if (diff > out.delta) {
      out.delta = diff;
      out.p_at_max = p;
    }
  }
  return out;
}

std::optional<double> KeyRateEngine::positive_at(std::int64_t m, double p, bool with_noise,
                                                 const std::vector<double>& alpha_grid) const {
  const double ceiling = rate_ceiling(p, with_noise);
  for (double alpha : alpha_grid) {
    const double penalty = finite_size_correction(alpha, opts_.epsilon) / static_cast<double>(m);
    if (ceiling - penalty <= opts_.positive_threshold) continue;
    const double q = with_noise ? best_q(p, alpha).first : 0.0;
    const DivergenceBound b = divergence_bound(p, q, alpha);
    const double r = b.lower - binary_entropy(effective_qber(p, q));
    if (r - penalty > opts_.positive_threshold) return b.gap;
  }
  return std::nullopt;
}

QberThreshold KeyRateEngine::max_tolerable_qber(std::int64_t m, bool with_noise,
                                                const std::vector<double>& alpha_grid) const {
  if (m < 1000) throw InvalidInput("max_tolerable_qber: m must be at least 1000");
  check_alpha_grid(alpha_grid);
  QberThreshold out;
  const auto at_zero = positive_at(m, 0.0, with_noise, alpha_grid);
  if (!at_zero) return out;
  out.found = true;
  out.certificate_gap = *at_zero;
  // Dyadic bisection on [0, 1/2]: midpoints coincide across m, so bounds are reused.
  double hi = 0.5;
  while (hi - out.p_max > opts_.p_tol) {
    const double mid = 0.5 * (out.p_max + hi);
    if (const auto gap = positive_at(m, mid, with_noise, alpha_grid)) {
      out.p_max = mid;
      out.certificate_gap = *gap;
    } else {
      hi = mid;
    }
  }
  return out;
}

void MinEntropyParams::validate() const {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidInput("MinEntropyParams: p must lie in [0, 1/2]");
  if (!(q >= 0.0 && q <= 0.5)) throw InvalidInput("MinEntropyParams: q must lie in [0, 1/2]");
  if (!(gamma >= 1.0)) throw InvalidInput("MinEntropyParams: gamma must be at least 1");
}

double guessing_probability(double p, double q) {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidInput("guessing_probability: p must lie in [0, 1/2]");
  if (!(q >= 0.0 && q <= 0.5)) throw InvalidInput("guessing_probability: q must lie in [0, 1/2]");
  return 0.5 + (1.0 - 2.0 * q) * std::sqrt(p * (1.0 - p));
}

double min_entropy_rate(const MinEntropyParams& mp) {
  mp.validate();
  return -std::log2(guessing_probability(mp.p, mp.q)) -
         mp.gamma * binary_entropy(effective_qber(mp.p, mp.q));
}

MinEntropyDerivatives min_entropy_derivatives(const MinEntropyParams& mp) {
  mp.validate();
  if (!(mp.p > 0.0 && mp.p < 0.5) || !(mp.q > 0.0)) {
    throw InvalidInput("min_entropy_derivatives: requires p in (0, 1/2) and q in (0, 1/2]");
  }
  const double t = std::sqrt(mp.p * (1.0 - mp.p));
  const double a = 0.5 + (1.0 - 2.0 * mp.q) * t;
  const double s = effective_qber(mp.p, mp.q);
  const double slope = 1.0 - 2.0 * mp.p;
  MinEntropyDerivatives d;
  d.first = 2.0 * t / (a * std::log(2.0)) - mp.gamma * slope * std::log2((1.0 - s) / s);
  d.second = 4.0 * t * t / (a * a * std::log(2.0)) +
             mp.gamma * slope * slope / (std::log(2.0) * s * (1.0 - s));
  return d;
}

}  // namespace renyiqkd
