#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <tuple>
#include <utility>
#include <vector>

#include "renyiqkd/optimizer.hpp"
#include "renyiqkd/protocol.hpp"

namespace renyiqkd {

/// g_eps(alpha) = alpha/(alpha-1) log2(1/eps) - 2, in bits.
double finite_size_correction(double alpha, double epsilon);

/// {1.0005, 1.001, ..., 1.75, 2.0}
const std::vector<double>& default_alpha_grid();

/// Certified bounds on inf_{rho,sigma} D_beta(G(rho) || Z(sigma)) at one (p, q, alpha).
struct DivergenceBound {
  double upper = 0.0;
  double lower = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
};

/// Everything the divergence bound depends on, tolerances included.
struct BoundKey {
  double p = 0.0;
  double q = 0.0;
  double alpha = 0.0;
  double tol = 0.0;
  int max_iter = 0;
  int random_restarts = 0;
  std::uint64_t seed = 0;

  auto tie() const { return std::tie(p, q, alpha, tol, max_iter, random_restarts, seed); }
  bool operator<(const BoundKey& o) const { return tie() < o.tie(); }
  bool operator==(const BoundKey& o) const { return tie() == o.tie(); }
};

/// Persistent second-level cache consulted by KeyRateEngine. Implementations
/// must tolerate concurrent calls with distinct keys.
class BoundStore {
 public:
  virtual ~BoundStore() = default;
  virtual std::optional<DivergenceBound> lookup(const BoundKey& key) = 0;
  virtual void store(const BoundKey& key, const DivergenceBound& bound) = 0;
};

struct RatePoint {
  ProtocolParams params;        // q and alpha hold q_star and alpha_star
  double rate = 0.0;            // certified lower bound, signed
  double q_star = 0.0;
  double alpha_star = 0.0;
  double certificate_gap = 0.0;
  int iterations = 0;
};

struct EngineOptions {
  SolverOptions solver = default_solver_options();
  double epsilon = 1e-10;
  double q_tol = 1e-4;
  double positive_threshold = 1e-6;  // certified rate above this counts as key
  double p_tol = 1e-3;

  static SolverOptions default_solver_options();
};

struct DeltaR {
  double delta = 0.0;
  double p_at_max = 0.0;
  double certificate_gap = 0.0;  // largest gap among the bounds used
};

struct QberThreshold {
  double p_max = 0.0;
  bool found = false;            // false: no positive rate even at p = 0
  double certificate_gap = 0.0;  // gap of the bound certifying p_max
};

/// Outer optimizations over q and alpha on top of the Frank-Wolfe solver.
/// All methods are const and safe to call from several threads.
class KeyRateEngine {
 public:
  explicit KeyRateEngine(EngineOptions opts = {}, BoundStore* store = nullptr);

  const EngineOptions& options() const { return opts_; }

  DivergenceBound divergence_bound(double p, double q, double alpha) const;

  /// Certified divergence minus h2(s); the rate with the g_eps/m term omitted.
  double asymptotic_rate(double p, double q, double alpha) const;

  /// Fixed q and alpha from params.
  RatePoint key_rate(const ProtocolParams& params) const;

  /// Maximizes over q in [0, 1/2] at fixed alpha.
  RatePoint optimize_q(std::int64_t m, double alpha, double p) const;

  /// Maximizes over the alpha grid with q optimized (or pinned to 0 when
  /// with_noise is false).
  RatePoint optimize_alpha_q(std::int64_t m, double p, const std::vector<double>& alpha_grid,
                             bool with_noise = true) const;

  DeltaR delta_r(double alpha, const std::vector<double>& p_grid) const;

  QberThreshold max_tolerable_qber(std::int64_t m, bool with_noise,
                                   const std::vector<double>& alpha_grid) const;

 private:
  std::pair<double, double> best_q(double p, double alpha) const;  // (q_star, asymptotic rate)
  /// Certificate gap of the first bound giving a positive rate, if any.
  std::optional<double> positive_at(std::int64_t m, double p, bool with_noise,
                                    const std::vector<double>& alpha_grid) const;
  RatePoint assemble(double p, double q, double alpha, std::int64_t m) const;

  EngineOptions opts_;
  BoundStore* store_;
  mutable std::shared_mutex bounds_mutex_;
  mutable std::map<BoundKey, DivergenceBound> bounds_;
  mutable std::shared_mutex q_mutex_;
  mutable std::map<std::pair<double, double>, std::pair<double, double>> q_memo_;
};

struct MinEntropyParams {
  double p = 0.0;
  double q = 0.0;
  double gamma = 1.0;  // error-correction efficiency

  void validate() const;
};

/// P_g = 1/2 + (1 - 2q) sqrt(p(1-p)).
double guessing_probability(double p, double q);

/// -log2 P_g - gamma h2(s(p, q)).
double min_entropy_rate(const MinEntropyParams& mp);

struct MinEntropyDerivatives {
  double first = 0.0;
  double second = 0.0;
};

/// Closed-form d/dq and d^2/dq^2 of min_entropy_rate; p in (0, 1/2), q in (0, 1/2].
MinEntropyDerivatives min_entropy_derivatives(const MinEntropyParams& mp);

}  // namespace renyiqkd
