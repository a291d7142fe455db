#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "renyiqkd/divergence.hpp"
#include "renyiqkd/linalg.hpp"
#include "renyiqkd/protocol.hpp"

namespace renyiqkd {

/// tr(op * rho) = target.
struct AffineConstraint {
  Matrix op;
  double target = 0.0;
};

struct FeasibleSet {
  int dim = 0;
  std::vector<AffineConstraint> constraints;  // constraints[0] is unit trace
  Matrix reference_point;                     // a known feasible point
  bool has_interior = true;                   // false: reference_point is the only feasible point

  /// Largest |tr(op rho) - target| over all constraints.
  double max_residual(const Matrix& rho) const;
};

/// Unit trace, rho_A = I/2 and both QBER constraints at value p.
FeasibleSet rho_feasible_set(double p);

/// Werner state with v = 1 - 2p; satisfies every constraint of rho_feasible_set(p).
Matrix initial_point_rho(double p);

struct LmoResult {
  Matrix point;
  double value = 0.0;             // tr(C point)
  double dual_certificate = 0.0;  // valid lower bound on min tr(C rho) over the set
};

/// argmin tr(C sigma) over all density operators: the lowest eigenprojector.
LmoResult lmo_sigma(const Matrix& c);

/// argmin tr(C rho) over fs, by a log-barrier path-following method on the
/// 6-variable dual; the primal point is recovered from the central path.
LmoResult lmo_rho(const Matrix& c, const FeasibleSet& fs);

/// Golden-section minimizer of a convex function on [0, 1].
double line_search(const std::function<double(double)>& f, double tol = 1e-9);

struct SolverOptions {
  double tol = 1e-6;          // joint Frank-Wolfe gap, bits
  int max_iter = 2000;
  int random_restarts = 2;    // in addition to the deterministic symmetric start
  std::uint64_t seed = 20240917;
  double line_search_tol = 1e-9;
  bool record_trace = false;
};

struct IterationRecord {
  int iteration = 0;
  double upper = 0.0;
  double gap = 0.0;
  double step = 0.0;
};

struct OptimizationResult {
  Matrix rho_star;
  Matrix sigma_star;
  double upper_value = 0.0;  // D_beta at the returned iterate
  double lower_bound = 0.0;  // certified: upper_value - certified gap
  double gap = 0.0;
  int iterations = 0;        // summed over all starts
  bool converged = false;
  std::vector<IterationRecord> trace;
};

/// Minimizes the objective over sigma at fixed rho by iterating the
/// stationarity map sigma -> Z(Xi^beta)/Q from the given start.
Matrix minimize_reference(const RenyiObjective& objective, const Matrix& rho, Matrix sigma,
                          int max_iter = 500, double tol = 1e-13);

/// Deterministic starting pair: the best Bell-diagonal feasible rho (golden
/// section along the one-parameter line) with its optimal sigma.
std::pair<Matrix, Matrix> symmetric_warm_start(const RenyiObjective& objective, double p);

/// One Frank-Wolfe run from the given start on the objective D_beta(G(rho) || Z(sigma)).
OptimizationResult frank_wolfe_from(const RenyiObjective& objective, const FeasibleSet& fs,
                                    Matrix rho, Matrix sigma, const SolverOptions& opts);

/// Deterministic start plus seeded random restarts; reports the best certified bound.
/// Only p, q and alpha of params enter.
OptimizationResult frank_wolfe(const ProtocolParams& params, const SolverOptions& opts = {});

/// Comma-separated dump: iteration,upper,gap,step
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace);

}  // namespace renyiqkd
