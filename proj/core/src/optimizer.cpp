#include "renyiqkd/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace renyiqkd {
namespace {

Matrix pauli(int which) {
  Matrix s = Matrix::Zero(2, 2);
  switch (which) {
    case 0: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
    case 1: s(0, 1) = Complex(0, -1); s(1, 0) = Complex(0, 1); break;
    default: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
  }
  return s;
}

// sigma_k (x) I_B
Matrix alice_observable(int which) {
  const Matrix s = pauli(which);
  Matrix out = Matrix::Zero(kDimAB, kDimAB);
  for (int a = 0; a < 2; ++a) {
    for (int a2 = 0; a2 < 2; ++a2) {
      for (int b = 0; b < 2; ++b) out(2 * a + b, 2 * a2 + b) = s(a, a2);
    }
  }
  return out;
}

bool cholesky_ok(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  return llt.info() == Eigen::Success;
}

// Restores the affine constraints by a least-squares correction inside their span.
Matrix project_affine(const Matrix& x, const FeasibleSet& fs, const Eigen::MatrixXd& gram_inv) {
  const auto k = static_cast<Eigen::Index>(fs.constraints.size());
  Eigen::VectorXd residual(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    residual(i) = trace_product(fs.constraints[i].op, x) - fs.constraints[i].target;
  }
  const Eigen::VectorXd coef = gram_inv * residual;
  Matrix out = x;
  for (Eigen::Index i = 0; i < k; ++i) out -= coef(i) * fs.constraints[i].op;
  return hermitian_part(out);
}

// Affine projection, then mixing with the strictly positive reference point
// by the smallest weight that Weyl's inequality certifies as sufficient.
Matrix restore_feasibility(const Matrix& x, const FeasibleSet& fs, const Eigen::MatrixXd& gram_inv) {
  Matrix out = project_affine(x, fs, gram_inv);
  const double low = eig_hermitian(out).eigenvalues(0);
  if (low >= 0.0) return out;
  const double ref_low = eig_hermitian(fs.reference_point).eigenvalues(0);
  const double lambda = std::min(1.0, -low / (ref_low - low) * (1.0 + 1e-9));
  return hermitian_part((1.0 - lambda) * out + lambda * fs.reference_point);
}

Eigen::MatrixXd constraint_gram(const FeasibleSet& fs) {
  const auto k = static_cast<Eigen::Index>(fs.constraints.size());
  Eigen::MatrixXd gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      gram(i, j) = trace_product(fs.constraints[i].op, fs.constraints[j].op);
    }
  }
  return gram;
}

Matrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) g(i, j) = Complex(normal(rng), normal(rng));
  }
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) g(i, j) = Complex(normal(rng), normal(rng));
  }
  return hermitian_part(g);
}

// Bell-diagonal state on the constraint line: weights (1 - 2p + t, p - t, p - t, t)
// on Phi+, Phi-, Psi+, Psi-.
Matrix bell_diagonal_point(double p, double t) {
  const double h = 1.0 / std::sqrt(2.0);
  const std::array<std::array<double, 4>, 4> kets = {{
      {h, 0.0, 0.0, h},   // Phi+
      {h, 0.0, 0.0, -h},  // Phi-
      {0.0, h, h, 0.0},   // Psi+
      {0.0, h, -h, 0.0},  // Psi-
  }};
  const std::array<double, 4> weights = {1.0 - 2.0 * p + t, p - t, p - t, t};
  Matrix rho = Matrix::Zero(kDimAB, kDimAB);
  for (int k = 0; k < 4; ++k) {
    Matrix v(kDimAB, 1);
    for (int i = 0; i < kDimAB; ++i) v(i, 0) = kets[k][i];
    rho += weights[k] * (v * v.adjoint());
  }
  return rho;
}

}  // namespace

Matrix minimize_reference(const RenyiObjective& objective, const Matrix& rho, Matrix sigma,
                          int max_iter, double tol) {
  double best_value = std::numeric_limits<double>::infinity();
  Matrix best = sigma;
  for (int k = 0; k < max_iter; ++k) {
    auto [next, value] = objective.reference_update(rho, sigma);
    if (value < best_value) {
      best_value = value;
      best = sigma;
    } else if (value > best_value + 1e-14 * std::max(1.0, std::abs(best_value))) {
      break;
    }
    const double change = max_abs(next - apply_pinching(sigma));
    sigma = std::move(next);
    if (change < tol) {
      best = sigma;
      break;
    }
  }
  return best;
}

std::pair<Matrix, Matrix> symmetric_warm_start(const RenyiObjective& objective, double p) {
  Matrix sigma = Matrix::Identity(kDimABY, kDimABY) / static_cast<double>(kDimABY);
  if (p == 0.0) {
    const Matrix rho = bell_state();
    return {rho, minimize_reference(objective, rho, sigma)};
  }
  // The objective and the feasible set are invariant under the Pauli twirl
  // {I, XX, YY, ZZ}, so a minimizer lies on the Bell-diagonal line t in [0, p].
  Matrix warm = sigma;
  const double t_frac = line_search(
      [&](double g) {
        const Matrix rho = bell_diagonal_point(p, g * p);
        warm = minimize_reference(objective, rho, warm);
        return objective.value(rho, warm);
      },
      1e-10);
  const Matrix rho = bell_diagonal_point(p, t_frac * p);
  return {rho, minimize_reference(objective, rho, warm)};
}

double FeasibleSet::max_residual(const Matrix& rho) const {
  double worst = 0.0;
  for (const auto& c : constraints) {
    worst = std::max(worst, std::abs(trace_product(c.op, rho) - c.target));
  }
  return worst;
}

FeasibleSet rho_feasible_set(double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidInput("rho_feasible_set: p outside [0, 1/2]");
  const QberProjectors proj = qber_projectors();
  FeasibleSet fs;
  fs.dim = kDimAB;
  fs.constraints.push_back({Matrix::Identity(kDimAB, kDimAB), 1.0});
  for (int k = 0; k < 3; ++k) fs.constraints.push_back({alice_observable(k), 0.0});
  fs.constraints.push_back({proj.x_err, p});
  fs.constraints.push_back({proj.z_err, p});
  fs.reference_point = initial_point_rho(p);
  // At p = 0 the constraints force |Phi+><Phi+|.
  fs.has_interior = p > 0.0;
  return fs;
}

Matrix initial_point_rho(double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw InvalidInput("initial_point_rho: p outside [0, 1/2]");
  return werner_state(1.0 - 2.0 * p);
}

LmoResult lmo_sigma(const Matrix& c) {
  const EigenSystem es = eig_hermitian(c);
  const Matrix v = es.eigenvectors.col(0);
  return {v * v.adjoint(), es.eigenvalues(0), es.eigenvalues(0)};
}

LmoResult lmo_rho(const Matrix& c, const FeasibleSet& fs) {
  const int n = fs.dim;
  if (c.rows() != n || c.cols() != n) throw InvalidInput("lmo_rho: cost has the wrong shape");
  if (!is_hermitian(c)) throw InvalidInput("lmo_rho: cost is not Hermitian");
  const Matrix cost = hermitian_part(c);
  if (!fs.has_interior) {
    const double v = trace_product(cost, fs.reference_point);
    return {fs.reference_point, v, v};
  }

  // Shift out the identity part and normalize; tr(rho) = 1 makes both exact.
  const double shift = cost.trace().real() / n;
  Matrix scaled = cost - shift * Matrix::Identity(n, n);
  double scale = scaled.norm();
  if (scale < 1e-300) scale = 1.0;
  scaled /= scale;

  const auto k = static_cast<Eigen::Index>(fs.constraints.size());
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) b(i) = fs.constraints[i].target;
  auto slack = [&](const Eigen::VectorXd& y) {
    Matrix s = scaled;
    for (Eigen::Index i = 0; i < k; ++i) s -= y(i) * fs.constraints[i].op;
    return s;
  };

  // Dual: max b.y  s.t.  S(y) = C - sum_i y_i A_i >= 0. constraints[0] = identity.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
  y(0) = eig_hermitian(scaled).eigenvalues(0) - 1.0;

  const double gap_target = 1e-11;
  const Eigen::MatrixXd gram_inv = constraint_gram(fs).inverse();
  Matrix best_point;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const Matrix& candidate) {
    const Matrix x = restore_feasibility(candidate, fs, gram_inv);
    const double v = trace_product(scaled, x);
    if (v < best_value) {
      best_value = v;
      best_point = x;
    }
  };
  double t = 1.0;
  Matrix s_inv;
  for (int outer = 0; outer < 60; ++outer) {
    for (int newton = 0; newton < 30; ++newton) {
      const Matrix s = slack(y);
      Eigen::LLT<Matrix> llt(s);
      s_inv = llt.solve(Matrix::Identity(n, n));
      std::vector<Matrix> scaled_ops;
      scaled_ops.reserve(k);
      for (const auto& con : fs.constraints) scaled_ops.push_back(s_inv * con.op);
      Eigen::VectorXd grad(k);
      Eigen::MatrixXd hess(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        grad(i) = -t * b(i) + scaled_ops[i].trace().real();
        for (Eigen::Index j = 0; j <= i; ++j) {
          hess(i, j) = trace_product(scaled_ops[i], scaled_ops[j]);
          hess(j, i) = hess(i, j);
        }
      }
      const Eigen::VectorXd step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      if (!(decrement > 1e-24)) break;
      // Damped Newton step; the full step stays in the domain once lambda < 1.
      const double lambda = std::sqrt(decrement);
      double len = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, len *= 0.5) {
        const Eigen::VectorXd trial = y + len * step;
        if (!cholesky_ok(slack(trial))) continue;
        y = trial;
        moved = true;
        break;
      }
      if (!moved || decrement < 1e-12) break;
    }
    // The central-path primal S^-1/t loses accuracy as S becomes singular,
    // so every point along the path is a candidate.
    if (Eigen::LLT<Matrix> llt(slack(y)); llt.info() == Eigen::Success) {
      consider(llt.solve(Matrix::Identity(n, n)) / t);
    }
    if (n / t < gap_target) break;
    t *= 10.0;
  }

  // Candidate supported on the near-kernel of the final dual slack.
  const EigenSystem slack_es = eig_hermitian(slack(y));
  int rank = 0;
  while (rank < n && slack_es.eigenvalues(rank) < 1e-6) ++rank;
  if (rank > 0) {
    const Matrix v = slack_es.eigenvectors.leftCols(rank);
    std::vector<Matrix> basis;
    for (int i = 0; i < rank; ++i) {
      for (int j = i; j < rank; ++j) {
        Matrix e = Matrix::Zero(rank, rank);
        if (i == j) {
          e(i, i) = 1.0;
          basis.push_back(e);
        } else {
          e(i, j) = e(j, i) = 1.0;
          basis.push_back(e);
          e(i, j) = Complex(0, 1);
          e(j, i) = Complex(0, -1);
          basis.push_back(e);
        }
      }
    }
    const auto dim = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd m(k, dim);
    std::vector<Matrix> lifted;
    for (const auto& e : basis) lifted.push_back(v * e * v.adjoint());
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = trace_product(fs.constraints[i].op, lifted[j]);
    }
    const Eigen::VectorXd w = m.completeOrthogonalDecomposition().solve(b);
    Matrix x = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < dim; ++j) x += w(j) * lifted[j];
    consider(x);
  }

  if (!std::isfinite(best_value)) throw NumericalError("lmo_rho: no feasible point recovered");
  LmoResult out;
  out.point = best_point;
  out.value = trace_product(cost, best_point);
  // Undo the normalization: the dual of the original problem is y * scale with
  // the trace multiplier shifted by `shift`.
  out.dual_certificate = std::min(scale * b.dot(y) + shift, out.value);
  return out;
}

double line_search(const std::function<double(double)>& f, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best = fc <= fd ? c : d;
  double best_value = std::min(fc, fd);
  for (double end : {0.0, 1.0}) {
    if (std::abs(best - end) <= tol) {
      const double fe = f(end);
      if (fe <= best_value) {
        best = end;
        best_value = fe;
      }
    }
  }
  return best;
}

OptimizationResult frank_wolfe_from(const RenyiObjective& objective, const FeasibleSet& fs,
                                    Matrix rho, Matrix sigma, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw InvalidInput("frank_wolfe: tol must be positive");
  OptimizationResult out;
  double certified_gap = std::numeric_limits<double>::infinity();
  BlockEvaluation eval;
  int iter = 0;
  for (;; ++iter) {
    eval = objective.evaluate(rho, sigma);
    const LmoResult r = lmo_rho(eval.grad_rho, fs);
    const LmoResult s = lmo_sigma(eval.grad_sigma);
    const double at_rho = trace_product(eval.grad_rho, rho);
    const double at_sigma = trace_product(eval.grad_sigma, sigma);
    const double gap = at_rho - r.value + at_sigma - s.value;
    certified_gap = at_rho - r.dual_certificate + at_sigma - s.dual_certificate;
    if (gap < -1e-9) {
      std::ostringstream msg;
      msg << "frank_wolfe: negative gap " << gap << " at iteration " << iter
          << " (linear minimization oracle returned a non-optimal point)";
      throw NumericalError(msg.str());
    }
    if (certified_gap < opts.tol) {
      out.converged = true;
      if (opts.record_trace) out.trace.push_back({iter, eval.value, certified_gap, 0.0});
      break;
    }
    if (iter >= opts.max_iter) {
      if (opts.record_trace) out.trace.push_back({iter, eval.value, certified_gap, 0.0});
      break;
    }
    const Matrix d_rho = r.point - rho;
    const Matrix d_sigma = s.point - sigma;
    const double step = line_search(
        [&](double g) { return objective.value(rho + g * d_rho, sigma + g * d_sigma); },
        opts.line_search_tol);
    if (opts.record_trace) out.trace.push_back({iter, eval.value, certified_gap, step});
    if (step <= 0.0) break;  // no representable progress along the FW direction
    const Matrix next_rho = rho + step * d_rho;
    const Matrix next_sigma = sigma + step * d_sigma;
    const double next = objective.value(next_rho, next_sigma);
    if (next > eval.value + 1e-9 * std::max(1.0, std::abs(eval.value))) {
      std::ostringstream msg;
      msg << "frank_wolfe: line search increased the objective from " << eval.value << " to "
          << next << " at iteration " << iter << " (inconsistent gradient)";
      throw NumericalError(msg.str());
    }
    rho = next_rho;
    sigma = next_sigma;
  }
  out.rho_star = rho;
  out.sigma_star = sigma;
  out.upper_value = eval.value;
  out.gap = std::max(certified_gap, 0.0);
  out.lower_bound = out.upper_value - out.gap;
  out.iterations = iter;
  return out;
}

OptimizationResult frank_wolfe(const ProtocolParams& params, const SolverOptions& opts) {
  params.validate();
  const RenyiObjective objective(beta_of_alpha(params.alpha), key_map_kraus(params.q));
  const FeasibleSet fs = rho_feasible_set(params.p);
  const Matrix mixed = Matrix::Identity(kDimABY, kDimABY) / static_cast<double>(kDimABY);

  auto [rho_start, sigma_start] = symmetric_warm_start(objective, params.p);
  OptimizationResult best = frank_wolfe_from(objective, fs, rho_start, sigma_start, opts);
  int total_iterations = best.iterations;
  for (int r = 0; r < opts.random_restarts && fs.has_interior; ++r) {
    std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r + 1));
    const Matrix vertex = lmo_rho(random_hermitian(kDimAB, rng), fs).point;
    const Matrix rho0 = 0.5 * (fs.reference_point + vertex);
    const Matrix sigma0 =
        minimize_reference(objective, rho0, 0.5 * (random_density(kDimABY, rng) + mixed));
    SolverOptions run_opts = opts;
    run_opts.record_trace = false;
    OptimizationResult run = frank_wolfe_from(objective, fs, rho0, sigma0, run_opts);
    total_iterations += run.iterations;
    if (run.lower_bound > best.lower_bound) {
      run.trace = std::move(best.trace);
      best = std::move(run);
    }
  }
  best.iterations = total_iterations;
  return best;
}

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
  os << "iteration,upper,gap,step\n";
  for (const auto& r : trace) {
    os << r.iteration << ',' << r.upper << ',' << r.gap << ',' << r.step << '\n';
  }
}

}  // namespace renyiqkd
