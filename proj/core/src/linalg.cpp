#include "renyiqkd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace renyiqkd {
namespace {

double support_threshold(const RealVector& eigenvalues, double cutoff) {
  const double top = eigenvalues.size() > 0 ? std::max(eigenvalues.maxCoeff(), 0.0) : 0.0;
  return cutoff * top;
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream msg;
    msg << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw InvalidInput(msg.str());
  }
}

void require_psd(const EigenSystem& es, double threshold, const char* what) {
  if (es.dim() > 0 && es.eigenvalues(0) < -std::max(threshold, 1e-300)) {
    std::ostringstream msg;
    msg << what << ": matrix is not positive semidefinite (smallest eigenvalue " << es.eigenvalues(0)
        << ")";
    throw InvalidInput(msg.str());
  }
}

// (a^mu - b^mu) / (a - b) for a, b > 0, without cancellation when a ~ b.
double divided_difference_power(double a, double b, double mu, double merge_tol) {
  if (std::abs(a - b) <= merge_tol) {
    const double mid = 0.5 * (a + b);
    return mu * std::pow(mid, mu - 1.0);
  }
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double rel = (hi - lo) / lo;
  return std::pow(lo, mu) * std::expm1(mu * std::log1p(rel)) / (hi - lo);
}

}  // namespace

Matrix EigenSystem::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, max_abs(a));
  return max_abs(a - a.adjoint()) <= tol * scale;
}

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

double trace_product(const Matrix& a, const Matrix& b) {
  // tr(AB) = sum_ij A_ij B_ji
  return (a.transpose().cwiseProduct(b)).sum().real();
}

EigenSystem eig_hermitian(const Matrix& h) {
  require_square(h, "eig_hermitian");
  if (!is_hermitian(h)) {
    std::ostringstream msg;
    msg << "eig_hermitian: input is not Hermitian (max |H - H^dag| = " << max_abs(h - h.adjoint())
        << ")";
    throw InvalidInput(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success) throw NumericalError("eig_hermitian: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix power_psd(const Matrix& y, double mu, double cutoff) {
  return power_psd(eig_hermitian(y), mu, cutoff);
}

Matrix power_psd(const EigenSystem& y, double mu, double cutoff) {
  if (cutoff < 0.0) throw InvalidInput("power_psd: cutoff must be non-negative");
  const double thr = support_threshold(y.eigenvalues, cutoff);
  require_psd(y, thr, "power_psd");
  RealVector mapped(y.dim());
  for (int i = 0; i < y.dim(); ++i) {
    const double lambda = y.eigenvalues(i);
    mapped(i) = lambda > thr ? std::pow(lambda, mu) : 0.0;
  }
  return y.eigenvectors * mapped.cast<Complex>().asDiagonal() * y.eigenvectors.adjoint();
}

Matrix support_projector(const EigenSystem& y, double cutoff) {
  return power_psd(y, 0.0, cutoff);
}

Matrix frechet_power(const Matrix& y, double mu, const Matrix& delta, double cutoff) {
  return frechet_power(eig_hermitian(y), mu, delta, cutoff);
}

Matrix frechet_power(const EigenSystem& y, double mu, const Matrix& delta, double cutoff) {
  const int n = y.dim();
  if (delta.rows() != n || delta.cols() != n) {
    throw InvalidInput("frechet_power: direction has the wrong shape");
  }
  const double thr = support_threshold(y.eigenvalues, cutoff);
  require_psd(y, thr, "frechet_power");
  const double top = std::max(y.eigenvalues.maxCoeff(), 0.0);
  const double merge_tol = 1e-9 * top;

  Matrix rotated = y.eigenvectors.adjoint() * delta * y.eigenvectors;
  const double negligible = 1e-14 * std::max(1.0, max_abs(rotated));
  for (int j = 0; j < n; ++j) {
    const double lj = y.eigenvalues(j);
    const bool kj = lj <= thr;
    for (int i = 0; i < n; ++i) {
      const double li = y.eigenvalues(i);
      const bool ki = li <= thr;
      double weight = 0.0;
      if (!ki && !kj) {
        weight = divided_difference_power(li, lj, mu, merge_tol);
      } else if (mu > 0.0 && ki != kj) {
        // t^mu vanishes on the kernel: (lambda^mu - 0) / lambda
        weight = std::pow(ki ? lj : li, mu - 1.0);
      } else if (mu >= 1.0 && ki && kj) {
        weight = mu == 1.0 ? 1.0 : 0.0;
      } else if (std::abs(rotated(i, j)) > negligible) {
        throw InvalidInput(
            "frechet_power: direction overlaps the kernel of Y where t^mu is not differentiable; "
            "perturb Y to full rank first");
      }
      rotated(i, j) *= weight;
    }
  }
  return y.eigenvectors * rotated * y.eigenvectors.adjoint();
}

Matrix frechet_power_quadrature(const Matrix& y, double mu, const Matrix& delta, double tol) {
  require_square(y, "frechet_power_quadrature");
  if (!(mu > 0.0 && mu < 1.0)) {
    throw InvalidInput("frechet_power_quadrature: the resolvent integral needs 0 < mu < 1");
  }
  const int n = static_cast<int>(y.rows());
  if (delta.rows() != n || delta.cols() != n) {
    throw InvalidInput("frechet_power_quadrature: direction has the wrong shape");
  }
  const EigenSystem es = eig_hermitian(y);
  const double lambda_min = es.eigenvalues(0);
  if (!(lambda_min > 0.0)) {
    throw InvalidInput("frechet_power_quadrature: Y must be positive definite");
  }
  const double scale = std::max(delta.norm(), 1e-300);
  const Matrix identity = Matrix::Identity(n, n);

  // Integrate over u = log s; the integrand decays exponentially at both ends.
  auto integrand = [&](double u) -> Matrix {
    const double s = std::exp(u);
    const Matrix resolvent = (y + s * identity).inverse();
    return std::exp((mu + 1.0) * u) * (resolvent * delta * resolvent);
  };

  // Tail bounds:  int_0^a s^mu |R D R| ds <= |D| a^{mu+1} / ((mu+1) lambda_min^2)
  //               int_b^inf s^mu |R D R| ds <= |D| b^{mu-1} / (1-mu)
  const double tail_budget = 0.5 * tol;
  const double lower = std::log(tail_budget * (mu + 1.0) * lambda_min * lambda_min) / (mu + 1.0);
  const double upper = std::log(tail_budget * (1.0 - mu)) / (mu - 1.0);

  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& k_nodes = Kronrod::abscissa();
  const auto& k_weights = Kronrod::weights();
  const auto& g_weights = Gauss::weights();

  struct Panel {
    double a, b, error;
    Matrix value;
    bool operator<(const Panel& other) const { return error < other.error; }
  };
  auto evaluate = [&](double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Matrix kron = Matrix::Zero(n, n);
    Matrix gauss = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < k_nodes.size(); ++i) {
      const double x = k_nodes[i];
      const Matrix fp = integrand(mid + half * x);
      const Matrix fm = x == 0.0 ? Matrix::Zero(n, n) : integrand(mid - half * x);
      kron += k_weights[i] * (fp + fm);
      // Gauss-7 nodes are the even-indexed Kronrod nodes.
      if (i % 2 == 0) gauss += g_weights[i / 2] * (fp + fm);
    }
    kron *= half;
    gauss *= half;
    return Panel{a, b, (kron - gauss).norm() / scale, kron};
  };

  std::priority_queue<Panel> panels;
  Matrix total = Matrix::Zero(n, n);
  double error = 0.0;
  const int initial = 16;
  for (int i = 0; i < initial; ++i) {
    const double a = lower + (upper - lower) * i / initial;
    const double b = lower + (upper - lower) * (i + 1) / initial;
    Panel p = evaluate(a, b);
    total += p.value;
    error += p.error;
    panels.push(std::move(p));
  }
  int splits = 0;
  while (error > 0.5 * tol && splits < 20000) {
    Panel worst = panels.top();
    panels.pop();
    total -= worst.value;
    error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    for (Panel child : {evaluate(worst.a, mid), evaluate(mid, worst.b)}) {
      total += child.value;
      error += child.error;
      panels.push(std::move(child));
    }
    ++splits;
  }
  return (std::sin(std::numbers::pi * mu) / std::numbers::pi) * total;
}

}  // namespace renyiqkd
