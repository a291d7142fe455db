#pragma once

#include <array>
#include <utility>

#include "renyiqkd/linalg.hpp"
#include "renyiqkd/protocol.hpp"

namespace renyiqkd {

/// Dual order beta = alpha / (2 alpha - 1); maps (1, 2] onto [2/3, 1).
double beta_of_alpha(double alpha);

/// mu = (1 - beta) / (2 beta), the sandwich exponent.
double sandwich_exponent(double beta);

struct DivergenceEvaluation {
  double value = 0.0;         // bits
  double q_functional = 0.0;  // tr[Xi^beta]
  RealVector xi_eigenvalues;  // spectrum of Xi = Y^mu X Y^mu
};

/// Sandwiched Renyi divergence D_beta(X || Y) in bits for beta in (1/2, 1).
/// Y must be full rank; rank-deficient references are rejected.
DivergenceEvaluation renyi_divergence(const Matrix& x, const Matrix& y, double beta,
                                      double cutoff = kSupportCutoff);

// Z(sigma) is replaced by (1 - delta) Z(sigma) + delta I/8 when its smallest
// eigenvalue drops below the floor.
inline constexpr double kReferenceFloor = 1e-9;
inline constexpr double kReferenceMixing = 1e-10;

struct BlockEvaluation {
  double value = 0.0;  // D_beta(G(rho) || Z(sigma)) in bits
  double q_functional = 0.0;
  Matrix grad_rho;     // 4x4
  Matrix grad_sigma;   // 8x8, Y1-block-diagonal
};

/// The two-block objective (rho, sigma) -> D_beta(G(rho) || Z(sigma)) at fixed order and key map.
class RenyiObjective {
 public:
  RenyiObjective(double beta, KeyMapKraus kraus);

  double beta() const { return beta_; }
  const KeyMapKraus& kraus() const { return kraus_; }

  double value(const Matrix& rho, const Matrix& sigma) const;
  BlockEvaluation evaluate(const Matrix& rho, const Matrix& sigma) const;

  /// One step of the sigma-block stationarity map sigma -> Z(Xi^beta) / Q.
  /// Its fixed points minimize the objective over sigma at fixed rho.
  /// Returns the new (Y1-block-diagonal) sigma and the objective value at the input.
  std::pair<Matrix, double> reference_update(const Matrix& rho, const Matrix& sigma) const;

 private:
  struct Factorization;
  Factorization factorize(const Matrix& rho, const Matrix& sigma) const;

  double beta_;
  double mu_;
  KeyMapKraus kraus_;
  Matrix isometry_;
  std::array<Matrix, 2> d_blocks_;  // parity-j rows of the key-map isometry
};

Matrix grad_rho(const Matrix& rho, const Matrix& sigma, double beta, const KeyMapKraus& k);
Matrix grad_sigma(const Matrix& rho, const Matrix& sigma, double beta, const KeyMapKraus& k);

/// Unoptimized rate surrogate D_beta(G(rho) || Z(sigma)) - h2(s) - g_eps(alpha)/m.
double objective_f(const ProtocolParams& params, const Matrix& rho, const Matrix& sigma,
                   const KeyMapKraus& k);

}  // namespace renyiqkd
