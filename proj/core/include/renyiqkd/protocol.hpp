#pragma once

#include <cstdint>
#include <utility>

#include "renyiqkd/linalg.hpp"

namespace renyiqkd {

// Global tensor ordering: A (x) B (x) Y1, A slowest. Basis index = 4a + 2b + y.
inline constexpr int kDimAB = 4;
inline constexpr int kDimABY = 8;

struct ProtocolParams {
  double p = 0.0;           // symmetric QBER, Q_Z = Q_X
  double q = 0.0;           // trusted flip probability
  double alpha = 1.001;     // Renyi order of the privacy-amplification entropy
  double epsilon = 1e-10;   // security parameter
  std::int64_t m = 1;       // sifted block length

  /// Throws InvalidInput naming the offending field.
  void validate() const;
};

struct Povm {
  Matrix lambda0;
  Matrix lambda1;
};

/// Bob's Z-basis measurement followed by a trusted flip with probability q.
Povm povm_elements(double q);

/// Kraus pieces M_j = I_A (x) sqrt(Lambda_j) (x) |j>_Y1, each 8x4.
struct KeyMapKraus {
  Matrix m0;
  Matrix m1;

  /// K = M0 + M1, an isometry AB -> AB Y1 (M_j^dag M_k = 0 for j != k).
  Matrix isometry() const { return m0 + m1; }
};

KeyMapKraus key_map_kraus(double q);

/// G(rho) = K rho K^dag with the register Y1 held coherently.
Matrix apply_key_map(const Matrix& rho, const KeyMapKraus& k);
/// G^dag(W) = K^dag W K.
Matrix apply_key_map_adjoint(const Matrix& w, const KeyMapKraus& k);

/// Full dephasing of the Y1 register (the least significant tensor factor).
Matrix apply_pinching(const Matrix& sigma);

struct QberProjectors {
  Matrix x_err;  // |+-><+-| + |-+><-+|
  Matrix z_err;  // |01><01| + |10><10|
};

QberProjectors qber_projectors();

/// |Phi+><Phi+| on AB.
Matrix bell_state();
/// v |Phi+><Phi+| + (1 - v) I/4.
Matrix werner_state(double v);

/// s = p(1-q) + (1-p)q.
double effective_qber(double p, double q);

/// h2(t) in bits, with 0 log 0 = 0.
double binary_entropy(double t);

}  // namespace renyiqkd
