#include "renyiqkd/protocol.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace renyiqkd {
namespace {

void require_probability(double value, double lo, double hi, const char* what) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream msg;
    msg << what << " = " << value << " outside [" << lo << ", " << hi << "]";
    throw InvalidInput(msg.str());
  }
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

void ProtocolParams::validate() const {
  require_probability(p, 0.0, 0.5, "p");
  require_probability(q, 0.0, 0.5, "q");
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw InvalidInput("alpha = " + std::to_string(alpha) + " outside (1, 2]");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidInput("epsilon = " + std::to_string(epsilon) + " outside (0, 1)");
  }
  if (m < 1) throw InvalidInput("m must be a positive integer");
}

Povm povm_elements(double q) {
  require_probability(q, 0.0, 0.5, "q");
  Matrix l0 = Matrix::Zero(2, 2);
  Matrix l1 = Matrix::Zero(2, 2);
  l0(0, 0) = 1.0 - q;
  l0(1, 1) = q;
  l1(0, 0) = q;
  l1(1, 1) = 1.0 - q;
  return {l0, l1};
}

KeyMapKraus key_map_kraus(double q) {
  require_probability(q, 0.0, 0.5, "q");
  // sqrt(Lambda_j) is diagonal in the Z basis.
  Matrix root0 = Matrix::Zero(2, 2);
  Matrix root1 = Matrix::Zero(2, 2);
  root0(0, 0) = std::sqrt(1.0 - q);
  root0(1, 1) = std::sqrt(q);
  root1(0, 0) = std::sqrt(q);
  root1(1, 1) = std::sqrt(1.0 - q);
  Matrix ket0 = Matrix::Zero(2, 1);
  Matrix ket1 = Matrix::Zero(2, 1);
  ket0(0, 0) = 1.0;
  ket1(1, 0) = 1.0;
  const Matrix id2 = Matrix::Identity(2, 2);
  return {kron(id2, kron(root0, ket0)), kron(id2, kron(root1, ket1))};
}

Matrix apply_key_map(const Matrix& rho, const KeyMapKraus& k) {
  if (rho.rows() != kDimAB || rho.cols() != kDimAB) {
    throw InvalidInput("apply_key_map: expected a 4x4 operator on AB");
  }
  const Matrix iso = k.isometry();
  return iso * rho * iso.adjoint();
}

Matrix apply_key_map_adjoint(const Matrix& w, const KeyMapKraus& k) {
  if (w.rows() != kDimABY || w.cols() != kDimABY) {
    throw InvalidInput("apply_key_map_adjoint: expected an 8x8 operator on AB Y1");
  }
  const Matrix iso = k.isometry();
  return iso.adjoint() * w * iso;
}

Matrix apply_pinching(const Matrix& sigma) {
  if (sigma.rows() != kDimABY || sigma.cols() != kDimABY) {
    throw InvalidInput("apply_pinching: expected an 8x8 operator on AB Y1");
  }
  Matrix out = sigma;
  for (int j = 0; j < kDimABY; ++j) {
    for (int i = 0; i < kDimABY; ++i) {
      if ((i & 1) != (j & 1)) out(i, j) = 0.0;
    }
  }
  return out;
}

QberProjectors qber_projectors() {
  Matrix z_err = Matrix::Zero(kDimAB, kDimAB);
  z_err(1, 1) = 1.0;  // |01>
  z_err(2, 2) = 1.0;  // |10>
  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Matrix<Complex, 2, 1> plus(h, h);
  Eigen::Matrix<Complex, 2, 1> minus(h, -h);
  Matrix pm(4, 1);
  Matrix mp(4, 1);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      pm(2 * a + b, 0) = plus(a) * minus(b);
      mp(2 * a + b, 0) = minus(a) * plus(b);
    }
  }
  Matrix x_err = pm * pm.adjoint() + mp * mp.adjoint();
  return {x_err, z_err};
}

Matrix bell_state() {
  Matrix psi = Matrix::Zero(kDimAB, 1);
  psi(0, 0) = 1.0 / std::sqrt(2.0);
  psi(3, 0) = 1.0 / std::sqrt(2.0);
  return psi * psi.adjoint();
}

Matrix werner_state(double v) {
  return v * bell_state() + (1.0 - v) / kDimAB * Matrix::Identity(kDimAB, kDimAB);
}

double effective_qber(double p, double q) {
  require_probability(p, 0.0, 0.5, "p");
  require_probability(q, 0.0, 0.5, "q");
  return p + q - 2.0 * p * q;
}

double binary_entropy(double t) {
  require_probability(t, 0.0, 1.0, "binary_entropy argument");
  if (t == 0.0 || t == 1.0) return 0.0;
  return -t * std::log2(t) - (1.0 - t) * std::log2(1.0 - t);
}

}  // namespace renyiqkd
