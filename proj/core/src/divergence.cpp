#include "renyiqkd/divergence.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "renyiqkd/keyrate.hpp"

namespace renyiqkd {
namespace {

// 4x4 parity block j of an 8x8 operator (indices 2i + j).
Matrix parity_block(const Matrix& a, int parity) {
  Matrix block(kDimAB, kDimAB);
  for (int j = 0; j < kDimAB; ++j) {
    for (int i = 0; i < kDimAB; ++i) block(i, j) = a(2 * i + parity, 2 * j + parity);
  }
  return block;
}

struct Reference {
  EigenSystem spectrum;  // of the (possibly regularized) reference Y
  double shrink = 1.0;   // dY / dZ(sigma)
};

// Z(sigma) is block diagonal in the Y1 parity; diagonalize the two 4x4 blocks.
Reference pinched_reference(const Matrix& sigma) {
  if (sigma.rows() != kDimABY || sigma.cols() != kDimABY) {
    throw InvalidInput("reference state must be 8x8");
  }
  Reference ref;
  ref.spectrum.eigenvalues.resize(kDimABY);
  ref.spectrum.eigenvectors = Matrix::Zero(kDimABY, kDimABY);
  const Matrix herm = hermitian_part(sigma);
  for (int parity = 0; parity < 2; ++parity) {
    const EigenSystem es = eig_hermitian(parity_block(herm, parity));
    for (int k = 0; k < kDimAB; ++k) {
      const int col = parity * kDimAB + k;
      ref.spectrum.eigenvalues(col) = es.eigenvalues(k);
      for (int i = 0; i < kDimAB; ++i) ref.spectrum.eigenvectors(2 * i + parity, col) = es.eigenvectors(i, k);
    }
  }
  if (ref.spectrum.eigenvalues.minCoeff() < kReferenceFloor) {
    ref.shrink = 1.0 - kReferenceMixing;
    for (int i = 0; i < kDimABY; ++i) {
      ref.spectrum.eigenvalues(i) =
          ref.shrink * ref.spectrum.eigenvalues(i) + kReferenceMixing / kDimABY;
    }
  }
  if (ref.spectrum.eigenvalues.minCoeff() <= 0.0) {
    throw InvalidInput("reference state Z(sigma) is not positive semidefinite");
  }
  return ref;
}

// Any L with L L^dag = rho.
Matrix psd_factor(const Matrix& rho) {
  Eigen::LLT<Matrix> llt(rho);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const EigenSystem es = eig_hermitian(hermitian_part(rho));
  return es.eigenvectors * es.eigenvalues.cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal();
}

Matrix spectral_map(const EigenSystem& es, const RealVector& values) {
  return es.eigenvectors * values.cast<Complex>().asDiagonal() * es.eigenvectors.adjoint();
}

RealVector powered(const RealVector& eigenvalues, double exponent, double threshold) {
  RealVector out(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    out(i) = eigenvalues(i) > threshold ? std::pow(eigenvalues(i), exponent) : 0.0;
  }
  return out;
}

double q_from_spectrum(const RealVector& xi, double beta, double threshold) {
  double q = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (xi(i) > threshold) q += std::pow(xi(i), beta);
  }
  return q;
}

void require_order(double beta) {
  if (!(beta > 0.5 && beta < 1.0)) {
    std::ostringstream msg;
    msg << "divergence order beta = " << beta << " outside (1/2, 1)";
    throw InvalidInput(msg.str());
  }
}

}  // namespace

double beta_of_alpha(double alpha) {
  if (!(alpha > 1.0)) throw InvalidInput("beta_of_alpha: alpha must exceed 1");
  return alpha / (2.0 * alpha - 1.0);
}

double sandwich_exponent(double beta) { return (1.0 - beta) / (2.0 * beta); }

DivergenceEvaluation renyi_divergence(const Matrix& x, const Matrix& y, double beta, double cutoff) {
  require_order(beta);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw InvalidInput("renyi_divergence: operand shapes differ");
  }
  const EigenSystem ey = eig_hermitian(y);
  if (!(ey.eigenvalues(0) > cutoff * ey.eigenvalues.maxCoeff())) {
    throw InvalidInput(
        "renyi_divergence: reference operator is rank deficient; mix it with a small multiple of "
        "the identity first");
  }
  const double mu = sandwich_exponent(beta);
  const Matrix y_mu = spectral_map(ey, powered(ey.eigenvalues, mu, 0.0));
  const EigenSystem exi = eig_hermitian(hermitian_part(y_mu * x * y_mu));
  if (exi.eigenvalues(0) < -1e-10 * std::max(1.0, exi.eigenvalues.maxCoeff())) {
    throw InvalidInput("renyi_divergence: first operand is not positive semidefinite");
  }
  const double threshold = cutoff * std::max(exi.eigenvalues.maxCoeff(), 0.0);
  DivergenceEvaluation out;
  out.q_functional = q_from_spectrum(exi.eigenvalues, beta, threshold);
  if (!(out.q_functional > 0.0)) throw NumericalError("renyi_divergence: Q vanished");
  out.value = std::log2(out.q_functional) / (beta - 1.0);
  out.xi_eigenvalues = exi.eigenvalues;
  return out;
}

RenyiObjective::RenyiObjective(double beta, KeyMapKraus kraus)
    : beta_(beta), mu_(sandwich_exponent(beta)), kraus_(std::move(kraus)), isometry_(kraus_.isometry()) {
  require_order(beta);
  for (int j = 0; j < 2; ++j) {
    d_blocks_[j].resize(kDimAB, kDimAB);
    for (int i = 0; i < kDimAB; ++i) d_blocks_[j].row(i) = isometry_.row(2 * i + j);
  }
}

// Xi = A A^dag with A = Y^mu K L (8x4) and rho = L L^dag, so Xi shares its
// nonzero spectrum with M = A^dag A = L^dag (K^dag Y^2mu K) L. K acts blockwise:
// its parity-j rows form D_j = I_A (x) sqrt(Lambda_j).
struct RenyiObjective::Factorization {
  Reference ref;
  std::array<Matrix, 2> y_mu_blocks;  // Y_j^mu
  Matrix factor;                      // L
  EigenSystem m_spectrum;             // of M
  double q = 0.0;
};

RenyiObjective::Factorization RenyiObjective::factorize(const Matrix& rho, const Matrix& sigma) const {
  if (rho.rows() != kDimAB || rho.cols() != kDimAB) throw InvalidInput("rho must be 4x4");
  Factorization f;
  f.ref = pinched_reference(sigma);
  Matrix compressed = Matrix::Zero(kDimAB, kDimAB);
  for (int j = 0; j < 2; ++j) {
    Matrix vecs(kDimAB, kDimAB);
    RealVector vals(kDimAB);
    for (int k = 0; k < kDimAB; ++k) {
      vals(k) = f.ref.spectrum.eigenvalues(j * kDimAB + k);
      for (int i = 0; i < kDimAB; ++i) vecs(i, k) = f.ref.spectrum.eigenvectors(2 * i + j, j * kDimAB + k);
    }
    f.y_mu_blocks[j] = vecs * powered(vals, mu_, 0.0).cast<Complex>().asDiagonal() * vecs.adjoint();
    const Matrix side = f.y_mu_blocks[j] * d_blocks_[j];
    compressed += side.adjoint() * side;
  }
  f.factor = psd_factor(hermitian_part(rho));
  f.m_spectrum = eig_hermitian(hermitian_part(f.factor.adjoint() * compressed * f.factor));
  const double threshold = kSupportCutoff * std::max(f.m_spectrum.eigenvalues.maxCoeff(), 0.0);
  f.q = q_from_spectrum(f.m_spectrum.eigenvalues, beta_, threshold);
  if (!(f.q > 0.0)) throw NumericalError("RenyiObjective: Q vanished");
  return f;
}

double RenyiObjective::value(const Matrix& rho, const Matrix& sigma) const {
  return std::log2(factorize(rho, sigma).q) / (beta_ - 1.0);
}

std::pair<Matrix, double> RenyiObjective::reference_update(const Matrix& rho,
                                                           const Matrix& sigma) const {
  const Factorization f = factorize(rho, sigma);
  const double threshold = kSupportCutoff * std::max(f.m_spectrum.eigenvalues.maxCoeff(), 0.0);
  // Xi^beta = A M^{beta-1} A^dag on the support.
  const Matrix m_pow = spectral_map(f.m_spectrum, powered(f.m_spectrum.eigenvalues, beta_ - 1.0, threshold));
  Matrix next = Matrix::Zero(kDimABY, kDimABY);
  for (int j = 0; j < 2; ++j) {
    const Matrix a = f.y_mu_blocks[j] * d_blocks_[j] * f.factor;
    const Matrix block = hermitian_part(a * m_pow * a.adjoint()) / f.q;
    for (int c = 0; c < kDimAB; ++c) {
      for (int r = 0; r < kDimAB; ++r) next(2 * r + j, 2 * c + j) = block(r, c);
    }
  }
  return {next, std::log2(f.q) / (beta_ - 1.0)};
}

BlockEvaluation RenyiObjective::evaluate(const Matrix& rho, const Matrix& sigma) const {
  const Reference ref = pinched_reference(sigma);
  const Matrix y_mu = spectral_map(ref.spectrum, powered(ref.spectrum.eigenvalues, mu_, 0.0));
  const Matrix x = isometry_ * rho * isometry_.adjoint();
  const EigenSystem exi = eig_hermitian(hermitian_part(y_mu * x * y_mu));
  const double threshold = kSupportCutoff * std::max(exi.eigenvalues.maxCoeff(), 0.0);
  const double q = q_from_spectrum(exi.eigenvalues, beta_, threshold);
  if (!(q > 0.0)) throw NumericalError("RenyiObjective: Q vanished");

  const Matrix xi_pow = spectral_map(exi, powered(exi.eigenvalues, beta_ - 1.0, threshold));
  const double scale = beta_ / ((beta_ - 1.0) * std::numbers::ln2 * q);

  // chi_2 = beta Y^mu Xi^{beta-1} Y^mu
  const Matrix grad_x = scale * (y_mu * xi_pow * y_mu);
  // chi_1 + chi_3 = beta T(A1 + A3), with A3 = A1^dag
  const Matrix a1 = x * y_mu * xi_pow;
  const Matrix grad_y = scale * frechet_power(ref.spectrum, mu_, a1 + a1.adjoint(), 0.0);

  BlockEvaluation out;
  out.value = std::log2(q) / (beta_ - 1.0);
  out.q_functional = q;
  out.grad_rho = hermitian_part(isometry_.adjoint() * grad_x * isometry_);
  out.grad_sigma = ref.shrink * hermitian_part(apply_pinching(grad_y));
  return out;
}

Matrix grad_rho(const Matrix& rho, const Matrix& sigma, double beta, const KeyMapKraus& k) {
  return RenyiObjective(beta, k).evaluate(rho, sigma).grad_rho;
}

Matrix grad_sigma(const Matrix& rho, const Matrix& sigma, double beta, const KeyMapKraus& k) {
  return RenyiObjective(beta, k).evaluate(rho, sigma).grad_sigma;
}

double objective_f(const ProtocolParams& params, const Matrix& rho, const Matrix& sigma,
                   const KeyMapKraus& k) {
  params.validate();
  const double beta = beta_of_alpha(params.alpha);
  const double divergence = RenyiObjective(beta, k).value(rho, sigma);
  return divergence - binary_entropy(effective_qber(params.p, params.q)) -
         finite_size_correction(params.alpha, params.epsilon) / static_cast<double>(params.m);
}

}  // namespace renyiqkd
