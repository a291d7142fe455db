#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace renyiqkd {

using Complex = std::complex<double>;

/// Largest operator dimension handled by the library (A x B x Y1 = 8).
inline constexpr int kMaxDim = 8;

/// Dense complex matrix with inline storage for dimensions up to kMaxDim.
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using RealVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Relative eigenvalue threshold separating support from kernel.
inline constexpr double kSupportCutoff = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;

/// Raised when an input violates a structural precondition (shape, Hermiticity, PSD, range).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine detects a breakdown it cannot recover from.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenSystem {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // columns, unitary

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  Matrix reconstruct() const;
};

double max_abs(const Matrix& a);
bool is_hermitian(const Matrix& a, double tol = kHermitianTolerance);
Matrix hermitian_part(const Matrix& a);

/// Re tr(A B); exact trace pairing for Hermitian arguments.
double trace_product(const Matrix& a, const Matrix& b);

/// Eigendecomposition of a Hermitian matrix. Asymmetry above kHermitianTolerance
/// (relative to the largest entry) is rejected.
EigenSystem eig_hermitian(const Matrix& h);

/// Y^mu on the support of a PSD matrix. Eigenvalues at or below
/// cutoff * lambda_max are treated as kernel and mapped to zero for every mu,
/// so negative mu yields the pseudo-inverse power.
Matrix power_psd(const Matrix& y, double mu, double cutoff = kSupportCutoff);
Matrix power_psd(const EigenSystem& y, double mu, double cutoff = kSupportCutoff);

/// Orthogonal projector onto the support of a PSD matrix.
Matrix support_projector(const EigenSystem& y, double cutoff = kSupportCutoff);

/// Frechet derivative of Y -> Y^mu at Y in direction delta, via first divided
/// differences of t^mu in the eigenbasis of Y (Daleckii-Krein).
Matrix frechet_power(const Matrix& y, double mu, const Matrix& delta, double cutoff = kSupportCutoff);
Matrix frechet_power(const EigenSystem& y, double mu, const Matrix& delta, double cutoff = kSupportCutoff);

/// Same derivative from the resolvent integral
///   sin(pi mu)/pi * int_0^inf (Y+s)^-1 delta (Y+s)^-1 s^mu ds,
/// valid for 0 < mu < 1 and positive definite Y. Slow; used to cross-check frechet_power.
Matrix frechet_power_quadrature(const Matrix& y, double mu, const Matrix& delta, double tol = 1e-13);

}  // namespace renyiqkd
