#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "renyiqkd/protocol.hpp"

using namespace renyiqkd;

namespace {

int numerical_rank(const Matrix& a, double tol = 1e-10) {
  const EigenSystem e = eig_hermitian(a);
  int r = 0;
  for (int i = 0; i < e.dim(); ++i) r += e.eigenvalues[i] > tol;
  return r;
}

Matrix y1_projector(int j) {
  Matrix p = Matrix::Zero(8, 8);
  for (int i = 0; i < 4; ++i) p(2 * i + j, 2 * i + j) = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("povm_elements examples") {
  const Povm z = povm_elements(0.0);
  CHECK(std::abs(z.lambda0(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(z.lambda0(1, 1)) < 1e-15);
  CHECK(std::abs(z.lambda1(1, 1) - 1.0) < 1e-15);

  const Povm half = povm_elements(0.5);
  CHECK(max_abs(half.lambda0 - 0.5 * Matrix::Identity(2, 2)) < 1e-15);
  CHECK(max_abs(half.lambda1 - 0.5 * Matrix::Identity(2, 2)) < 1e-15);

  const Povm quarter = povm_elements(0.25);
  CHECK(std::abs(quarter.lambda0(0, 0) - 0.75) < 1e-15);
  CHECK(std::abs(quarter.lambda0(1, 1) - 0.25) < 1e-15);
  CHECK(std::abs(quarter.lambda1(0, 0) - 0.25) < 1e-15);
  CHECK(std::abs(quarter.lambda1(1, 1) - 0.75) < 1e-15);

  for (double q = 0.0; q <= 0.5; q += 0.05) {
    const Povm pv = povm_elements(q);
    CHECK(max_abs(pv.lambda0 + pv.lambda1 - Matrix::Identity(2, 2)) < 1e-15);
    CHECK(eig_hermitian(pv.lambda0).eigenvalues[0] >= 0.0);
    CHECK(eig_hermitian(pv.lambda1).eigenvalues[0] >= 0.0);
  }
  CHECK_THROWS_AS(povm_elements(-0.1), InvalidInput);
  CHECK_THROWS_AS(povm_elements(0.6), InvalidInput);
}

TEST_CASE("key_map_kraus completeness and special cases") {
  for (double q : {0.0, 0.1, 0.25, 0.4, 0.5}) {
    const KeyMapKraus k = key_map_kraus(q);
    CHECK(k.m0.rows() == 8);
    CHECK(k.m0.cols() == 4);
    const Matrix sum = k.m0.adjoint() * k.m0 + k.m1.adjoint() * k.m1;
    CHECK(max_abs(sum - Matrix::Identity(4, 4)) < 1e-12);
    CHECK(max_abs(k.m0.adjoint() * k.m1) < 1e-15);
    const Matrix iso = k.isometry();
    CHECK(max_abs(iso.adjoint() * iso - Matrix::Identity(4, 4)) < 1e-12);
  }
  // q = 0: M_j = I_A (x) Z_j (x) |j>; basis index 4a + 2b + y.
  const KeyMapKraus k0 = key_map_kraus(0.0);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int col = 2 * a + b;
      const Matrix& mj = b == 0 ? k0.m0 : k0.m1;
      CHECK(std::abs(mj(4 * a + 2 * b + b, col) - 1.0) < 1e-15);
      CHECK(std::abs(mj.col(col).norm() - 1.0) < 1e-15);
    }
  }
  const KeyMapKraus kh = key_map_kraus(0.5);
  for (const Matrix* mj : {&kh.m0, &kh.m1}) {
    for (int c = 0; c < 4; ++c) CHECK(std::abs(mj->col(c).norm() - std::sqrt(0.5)) < 1e-15);
  }
}

TEST_CASE("apply_key_map on the maximally mixed state") {
  const Matrix g = apply_key_map(Matrix::Identity(4, 4) / 4.0, key_map_kraus(0.0));
  const Matrix z = apply_pinching(g);
  CHECK(std::abs((y1_projector(0) * z).trace().real() - 0.5) < 1e-14);
  CHECK(std::abs((y1_projector(1) * z).trace().real() - 0.5) < 1e-14);
  CHECK(std::abs(g.trace().real() - 1.0) < 1e-14);
}

TEST_CASE("apply_key_map keeps the Bell state pure") {
  // Coherent key map: K |Phi+> is a single vector, so the output has rank 1.
  for (double q : {0.0, 0.2}) {
    const Matrix g = apply_key_map(bell_state(), key_map_kraus(q));
    CHECK(numerical_rank(g) == 1);
    CHECK(numerical_rank(apply_pinching(g)) == 2);
  }
}

TEST_CASE("apply_key_map preserves trace and positivity on random states") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double q = 0.5 * (trial % 11) / 10.0;
    const Matrix rho = oracle::random_density(4, rng, 0.0);
    const Matrix g = apply_key_map(rho, key_map_kraus(q));
    CHECK(std::abs(g.trace().real() - 1.0) < 1e-12);
    CHECK(eig_hermitian(g).eigenvalues[0] > -1e-12);
    const Matrix z = apply_pinching(g);
    CHECK(max_abs(y1_projector(0) * z * y1_projector(1)) == 0.0);
  }
}

TEST_CASE("apply_key_map_adjoint identities") {
  std::mt19937_64 rng(12);
  const KeyMapKraus k = key_map_kraus(0.3);
  CHECK(max_abs(apply_key_map_adjoint(Matrix::Identity(8, 8), k) - Matrix::Identity(4, 4)) < 1e-14);
  CHECK(max_abs(apply_key_map_adjoint(Matrix::Zero(8, 8), k)) == 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix w = oracle::random_hermitian(8, rng);
    const Matrix rho = oracle::random_density(4, rng);
    CHECK(std::abs(trace_product(w, apply_key_map(rho, k)) -
                   trace_product(apply_key_map_adjoint(w, k), rho)) < 1e-11);
  }
  CHECK_THROWS_AS(apply_key_map(Matrix::Identity(3, 3), k), InvalidInput);
  CHECK_THROWS_AS(apply_key_map_adjoint(Matrix::Identity(4, 4), k), InvalidInput);
}

TEST_CASE("apply_pinching is idempotent, self-adjoint and fixes block-diagonal input") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix s = oracle::random_hermitian(8, rng);
    const Matrix w = oracle::random_hermitian(8, rng);
    const Matrix zs = apply_pinching(s);
    CHECK(max_abs(apply_pinching(zs) - zs) == 0.0);
    CHECK(std::abs(trace_product(w, zs) - trace_product(apply_pinching(w), s)) < 1e-12);
    CHECK(std::abs(zs.trace().real() - s.trace().real()) < 1e-12);
  }
  const Matrix block = y1_projector(0) * 0.3 + y1_projector(1) * 0.2;
  CHECK(max_abs(apply_pinching(block) - block) == 0.0);
}

TEST_CASE("qber_projectors") {
  const QberProjectors pr = qber_projectors();
  for (const Matrix* p : {&pr.x_err, &pr.z_err}) {
    CHECK(max_abs(*p * *p - *p) < 1e-14);
    CHECK(std::abs(p->trace().real() - 2.0) < 1e-14);
  }
  CHECK(std::abs(pr.z_err(1, 1) - 1.0) < 1e-15);
  CHECK(std::abs(pr.z_err(2, 2) - 1.0) < 1e-15);
  CHECK(std::abs(trace_product(pr.z_err, bell_state())) < 1e-15);
  for (double v : {0.0, 0.3, 0.78, 1.0}) {
    CHECK(std::abs(trace_product(pr.x_err, werner_state(v)) - (1 - v) / 2) < 1e-14);
  }
}

TEST_CASE("Werner(1 - 2p) meets every constraint exactly") {
  const QberProjectors pr = qber_projectors();
  for (double p = 0.0; p <= 0.5; p += 0.01) {
    const Matrix w = werner_state(1.0 - 2.0 * p);
    CHECK(std::abs(trace_product(pr.x_err, w) - p) < 1e-14);
    CHECK(std::abs(trace_product(pr.z_err, w) - p) < 1e-14);
    Matrix rho_a(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int a2 = 0; a2 < 2; ++a2) rho_a(a, a2) = w(2 * a, 2 * a2) + w(2 * a + 1, 2 * a2 + 1);
    CHECK(max_abs(rho_a - 0.5 * Matrix::Identity(2, 2)) < 1e-15);
  }
}

TEST_CASE("effective_qber") {
  CHECK(effective_qber(0.11, 0.0) == doctest::Approx(0.11));
  CHECK(effective_qber(0.11, 0.5) == doctest::Approx(0.5));
  CHECK(std::abs(effective_qber(0.11, 0.077) - 0.17006) < 1e-5);
  for (double p = 0.0; p <= 0.5; p += 0.05)
    for (double q = 0.0; q <= 0.5; q += 0.05) CHECK(effective_qber(p, q) == effective_qber(q, p));
  CHECK_THROWS_AS(effective_qber(0.6, 0.1), InvalidInput);
  CHECK_THROWS_AS(effective_qber(0.1, -0.1), InvalidInput);
}

TEST_CASE("binary_entropy") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
  CHECK(std::abs(binary_entropy(0.11) - 0.49992) < 1e-4);
  CHECK_THROWS_AS(binary_entropy(1.5), InvalidInput);
}

TEST_CASE("ProtocolParams validation") {
  ProtocolParams ok;
  ok.p = 0.1;
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.m = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ok;
  bad.q = 0.51;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

}  // TEST_SUITE
