#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spintrace/classical.hpp"
#include "spintrace/symplectic.hpp"

using namespace spintrace;

TEST(HessianFromMonodromy, TwoByTwoArithmetic) {
  CMatrix m(2, 2);
  m << 2.0, 1.0, 1.0, 1.0;
  const CMatrix h = hessian_from_monodromy(m);
  CMatrix expect(2, 2);
  expect << 1.0, 0.0, 0.0, -1.0;
  EXPECT_LT((h - expect).norm(), 1e-15);
  EXPECT_LT(three_dets_residual(m), 1e-15);
  EXPECT_NEAR(std::abs(m(1, 1) * h.determinant() - cplx(-1.0)), 0.0, 1e-15);
}

TEST(HessianFromMonodromy, IdentityGivesZero) {
  const CMatrix id = CMatrix::Identity(4, 4);
  EXPECT_LT(hessian_from_monodromy(id).norm(), 1e-15);
  EXPECT_LT(std::abs((id - id).determinant()), 1e-15);
  EXPECT_LT(three_dets_residual(id), 1e-15);
}

TEST(HessianFromMonodromy, SingularBlockRejected) {
  CMatrix m(2, 2);
  m << 0.0, 1.0, -1.0, 0.0;
  EXPECT_THROW(hessian_from_monodromy(m), NumericError);
}

TEST(HessianFromMonodromy, RoundTripAndSymmetry) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    const CMatrix m = random_symplectic(n, rng, 0.4);
    ASSERT_LT(symplectic_residual(m), 1e-10);
    const CMatrix h = hessian_from_monodromy(m);
    EXPECT_LT(symmetry_residual(h), 1e-10);
    EXPECT_LT((monodromy_from_hessian(h) - m).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ThreeDeterminants, RandomSymplecticMatrices) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 10;
    const CMatrix m = random_symplectic(n, rng, 0.6 / std::sqrt(n));
    worst = std::max(worst, three_dets_residual(m));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(ThreeDeterminants, HessianPairSeparation) {
  std::mt19937_64 rng(5);
  const CMatrix m = random_symplectic(2, rng, 0.4);
  CVector s(2);
  s << cplx(0.3, -0.4), cplx(1.2, 0.5);
  const auto hp = hessian_pair(m, s, 1.7);
  CMatrix shift = CMatrix::Zero(4, 4);
  shift.topLeftCorner(2, 2) = hp.a.asDiagonal();
  shift.bottomRightCorner(2, 2) = hp.d.asDiagonal();
  shift.topRightCorner(2, 2).setIdentity();
  shift.bottomLeftCorner(2, 2).setIdentity();
  EXPECT_LT((hp.h_f - hp.h_s - shift).norm(), 1e-14);
  EXPECT_LT(symmetry_residual(hp.h_s), 1e-10);
  // A = -B^-2 D^*, B = 2iJ/(1+|s|^2)^2.
  for (int i = 0; i < 2; ++i) {
    const double q = 1.0 + std::norm(s(i));
    const cplx b = cplx(0.0, 3.4) / (q * q);
    EXPECT_LT(std::abs(hp.a(i) * b * b + std::conj(hp.d(i))), 1e-12);
  }
}

TEST(SymplecticInvariance, IdentityRandomAndRescaling) {
  std::mt19937_64 rng(9);
  const CMatrix m = random_symplectic(2, rng, 0.5);
  EXPECT_LT(symplectic_invariance_residual(m, CMatrix::Identity(4, 4)), 1e-14);
  for (int trial = 0; trial < 100; ++trial) {
    const CMatrix w = random_symplectic(2, rng, 0.4);
    EXPECT_LT(symplectic_invariance_residual(m, w), 1e-9);
  }
  CVector scale(4);
  scale << 2.0, cplx(0.0, 3.0), 0.5, cplx(0.0, -1.0 / 3.0);
  const CMatrix w = scale.asDiagonal();
  ASSERT_LT(symplectic_residual(w), 1e-14);
  EXPECT_LT(symplectic_invariance_residual(m, w), 1e-9);
}

namespace {

// Builds M = W0 m0 W0^-1 with a prescribed block form.
struct Synthetic {
  CMatrix m;
  CVector flow;
  CVector grad;
};

Synthetic synthetic(int n, double k, const std::vector<double>& lambdas,
                    std::mt19937_64& rng) {
  CMatrix m0 = CMatrix::Zero(2 * n, 2 * n);
  m0(0, 0) = 1.0;
  m0(n, n) = 1.0;
  m0(0, n) = -k;
  for (int i = 1; i < n; ++i) {
    m0(i, i) = lambdas[i - 1];
    m0(n + i, n + i) = 1.0 / lambdas[i - 1];
  }
  const CMatrix w0 = random_real_symplectic(n, rng, 0.4);
  Synthetic out;
  out.m = w0 * m0 * w0.inverse();
  out.flow = w0.col(0);
  out.grad = -symplectic_form(n) * out.flow;
  return out;
}

}  // namespace

TEST(GeneralizedEigensystem, RecoversBlockForm) {
  std::mt19937_64 rng(77);
  const auto sy = synthetic(3, -0.8, {0.25, -0.5}, rng);
  const auto red = generalized_eigensystem(sy.m, sy.flow, sy.grad);
  EXPECT_NEAR(red.k, -0.8, 1e-9);
  ASSERT_EQ(red.pairs.size(), 2u);
  std::vector<double> got{red.pairs[0].lambda.real(), red.pairs[1].lambda.real()};
  std::sort(got.begin(), got.end());
  EXPECT_NEAR(got[0], -0.5, 1e-9);
  EXPECT_NEAR(got[1], 0.25, 1e-9);
  EXPECT_TRUE(red.usable);
  EXPECT_LT(red.w_symplectic_residual, 1e-8);
  const double expect = (2 - 0.25 - 4.0) * (2 + 0.5 + 2.0);
  EXPECT_NEAR(red.det_red_minus_one, expect, 1e-9 * std::abs(expect));
  EXPECT_NEAR(std::abs((red.m_red - CMatrix::Identity(4, 4)).determinant()),
              std::abs(expect), 1e-8 * std::abs(expect));
  EXPECT_NEAR(std::abs(red.m(0, 3) - 0.8), 0.0, 1e-8);  // -k
}

TEST(GeneralizedEigensystem, HyperbolicPairDeterminant) {
  std::mt19937_64 rng(8);
  const double lam = 0.1;
  const auto sy = synthetic(2, 1.3, {lam}, rng);
  const auto red = generalized_eigensystem(sy.m, sy.flow, sy.grad);
  ASSERT_EQ(red.pairs.size(), 1u);
  EXPECT_EQ(red.pairs[0].kind, StabilityKind::hyperbolic);
  EXPECT_NEAR(red.det_red_minus_one, 2 - lam - 1 / lam, 1e-8);
  EXPECT_NEAR(red.k, 1.3, 1e-9);
}

TEST(GeneralizedEigensystem, OneDegreeOfFreedomIsEmpty) {
  std::mt19937_64 rng(4);
  const auto sy = synthetic(1, 2.5, {}, rng);
  const auto red = generalized_eigensystem(sy.m, sy.flow, sy.grad);
  EXPECT_EQ(red.m_red.size(), 0);
  EXPECT_TRUE(red.pairs.empty());
  EXPECT_DOUBLE_EQ(red.det_red_minus_one, 1.0);
  EXPECT_NEAR(red.k, 2.5, 1e-10);
  EXPECT_LT(red.w_symplectic_residual, 1e-8);
}

TEST(GeneralizedEigensystem, EllipticPairLabeled) {
  std::mt19937_64 rng(12);
  const double alpha = 0.9;
  CMatrix m0 = CMatrix::Zero(4, 4);
  m0(0, 0) = m0(2, 2) = 1.0;
  m0(0, 2) = -0.4;
  m0(1, 1) = m0(3, 3) = std::cos(alpha);
  m0(1, 3) = std::sin(alpha);
  m0(3, 1) = -std::sin(alpha);
  const CMatrix w0 = random_real_symplectic(2, rng, 0.3);
  const CMatrix m = w0 * m0 * w0.inverse();
  const CVector f = w0.col(0);
  const auto red = generalized_eigensystem(m, f, -symplectic_form(2) * f);
  ASSERT_EQ(red.pairs.size(), 1u);
  EXPECT_EQ(red.pairs[0].kind, StabilityKind::elliptic);
  EXPECT_TRUE(red.has_elliptic);
  EXPECT_NEAR(red.det_red_minus_one, 2 - 2 * std::cos(alpha), 1e-9);
}
