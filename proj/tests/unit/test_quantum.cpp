#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spintrace/quantum.hpp"

using namespace spintrace;

namespace {

HamiltonianSpec single(double c, std::vector<Factor> f) {
  HamiltonianSpec s;
  s.add(c, std::move(f));
  return s;
}

}  // namespace

TEST(SpinOperators, CommutatorAndCasimir) {
  const ModelContext ctx(1, 5, 0.3);
  const auto ops = build_spin_operators(ctx);
  const cplx ih(0.0, ctx.hbar);
  EXPECT_LT((ops.jx * ops.jy - ops.jy * ops.jx - ih * ops.jz).norm(), 1e-12);
  const CMatrix casimir = ops.jx * ops.jx + ops.jy * ops.jy + ops.jz * ops.jz;
  const double expect = ctx.hbar * ctx.hbar * ctx.j() * (ctx.j() + 1.0);
  EXPECT_LT((casimir - expect * CMatrix::Identity(6, 6)).norm(), 1e-12);
}

TEST(BuildHamiltonian, SingleJ3) {
  const ModelContext ctx(1, 2, 0.7);
  const CMatrix h = build_hamiltonian(single(1.0, {{1, 3}}), ctx);
  RVector d(3);
  d << -0.7, 0.0, 0.7;
  EXPECT_LT((h - d.cast<cplx>().asDiagonal().toDenseMatrix()).norm(), 1e-14);
}

TEST(BuildHamiltonian, IsingPairIsDiagonal) {
  const ModelContext ctx(2, 1, 1.3);
  const CMatrix h = build_hamiltonian(single(1.0, {{1, 3}, {2, 3}}), ctx);
  const double q = ctx.hbar * ctx.hbar / 4.0;
  // Basis order |m1 m2> with m ascending: (-,-), (-,+), (+,-), (+,+).
  RVector d(4);
  d << q, -q, -q, q;
  EXPECT_LT((h - d.cast<cplx>().asDiagonal().toDenseMatrix()).norm(), 1e-14);
}

TEST(BuildHamiltonian, HermitizesProducts) {
  const ModelContext ctx(1, 3, 1.0);
  const auto ops = build_spin_operators(ctx);
  const CMatrix h = build_hamiltonian(single(1.0, {{1, 1}, {1, 2}}), ctx);
  const CMatrix expect = 0.5 * (ops.jx * ops.jy + ops.jy * ops.jx);
  EXPECT_LT((h - expect).norm(), 1e-13);
  EXPECT_LT((h - h.adjoint()).norm(), 1e-14);
}

TEST(BuildHamiltonian, CapEnforced) {
  const ModelContext ctx(3, 30, 1.0);
  EXPECT_THROW(build_hamiltonian(single(1.0, {{1, 3}}), ctx), DimensionCapError);
}

TEST(CoherentState, Components) {
  const ModelContext ctx(1, 2, 1.0);
  const CVector c0 = coherent_state(cplx(0.0), ctx);
  EXPECT_EQ(c0(0), cplx(1.0));
  EXPECT_EQ(c0(1), cplx(0.0));
  const CVector c1 = coherent_state(cplx(1.0), ctx);
  EXPECT_NEAR(std::abs(c1(0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c1(1) - std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c1(2) - 1.0), 0.0, 1e-15);
}

TEST(CoherentState, MatchesExponentialOfRaisingOperator) {
  const ModelContext ctx(1, 4, 0.5);
  const auto ops = build_spin_operators(ctx);
  const CMatrix jplus = ops.jx + cplx(0.0, 1.0) * ops.jy;
  const cplx u(0.3, -0.8);
  CVector ket = CVector::Zero(5);
  ket(0) = 1.0;
  CVector term = ket, acc = ket;
  for (int k = 1; k <= 5; ++k) {
    term = (u / (ctx.hbar * k)) * (jplus * term);
    acc += term;
  }
  EXPECT_LT((acc - coherent_state(u, ctx)).norm(), 1e-12);
}

TEST(CoherentState, OverlapClosedForm) {
  const ModelContext half(1, 1, 1.0);
  const std::vector<cplx> one{1.0};
  EXPECT_NEAR(std::abs(coherent_overlap(one, one, half) - 2.0), 0.0, 1e-15);
  const ModelContext ctx(2, 5, 1.0);
  const std::vector<cplx> u{{0.2, 0.1}, {-0.7, 1.1}};
  const std::vector<cplx> v{{1.3, -0.4}, {0.5, 0.2}};
  cplx expect = 1.0;
  for (int i = 0; i < 2; ++i) expect *= std::pow(1.0 + v[i] * u[i], 5);
  EXPECT_LT(std::abs(coherent_overlap(v, u, ctx) - expect), 1e-12 * std::abs(expect));
}

TEST(ResolutionOfIdentity, SpinHalfAndFive) {
  EXPECT_LT(resolve_identity_residual(ModelContext(1, 1, 1.0), 64), 1e-10);
  EXPECT_LT(resolve_identity_residual(ModelContext(1, 10, 1.0), 128), 1e-8);
}

TEST(QSymbol, IdentityIsOne) {
  const ModelContext ctx(2, 3, 1.0);
  const auto one = single(1.0, {});
  const std::vector<cplx> u{{0.4, 0.2}, {1.5, -2.0}};
  const std::vector<cplx> v{{-0.3, 0.9}, {0.1, 0.1}};
  EXPECT_LT(std::abs(q_symbol(one, u, v, ctx) - 1.0), 1e-14);
}

TEST(QSymbol, J3ClosedForm) {
  const ModelContext ctx(1, 7, 0.4);
  const auto spec = single(1.0, {{1, 3}});
  const cplx u(0.6, -0.2), v(1.1, 0.3);
  const std::vector<cplx> us{u}, vs{v};
  const cplx expect = ctx.hbar * ctx.j() * (u * v - 1.0) / (u * v + 1.0);
  EXPECT_LT(std::abs(q_symbol(spec, us, vs, ctx) - expect), 1e-13);
  const std::vector<cplx> zero{0.0};
  EXPECT_LT(std::abs(q_symbol(spec, zero, zero, ctx) + ctx.hbar * ctx.j()), 1e-14);
}

TEST(QSymbol, AgreesWithDenseOperator) {
  const ModelContext ctx(2, 4, 0.6);
  HamiltonianSpec spec;
  spec.add(0.8, {{1, 1}, {1, 2}, {2, 3}});
  spec.add(-1.2, {{2, 1}, {2, 1}});
  spec.add(0.3, {{1, 3}});
  const CMatrix h = build_hamiltonian(spec, ctx);
  const std::vector<cplx> u{{0.3, 0.5}, {-0.9, 0.2}};
  const std::vector<cplx> v{{0.7, -0.1}, {0.4, 1.3}};
  const cplx a = q_symbol(spec, u, v, ctx);
  const cplx b = q_symbol_dense(h, u, v, ctx);
  EXPECT_LT(std::abs(a - b), 1e-12 * (1.0 + std::abs(b)));
}

TEST(QSymbol, RejectsVanishingOverlap) {
  const ModelContext ctx(1, 2, 1.0);
  const std::vector<cplx> u{1.0}, v{-1.0};
  EXPECT_THROW(q_symbol(single(1.0, {{1, 3}}), u, v, ctx), NumericError);
}

TEST(ExactSystem, TraceAndSpectrum) {
  const ModelContext ctx(1, 2, 0.5);
  const double omega = 1.7;
  const ExactSystem sys(single(omega, {{1, 3}}), ctx);
  ASSERT_EQ(sys.eigenvalues().size(), 3u);
  EXPECT_NEAR(sys.eigenvalues()[0], -ctx.hbar * omega, 1e-14);
  EXPECT_NEAR(sys.eigenvalues()[1], 0.0, 1e-14);
  EXPECT_NEAR(sys.eigenvalues()[2], ctx.hbar * omega, 1e-14);
  EXPECT_LT(std::abs(sys.propagator_trace(0.0) - 3.0), 1e-14);
  const double t = 0.83;
  cplx expect = 0.0;
  for (int m = -1; m <= 1; ++m) expect += std::polar(1.0, -omega * m * t);
  EXPECT_LT(std::abs(sys.propagator_trace(t) - expect), 1e-13);
}

TEST(ExactSystem, PropagatorMatchesTrace) {
  HamiltonianSpec spec;
  spec.add(1.0, {{1, 3}, {2, 3}});
  spec.add(0.4, {{1, 1}});
  spec.add(0.4, {{2, 1}});
  const ModelContext ctx(2, 3, 0.25);
  const ExactSystem sys(spec, ctx, kDefaultDimensionCap, true);
  const CMatrix u = sys.propagator(2.1);
  EXPECT_LT(std::abs(u.trace() - sys.propagator_trace(2.1)), 1e-12);
  EXPECT_LT((u * u.adjoint() - CMatrix::Identity(16, 16)).norm(), 1e-12);
}

TEST(Density, RejectsNonPositiveWidth) {
  const std::vector<double> lv{0.0}, grid{0.0};
  EXPECT_THROW(gaussian_density(lv, grid, 0.0), ValidationError);
}

TEST(Density, IntegratesToLevelCount) {
  const std::vector<double> lv{-1.0, 0.2, 0.25};
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(-5.0 + 10.0 * i / 4000);
  const auto d = gaussian_density(lv, grid, 0.1);
  double sum = 0.0;
  for (double x : d.value) sum += x * 10.0 / 4000;
  EXPECT_NEAR(sum, 3.0, 1e-10);
}
