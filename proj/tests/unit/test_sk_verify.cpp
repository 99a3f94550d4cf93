#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spintrace/quantum.hpp"
#include "spintrace/sk_verify.hpp"

using namespace spintrace;

namespace {

HamiltonianSpec single(double c, std::vector<Factor> f) {
  HamiltonianSpec s;
  s.add(c, std::move(f));
  return s;
}

ClassicalState point(cplx u, cplx v) {
  ClassicalState s(1);
  s.u(0) = u;
  s.v(0) = v;
  return s;
}

cplx n3(cplx u, cplx v) { return (u * v - 1.0) / (1.0 + u * v); }

}  // namespace

TEST(SkCorrection, VanishesForConstant) {
  const ClassicalHamiltonian h(single(2.0, {}), ModelContext::with_fixed_j_class(1, 6, 1.0));
  EXPECT_EQ(z_correction(h, point(0.4, -0.3)), cplx(0.0));
}

TEST(SkCorrection, LinearTermClosedForm) {
  const double omega = 1.7;
  const ClassicalHamiltonian h(single(omega, {{1, 3}}),
                               ModelContext::with_fixed_j_class(1, 6, 1.3));
  EXPECT_NEAR(std::abs(z_correction(h, point(0.0, 0.0)) - 0.5 * omega), 0.0, 1e-14);
  std::mt19937_64 rng(4);
  for (const auto& p : interior_samples(1, 20, rng)) {
    const cplx expected = -0.5 * omega * n3(p.u(0), p.v(0));
    EXPECT_LT(std::abs(z_correction(h, p) - expected), 1e-12 * std::abs(expected));
  }
}

TEST(SkCorrection, LinearSymbolIsExact) {
  std::mt19937_64 rng(5);
  const auto pts = near_real_samples(1, 20, rng);
  const auto rep = verify_hprime(single(1.0, {{1, 3}}), 1, {2, 8, 40}, pts);
  EXPECT_TRUE(rep.exact);
  for (const auto& l : rep.levels) EXPECT_LT(l.max_residual, 1e-12);
}

TEST(SkCorrection, QuadraticResidualScalesAsHbarSquared) {
  std::mt19937_64 rng(6);
  const std::vector<int> tj{10, 20, 40, 80, 160};
  const auto one = verify_hprime(single(0.5, {{1, 3}, {1, 3}}), 1, tj,
                                 near_real_samples(1, 20, rng));
  EXPECT_FALSE(one.exact);
  EXPECT_NEAR(one.slope, 2.0, 0.1);
  const auto two = verify_hprime(single(1.0, {{1, 1}, {2, 1}}), 2, tj,
                                 near_real_samples(2, 20, rng));
  EXPECT_NEAR(two.slope, 2.0, 0.1);
}

TEST(SkCorrection, ScalingNeedsADecade) {
  std::mt19937_64 rng(7);
  const auto pts = near_real_samples(1, 3, rng);
  EXPECT_THROW(verify_hprime(single(1.0, {{1, 3}}), 1, {10, 40}, pts), ValidationError);
  EXPECT_THROW(verify_hprime(single(1.0, {{1, 3}}), 1, {10}, pts), ValidationError);
}

TEST(SkCorrection, IntegralOverPrecessionPeriod) {
  const double omega = 2.0;
  const ClassicalHamiltonian h(single(omega, {{1, 3}}),
                               ModelContext::with_fixed_j_class(1, 10, 1.0));
  const double c = 0.3;
  const auto start = ClassicalState::from_angles(std::vector<double>{std::acos(c)},
                                                 std::vector<double>{0.4});
  const double period = 2.0 * kPi / omega;
  const int steps = 64;
  cplx integral = 0.0;
  ClassicalState s = start;
  for (int k = 0; k < steps; ++k) {
    const cplx z0 = z_correction(h, s);
    s = evolve(h, s, period / steps).final_state;
    integral += 0.5 * (z0 + z_correction(h, s)) * (period / steps);
  }
  EXPECT_NEAR(integral.real(), -0.5 * omega * c * period, 1e-9);
  EXPECT_NEAR(integral.imag(), 0.0, 1e-9);
}

TEST(OneSiteSymbol, AgreesWithDenseWhereConditioned) {
  const ModelContext ctx{1, 6, 0.4};
  std::mt19937_64 rng(8);
  for (const auto& spec : single_site_monomials(3)) {
    const CMatrix op = spec.terms.front().factors.empty()
                           ? CMatrix::Identity(7, 7)
                           : build_hamiltonian(spec, ctx);
    for (const auto& p : near_real_samples(1, 5, rng)) {
      const cplx u = p.u(0), v = p.v(0);
      const cplx dense = q_symbol_dense(op, std::span<const cplx>(&u, 1),
                                        std::span<const cplx>(&v, 1), ctx);
      EXPECT_LT(std::abs(q_symbol_one_site(spec, u, v, ctx) - dense),
                1e-12 * std::max(1.0, std::abs(dense)))
          << spec.to_string();
    }
  }
}

TEST(OneSiteSymbol, AccurateNearOrthogonalLabels) {
  const ModelContext ctx{1, 40, 0.1};
  // 1 + uv = 0.15i: the plain ratio <V*|J3|U> / <V*|U> loses every digit here.
  const cplx u = std::polar(1.2, 0.3);
  const cplx v = cplx(-1.0, 0.15) / u;
  const cplx exact = ctx.hbar * ctx.j() * n3(u, v);
  const cplx got = q_symbol_one_site(single(1.0, {{1, 3}}), u, v, ctx);
  EXPECT_LT(std::abs(got - exact), 1e-12 * std::abs(exact));
}

TEST(Recursion, IdentityAndLinear) {
  const ModelContext ctx{1, 4, 0.7};
  std::mt19937_64 rng(9);
  const auto pts = interior_samples(1, 20, rng);
  EXPECT_LT(verify_recursion(single(1.0, {}), ctx, 3, pts).max_residual, 1e-8);
  EXPECT_LT(verify_recursion(single(1.0, {{1, 3}}), ctx, 3, pts).max_residual, 1e-8);
  EXPECT_LT(verify_recursion(single(1.0, {{1, 3}}), ctx, 1, pts).max_residual, 1e-8);
}

TEST(Recursion, AllLowDegreeMonomials) {
  std::mt19937_64 rng(10);
  const auto pts = interior_samples(1, 20, rng);
  for (int twice_j : {1, 20}) {
    const ModelContext ctx{1, twice_j, 0.7};
    for (const auto& spec : single_site_monomials(2))
      for (int m = 1; m <= 3; ++m)
        EXPECT_LT(verify_recursion(spec, ctx, m, pts).max_residual, 1e-8)
            << spec.to_string() << " m=" << m << " 2j=" << twice_j;
  }
}

TEST(Recursion, Validation) {
  const ModelContext ctx{2, 2, 0.5};
  std::mt19937_64 rng(12);
  const auto pts = interior_samples(1, 2, rng);
  EXPECT_THROW(verify_recursion(single(1.0, {}), ctx, 3, pts), ValidationError);
  const ModelContext one{1, 2, 0.5};
  EXPECT_THROW(verify_recursion(single(1.0, {}), one, 0, pts), ValidationError);
  EXPECT_THROW(verify_recursion(single(1.0, {{2, 3}}), one, 3, pts), ValidationError);
}

TEST(Monomials, CountsWords) {
  EXPECT_EQ(single_site_monomials(0).size(), 1u);
  EXPECT_EQ(single_site_monomials(3).size(), 1u + 3u + 9u + 27u);
}
