#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spintrace/semiclassics.hpp"

using namespace spintrace;

namespace {

ModelContext single_site(int twice_j) {
  ModelContext ctx;
  ctx.n_sites = 1;
  ctx.twice_j = twice_j;
  ctx.hbar = 1.0 / (0.5 * twice_j + 0.5);
  return ctx;
}

HamiltonianSpec tilted_top(double c) {
  HamiltonianSpec s;
  s.add(0.5, {{1, 3}, {1, 3}});
  s.add(c, {{1, 1}});
  return s;
}

ClassicalHamiltonian coupled_tops() {
  HamiltonianSpec s;
  s.add(1.0, {{1, 3}});
  s.add(1.0, {{2, 3}});
  s.add(3.0, {{1, 1}, {2, 1}});
  return {s, ModelContext::with_fixed_j_class(2, 10, 1.0)};
}

PeriodicOrbit first_primitive(const std::vector<PeriodicOrbit>& orbits) {
  for (const auto& o : orbits)
    if (o.repetitions == 1) return o;
  throw std::runtime_error("no primitive orbit");
}

}  // namespace

TEST(Propagator, LinearHamiltonianMatchesClosedForm) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mod(0.2, 2.5), ang(-kPi, kPi), wt(0.05, 6.2);
  const double omega = 0.8;
  for (int twice_j : {1, 10}) {
    const auto ctx = single_site(twice_j);
    HamiltonianSpec s;
    s.add(omega, {{1, 3}});
    const ClassicalHamiltonian h(s, ctx);
    EvolveOptions o;
    o.rel_tol = 1e-13;
    o.abs_tol = 1e-15;
    for (int k = 0; k < 5; ++k) {
      CVector u(1), v(1);
      u(0) = std::polar(mod(rng), ang(rng));
      v(0) = std::polar(mod(rng), ang(rng));
      const double t = wt(rng) / omega;
      const auto sol = semiclassical_propagator(h, u, v, t, o);
      const double j = ctx.j();
      const cplx closed = std::exp(cplx(0, omega * t * j)) *
                          std::pow(1.0 + v(0) * u(0) * std::exp(cplx(0, -omega * t)), 2 * j);
      EXPECT_LT(std::abs(sol.propagator - closed), 1e-10 * std::abs(closed));
    }
  }
}

TEST(Propagator, ZeroTimeIsOverlap) {
  const auto ctx = single_site(6);
  const ClassicalHamiltonian h(tilted_top(0.7), ctx);
  CVector u(1), v(1);
  u(0) = cplx(0.3, -0.4);
  v(0) = cplx(1.1, 0.2);
  const auto sol = semiclassical_propagator(h, u, v, 0.0);
  const cplx overlap = std::pow(1.0 + u(0) * v(0), 6);
  EXPECT_LT(std::abs(sol.propagator - overlap), 1e-12 * std::abs(overlap));
}

TEST(Propagator, NonlinearApproachesExactForLargeSpin) {
  // Relative error of the leading-order propagator shrinks with j.
  double prev = 1.0;
  for (int twice_j : {10, 40}) {
    const auto ctx = single_site(twice_j);
    const auto spec = tilted_top(0.7);
    const ClassicalHamiltonian h(spec, ctx);
    const ExactSystem ex(spec, ctx, kDefaultDimensionCap, true);
    CVector u(1), v(1);
    u(0) = cplx(0.5, 0.1);
    v(0) = cplx(0.45, -0.15);
    const double t = 0.7;
    const auto sol = semiclassical_propagator(h, u, v, t);
    const CVector cu = coherent_state(u(0), ctx), cv = coherent_state(v(0), ctx);
    const cplx exact = cv.transpose() * ex.propagator(t) * cu;
    const double err = std::abs(sol.propagator - exact) / std::abs(exact);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(TraceSum, EmptyIsZero) {
  const auto sum = trace_K_semiclassical(std::span<const PeriodicOrbit>{}, 0.1);
  EXPECT_EQ(sum.value, cplx(0.0));
  EXPECT_EQ(sum.used, 0);
}

TEST(TraceSum, OneDegreeOfFreedomModulus) {
  const auto ctx = single_site(20);
  const ClassicalHamiltonian h(tilted_top(1.5), ctx);
  OrbitSearchConfig cfg;
  cfg.random_seeds = 4;
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(0.2, 1.0, 9.0), cfg);
  ASSERT_GE(orbits.size(), 2u);
  const auto& once = orbits[0];
  const auto& twice = orbits[1];
  ASSERT_EQ(once.repetitions, 1);
  ASSERT_EQ(twice.repetitions, 2);
  const double hbar = ctx.hbar;
  const std::vector<PeriodicOrbit> single{once};
  const auto sum = trace_K_semiclassical(single, hbar);
  EXPECT_NEAR(std::abs(sum.value), once.period / std::sqrt(2 * kPi * hbar * std::abs(once.k)),
              1e-12);
  // The repetition enters with its primitive period.
  const std::vector<PeriodicOrbit> rep{twice};
  EXPECT_NEAR(std::abs(trace_K_semiclassical(rep, hbar).value),
              once.period / std::sqrt(2 * kPi * hbar * std::abs(twice.k)), 1e-9);
  EXPECT_NEAR(twice.k, 2.0 * once.k, 1e-5 * std::abs(once.k));
}

TEST(TraceSum, MixedDurationsRejected) {
  PeriodicOrbit a, b;
  a.period = 1.0;
  b.period = 2.0;
  const std::vector<PeriodicOrbit> both{a, b};
  EXPECT_THROW(trace_K_semiclassical(both, 0.1), ValidationError);
}

TEST(TraceSum, DegenerateFamilyExcluded) {
  HamiltonianSpec s;
  s.add(1.0, {{1, 3}});
  const ClassicalHamiltonian h(s, single_site(10));
  OrbitSearchConfig cfg;
  cfg.random_seeds = 2;
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(0.3, 5.0, 7.0), cfg);
  ASSERT_FALSE(orbits.empty());
  const std::vector<PeriodicOrbit> one{orbits[0]};
  const auto sum = trace_K_semiclassical(one, 0.1);
  EXPECT_EQ(sum.used, 0);
  EXPECT_EQ(sum.excluded, 1);
  EXPECT_EQ(sum.value, cplx(0.0));
}

TEST(TraceSum, AmplitudeIndependentOfStartingPoint) {
  const auto h = coupled_tops();
  OrbitSearchConfig cfg;
  cfg.random_seeds = 12;
  cfg.rng_seed = 3;
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(-0.5, 1.0, 5.0), cfg);
  const auto o = first_primitive(orbits);
  ASSERT_TRUE(exclusion_reason(o).empty());
  EvolveOptions opts = cfg.integration;
  const auto moved = evolve(h, o.initial, 0.37 * o.period, opts).final_state;
  const auto other = characterize_orbit(h, moved, o.period, cfg);
  const double hbar = 0.05;
  const cplx a = orbit_trace_amplitude(o, hbar), b = orbit_trace_amplitude(other, hbar);
  EXPECT_LT(std::abs(a - b), 1e-6 * std::abs(a));
  EXPECT_NEAR(repeated_stability_factor(o, 1),
              1.0 / std::sqrt(std::abs(o.reduced.det_red_minus_one)), 1e-12);
}

TEST(Family, LegendreDerivativeIsPeriod) {
  const auto ctx = single_site(20);
  const ClassicalHamiltonian h(tilted_top(1.5), ctx);
  OrbitSearchConfig cfg;
  cfg.random_seeds = 4;
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(0.4, 1.0, 6.0), cfg);
  const auto start = first_primitive(orbits);
  const double e0 = start.energy, de = 1e-4;
  const std::vector<double> energies{e0 - 2 * de, e0 - de, e0 + de, e0 + 2 * de};
  const auto fam = continue_family(h, start, energies, cfg);
  ASSERT_EQ(fam.orbits.size(), 4u);
  const auto& o = fam.orbits;
  const double d1 = (legendre_action(o[2]) - legendre_action(o[1])) / (2 * de);
  const double d2 = (legendre_action(o[3]) - legendre_action(o[0])) / (4 * de);
  EXPECT_NEAR((4 * d1 - d2) / 3, start.period, 1e-6);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(o[i].energy, energies[i], 1e-10);
}

TEST(Density, PeaksSitOnEigenvalues) {
  const auto ctx = single_site(20);
  const auto spec = tilted_top(1.5);
  const ClassicalHamiltonian h(spec, ctx);
  const auto levels = exact_spectrum(spec, ctx);
  OrbitSearchConfig cfg;
  cfg.random_seeds = 4;
  const auto orbits = find_periodic_orbits(h, SearchWindow::at_energy(0.0, 1.0, 6.0), cfg);
  const auto start = first_primitive(orbits);
  // Grid made of the eigenvalues and the midpoints between neighbours.
  std::vector<double> grid;
  for (std::size_t i = 7; i + 8 < levels.size(); ++i) {
    grid.push_back(levels[i]);
    grid.push_back(0.5 * (levels[i] + levels[i + 1]));
  }
  const std::vector<OrbitFamily> fams{continue_family(h, start, grid, cfg)};
  ASSERT_EQ(fams[0].orbits.size(), grid.size());
  const double spacing = (levels.back() - levels.front()) / levels.size();
  const auto d = density_osc(fams, grid, ctx.hbar, 0.25 * spacing, 8);
  for (std::size_t i = 0; i + 1 < grid.size(); i += 2) {
    EXPECT_GT(d.value[i], 0.0);
    EXPECT_GT(d.value[i], d.value[i + 1]);
  }
}

TEST(Fourier, ExactTraceSymmetries) {
  const auto ctx = single_site(8);
  const ExactSystem ex(tilted_top(0.9), ctx);
  EXPECT_NEAR(std::abs(ex.propagator_trace(0.0) - 9.0), 0.0, 1e-12);
  const cplx a = ex.propagator_trace(1.3), b = ex.propagator_trace(-1.3);
  EXPECT_LT(std::abs(a - std::conj(b)), 1e-12);
  const std::vector<double> times{0.0, 1.0};
  const auto f = fourier_peaks(ex.eigenvalues(), ctx.hbar, 0.0, 1.0, 0.1, times);
  EXPECT_EQ(f[0], 0.0);
}
