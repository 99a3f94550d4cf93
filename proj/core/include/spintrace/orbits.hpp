#pragma once

// Real periodic orbits of the classical flow: multiple-shooting Newton in
// real coordinates (Re u, Im u) per site, repetition detection, monodromy
// and the period derivative dT/dE.

#include <cstdint>
#include <optional>
#include <vector>

#include "spintrace/classical.hpp"
#include "spintrace/symplectic.hpp"

namespace spintrace {

struct OrbitSearchConfig {
  /// Random seeds drawn uniformly on the product of spheres and projected
  /// onto the energy shell.
  std::size_t random_seeds = 32;
  std::vector<ClassicalState> explicit_seeds;
  std::uint64_t rng_seed = 1;
  /// Optional Poincare section for seeds: component index into the stacked
  /// unit vectors (3N entries) and its level. Negative index disables it.
  int section_index = -1;
  double section_level = 0.0;

  int shooting_segments = 1;
  double newton_tol = 1e-10;
  int max_iterations = 40;
  double closure_tol = 1e-8;
  double dedup_distance = 1e-6;
  /// Close-return threshold (unit-vector distance) for period guesses.
  double return_radius = 0.4;
  int guesses_per_seed = 3;
  int max_repetitions = 12;

  /// Energy step for the dT/dE continuation; zero skips it and uses the
  /// value read off the monodromy.
  double continuation_step = 1e-4;

  EvolveOptions integration{};
  unsigned threads = 1;

  void validate() const;
};

/// Energy mode: orbits on the shell H = energy with period in
/// [t_min, t_max]. Period mode: orbits of period exactly `period`, at any
/// energy (optionally restricted to [e_min, e_max]).
struct SearchWindow {
  enum class Mode { energy, period } mode = Mode::energy;
  double energy = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double period = 0.0;
  std::optional<double> e_min, e_max;

  static SearchWindow at_energy(double e, double t_min, double t_max);
  static SearchWindow at_period(double t);
};

struct PeriodicOrbit {
  /// Real starting point, each site in the chart with |u| <= 1.
  ClassicalState initial;
  double period = 0.0;
  double primitive_period = 0.0;
  int repetitions = 1;
  double energy = 0.0;
  /// Closed-orbit action (no boundary logarithms), real part; the
  /// imaginary part is kept as a diagnostic.
  double action = 0.0;
  double action_imag = 0.0;
  /// Deviation propagator over one period, canonical variables, charts of
  /// `initial`.
  CMatrix monodromy;
  /// Continuous arg det M_bb(t) accumulated over the period.
  double det_phase = 0.0;
  ReducedMonodromy reduced;
  /// dT/dE (continuation when available, monodromy otherwise).
  double k = 0.0;
  double k_monodromy = 0.0;
  bool k_from_continuation = false;
  /// rank(M - 1) < 2N - 1: the orbit belongs to a continuous family
  /// (isochronous or integrable); excluded from trace sums.
  bool degenerate_family = false;
  double closure_error = 0.0;
  double maslov_phase = 0.0;
  std::vector<double> stability_moduli;
};

/// Every orbit returned satisfies the closure tolerance; duplicates modulo
/// time shift are removed; output sorted by period, then energy.
std::vector<PeriodicOrbit> find_periodic_orbits(const ClassicalHamiltonian& h,
                                                const SearchWindow& window,
                                                const OrbitSearchConfig& config);

/// Refines one guess (state, period) by shooting. Returns nullopt when
/// Newton fails. `fixed_period` keeps T and frees the energy.
std::optional<PeriodicOrbit> refine_orbit(const ClassicalHamiltonian& h,
                                          const ClassicalState& guess,
                                          double period_guess,
                                          std::optional<double> target_energy,
                                          const OrbitSearchConfig& config);

/// Smallest T_P = T / r (r <= max_r) with state(T_P) = state(0) to `tol`
/// in unit-vector distance.
std::pair<double, int> primitive_period(const ClassicalHamiltonian& h,
                                        const ClassicalState& start, double period,
                                        double tol = 1e-6, int max_r = 12,
                                        const EvolveOptions& opts = {});

/// dT/dE by continuation of the orbit family to E +- dE and E +- 2dE,
/// Richardson-extrapolated central differences. Throws NumericError when
/// the continuation fails.
double dT_dE(const ClassicalHamiltonian& h, const PeriodicOrbit& orbit, double de,
             const OrbitSearchConfig& config);

/// Tangent flow over one period from the orbit's starting point.
CMatrix monodromy(const ClassicalHamiltonian& h, const PeriodicOrbit& orbit,
                  const EvolveOptions& opts = {});

/// Canonical flow direction (H_V, -k H_U) and energy gradient (k H_U, H_V).
std::pair<CVector, CVector> flow_and_gradient(const ClassicalHamiltonian& h,
                                              const ClassicalState& s);

/// Real state moved off its energy shell by `de` to first order, along the
/// energy gradient in the coordinates (Re u, Im u) of the preferred charts.
ClassicalState shift_energy(const ClassicalHamiltonian& h, const ClassicalState& s,
                            double de);

/// Minimum over time shifts of the unit-vector distance between the orbit
/// through `a` (period t) and the point `b`.
double orbit_distance(const ClassicalHamiltonian& h, const ClassicalState& a,
                      double t, const ClassicalState& b,
                      const EvolveOptions& opts = {});

/// Fills period-dependent data (monodromy, action, phases, repetitions,
/// reduction) for a closed orbit.
PeriodicOrbit characterize_orbit(const ClassicalHamiltonian& h,
                                 const ClassicalState& start, double period,
                                 const OrbitSearchConfig& config);

}  // namespace spintrace
