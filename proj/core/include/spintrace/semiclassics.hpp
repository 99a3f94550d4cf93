#pragma once

// Periodic-orbit sums: the coherent-state propagator from a complex
// boundary-value trajectory, the traced propagator Tr K(t), orbit families
// in energy and the oscillating density of states.

#include <span>
#include <string>
#include <vector>

#include "spintrace/orbits.hpp"
#include "spintrace/quantum.hpp"

namespace spintrace {

/// Trajectory with U(0) = u_start and V(t) = v_end, found by Newton on V(0).
struct BoundarySolution {
  TrajectorySegment segment;
  /// Action including the boundary logarithms.
  cplx action = 0.0;
  /// det^{1/2}((i / 2J) d^2S / dU' dV''), branch followed from t = 0.
  cplx prefactor = 0.0;
  /// prefactor * exp(i S / hbar).
  cplx propagator = 0.0;
  int iterations = 0;
};

/// Semiclassical <V''*| exp(-i H t / hbar) |U'> for unnormalized coherent
/// states. Newton starts from `v_guess` (defaults to v_end).
BoundarySolution semiclassical_propagator(const ClassicalHamiltonian& h,
                                          const CVector& u_start, const CVector& v_end,
                                          double t, const EvolveOptions& opts = {},
                                          const CVector* v_guess = nullptr,
                                          double tol = 1e-13, int max_iterations = 30);

/// Empty when the orbit may enter a trace sum; otherwise the reason.
std::string exclusion_reason(const PeriodicOrbit& orbit);

/// t_P / sqrt(-2 i pi hbar k) |det(m_red - 1)|^{-1/2} exp(i S / hbar + i G).
cplx orbit_trace_amplitude(const PeriodicOrbit& orbit, double hbar);

struct TraceSum {
  cplx value = 0.0;
  int used = 0;
  int excluded = 0;
  std::vector<std::string> warnings;
};

/// Sum of orbit_trace_amplitude over orbits sharing the duration t.
/// Degenerate, loxodromic or non-diagonalizable orbits are excluded;
/// elliptic ones are included with a warning.
TraceSum trace_K_semiclassical(std::span<const PeriodicOrbit> orbits, double hbar);

/// One continuous family of primitive orbits, sampled at increasing energies.
struct OrbitFamily {
  std::vector<double> energies;
  std::vector<PeriodicOrbit> orbits;
  /// Energy interval the continuation could not cross, if any.
  std::vector<std::string> notes;
};

/// Continues `start` to each energy in `energies` (sorted ascending) by
/// predictor-corrector steps; sub-steps are inserted when a step fails and
/// the family is truncated where continuation breaks down.
OrbitFamily continue_family(const ClassicalHamiltonian& h, const PeriodicOrbit& start,
                            std::span<const double> energies,
                            const OrbitSearchConfig& config, int max_halvings = 6);

/// Legendre-transformed action S + E T.
double legendre_action(const PeriodicOrbit& orbit);

/// Stability factor of the r-th repetition, prod |2 - L^r - L^-r|^{-1/2}
/// over the stability pairs (1 for one degree of freedom).
double repeated_stability_factor(const PeriodicOrbit& orbit, int r);

/// (1 / pi hbar) sum_r t_P |det(m_red^r - 1)|^{-1/2} cos(r (S_E / hbar + G))
/// exp(-(r t_P sigma / hbar)^2 / 2), summed over the families at each grid
/// energy. Each grid value must appear in the family energies to be
/// counted. Repetition phases scale as r G (exact for one degree of
/// freedom and for hyperbolic orbits).
SpectralDensity density_osc(std::span<const OrbitFamily> families,
                            std::span<const double> grid, double hbar, double sigma,
                            int max_repetitions);

/// |sum_n w(E_n - E_c) exp(i E_n t / hbar)| (1 - exp(-(sigma_s t / hbar)^2 / 2)):
/// Fourier transform of the windowed exact density with the smooth part
/// (width sigma_s) removed. w is a Gaussian of standard deviation `window`.
std::vector<double> fourier_peaks(std::span<const double> eigenvalues, double hbar,
                                  double e_center, double window, double sigma_smooth,
                                  std::span<const double> times);

struct TimeRow {
  double t = 0.0;
  cplx exact = 0.0;
  cplx semiclassical = 0.0;
  int orbits = 0;
  double fourier = 0.0;
};

/// Exact Tr K(t) against the orbit sum at fixed period (orbits found in
/// period mode for every t), plus the Fourier diagnostic of the full
/// spectrum (window centered on e_center).
std::vector<TimeRow> time_domain_compare(const ExactSystem& exact,
                                         const ClassicalHamiltonian& h,
                                         std::span<const double> times,
                                         const OrbitSearchConfig& config, bool with_orbits,
                                         double e_center, double window,
                                         double sigma_smooth);

}  // namespace spintrace
