#pragma once

// Periodically kicked chains: the exact one-period operator, the classical
// stroboscopic map with its periodic points, the map trace formula and the
// eigenphase density.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spintrace/classical.hpp"
#include "spintrace/quantum.hpp"
#include "spintrace/symplectic.hpp"

namespace spintrace {

/// Smooth evolution under `smooth` for `period`, followed by the kick
/// exp(-i kick / hbar).
struct DrivenModel {
  HamiltonianSpec smooth;
  HamiltonianSpec kick;
  double period = 1.0;

  void validate(const ModelContext& ctx) const;
};

/// F = exp(-i H_kick / hbar) exp(-i H_smooth t0 / hbar).
CMatrix build_floquet(const DrivenModel& model, const ModelContext& ctx,
                      std::size_t dim_cap = kDefaultDimensionCap);

/// max |F^dag F - 1|.
double unitarity_residual(const CMatrix& f);

struct FloquetSpectrum {
  std::vector<cplx> eigenvalues;
  /// theta_n = -arg(lambda_n) in (-pi, pi], ascending.
  std::vector<double> phases;

  /// Tr F^n = sum_k lambda_k^n.
  [[nodiscard]] cplx trace_power(int n) const;
};

FloquetSpectrum floquet_spectrum(const CMatrix& f);

struct EigenphaseDensity {
  std::vector<double> theta;
  /// Normalized by the Hilbert dimension (2j+1)^N.
  std::vector<double> value;
  /// The same sum normalized by (2j)^N instead.
  std::vector<double> value_alt_norm;
};

/// (1/D) sum_n g_width(theta - theta_n) with a 2 pi-periodic Gaussian.
EigenphaseDensity eigenphase_density(std::span<const double> phases,
                                     std::span<const double> grid, double width,
                                     const ModelContext& ctx);

/// 1 / 2 pi + (1 / D pi) Re sum_{n=1}^{n_max} e^{i n theta} Tr F^n, with
/// traces[n - 1] = Tr F^n.
EigenphaseDensity eigenphase_density_from_traces(std::span<const cplx> traces,
                                                 std::span<const double> grid,
                                                 const ModelContext& ctx);

/// Classical limit of the kicked evolution: flow of H_smooth for t0, then
/// the flow of H_kick for unit time.
class StroboscopicMap {
 public:
  StroboscopicMap(const DrivenModel& model, const ModelContext& ctx);

  [[nodiscard]] int n_sites() const { return smooth_.n_sites(); }
  [[nodiscard]] double j_class() const { return smooth_.j_class(); }
  [[nodiscard]] double period() const { return period_; }
  [[nodiscard]] const ModelContext& context() const { return smooth_.context(); }

  /// n applications. With the tangent switched on the result carries the
  /// composed canonical tangent map and the continuous arg det M_bb.
  [[nodiscard]] TrajectorySegment apply(const ClassicalState& start, int n,
                                        const EvolveOptions& opts = {}) const;

 private:
  ClassicalHamiltonian smooth_;
  ClassicalHamiltonian kick_;
  double period_;
};

struct MapOrbit {
  /// Real periodic point, preferred charts.
  ClassicalState initial;
  int n = 1;
  int primitive_n = 1;
  int repetitions = 1;
  /// Closed-orbit action over n periods (real part; imaginary part kept
  /// as a diagnostic).
  double action = 0.0;
  double action_imag = 0.0;
  CMatrix monodromy;
  double det_phase = 0.0;
  double maslov_phase = 0.0;
  /// det(M - 1) (real for real orbits; imaginary part dropped).
  double det_minus_one = 0.0;
  std::vector<cplx> eigenvalues;
  double closure_error = 0.0;
  /// |det(M - 1)| below the exclusion threshold.
  bool near_unit = false;
};

struct MapSearchConfig {
  std::size_t random_seeds = 64;
  /// Extra seeds on a quasi-uniform (Fibonacci) grid of each sphere;
  /// for N > 1 the grid points are paired with random points on the other
  /// spheres.
  std::size_t grid_seeds = 0;
  /// Seeds whose first Newton step is longer than this are dropped
  /// (zero keeps every seed).
  double seed_radius = 0.0;
  std::vector<ClassicalState> explicit_seeds;
  std::uint64_t rng_seed = 1;
  double newton_tol = 1e-11;
  int max_iterations = 40;
  double closure_tol = 1e-9;
  double dedup_distance = 1e-6;
  double unit_threshold = 1e-10;
  EvolveOptions integration{};
  unsigned threads = 1;

  void validate() const;
};

/// Periodic points of the n-fold map, one entry per cycle (cyclic shifts
/// removed), sorted by action.
std::vector<MapOrbit> find_map_orbits(const StroboscopicMap& map, int n,
                                      const MapSearchConfig& config);

/// Newton refinement of one guess; nullopt if it does not converge.
std::optional<MapOrbit> refine_map_orbit(const StroboscopicMap& map, const ClassicalState& guess,
                                         int n, const MapSearchConfig& config);

/// Fills monodromy, action, phases and n_P for a closed n-cycle.
MapOrbit characterize_map_orbit(const StroboscopicMap& map, const ClassicalState& start,
                                int n, const MapSearchConfig& config);

/// n_P / sqrt|det(M - 1)| exp(i S / hbar + i G).
cplx map_orbit_amplitude(const MapOrbit& orbit, double hbar);

struct MapTraceSum {
  cplx value = 0.0;
  int used = 0;
  int excluded = 0;
  std::vector<std::string> warnings;
};

/// Semiclassical Tr F^n from the n-cycles; orbits near a bifurcation are
/// excluded with a warning.
MapTraceSum trace_F_semiclassical(std::span<const MapOrbit> orbits, int n, double hbar);

}  // namespace spintrace
