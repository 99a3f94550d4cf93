#pragma once

// Classical limit of the spin chain in stereographic coordinates (u, v).
//
// Each spin operator J_i is replaced by J_class n_i with
//   n1 = (u+v)/(1+uv),  n2 = (v-u)/(i(1+uv)),  n3 = (uv-1)/(uv+1),
// and the flow is
//   du_i/dt = k_i dH/dv_i,  dv_i/dt = -k_i dH/du_i,  k_i = (1+u_i v_i)^2/(2iJ_class).
// Real phase-space points satisfy v = conj(u).
//
// Near the north pole u diverges, so every site carries a chart flag. The
// inverted chart uses u' = 1/u, v' = 1/v; the symplectic form keeps its
// shape there and n maps to (n1, -n2, -n3), so the same equations apply
// with sign flips on components 2 and 3.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "spintrace/model.hpp"

namespace spintrace {

enum class Chart : std::uint8_t { standard, inverted };

struct SitePoint {
  cplx u;
  cplx v;
  Chart chart = Chart::standard;
};

/// (theta, phi) -> real point; standard chart for theta >= pi/2, inverted
/// otherwise, so the north pole never produces an infinity.
SitePoint angles_to_uv(double theta, double phi);

/// Inverse of angles_to_uv for a real point (v = conj(u)).
std::pair<double, double> uv_to_angles(cplx u, Chart chart);

/// Complex unit-vector components of one site, already in global
/// orientation (the inverted chart sign flips are applied).
Eigen::Vector3cd site_unit_vector(cplx u, cplx v, Chart chart);

struct ClassicalState {
  CVector u;
  CVector v;
  std::vector<Chart> chart;

  ClassicalState() = default;
  explicit ClassicalState(int n_sites);

  [[nodiscard]] int n_sites() const { return static_cast<int>(u.size()); }

  static ClassicalState from_angles(std::span<const double> theta,
                                    std::span<const double> phi);
  static ClassicalState from_unit_vectors(
      std::span<const Eigen::Vector3d> n);

  [[nodiscard]] bool is_real(double tol = 1e-9) const;

  /// Real unit vectors (real part of the complex n for complex states).
  [[nodiscard]] std::vector<Eigen::Vector3d> unit_vectors() const;
  /// Unit vectors stacked into a 3N vector; chart independent.
  [[nodiscard]] RVector stacked_unit_vectors() const;

  /// Same point expressed in the given charts.
  [[nodiscard]] ClassicalState in_charts(const std::vector<Chart>& charts) const;
  /// Same point with each site in the chart where |u| <= 1.
  [[nodiscard]] ClassicalState in_preferred_charts() const;
};

/// Toggles the chart of one site. Throws NumericError at the pole of the
/// target chart (u or v equal to zero).
ClassicalState chart_convert(const ClassicalState& s, int site);

/// Value, gradient and Hessian of H in the variables (u_1..u_N, v_1..v_N).
struct HamiltonianJet {
  cplx value;
  CVector grad;  // 2N
  CMatrix hess;  // 2N x 2N, filled only for order 2
};

/// Naive substitution J_i -> J_class n_i applied to the HamiltonianSpec, with exact
/// first and second derivatives assembled monomial by monomial.
class ClassicalHamiltonian {
 public:
  ClassicalHamiltonian(HamiltonianSpec spec, ModelContext ctx);

  [[nodiscard]] const HamiltonianSpec& spec() const { return spec_; }
  [[nodiscard]] const ModelContext& context() const { return ctx_; }
  [[nodiscard]] int n_sites() const { return ctx_.n_sites; }
  [[nodiscard]] double j_class() const { return ctx_.j_class(); }

  /// Throws NumericError when |1 + u_i v_i| < 1e-12 on some site.
  [[nodiscard]] cplx value(const ClassicalState& s) const;
  [[nodiscard]] HamiltonianJet jet(const ClassicalState& s, int order) const;

 private:
  HamiltonianSpec spec_;
  ModelContext ctx_;
};

/// k_i = (1 + u_i v_i)^2 / (2 i J_class).
CVector canonical_scale(const ClassicalState& s, double j_class);

/// Flow velocity (du/dt, dv/dt) from a jet of order >= 1.
CVector flow_velocity(const ClassicalState& s, const HamiltonianJet& jet,
                      double j_class);

/// Generator A of the deviation flow in canonical variables
/// (dU~ = dU / k, dV~ = dV): d/dt (dU~, dV~) = A (dU~, dV~).
/// Built by linearizing the equations of motion directly.
CMatrix tangent_generator(const ClassicalState& s, const HamiltonianJet& jet,
                          double j_class);

/// The same generator written as Omega * Q with Q the Hessian of the
/// quadratic tangent Hamiltonian. Used as an independent check.
CMatrix tangent_generator_hamiltonian(const ClassicalState& s,
                                      const HamiltonianJet& jet,
                                      double j_class);

/// Standard symplectic form [[0, 1], [-1, 0]] of size 2n.
CMatrix symplectic_form(int n);

struct EvolveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  bool with_tangent = false;
  bool accumulate_z = false;
  /// Keep every accepted step (times, states, tangents).
  bool record_path = false;
  double chart_switch_radius = 10.0;
  std::size_t max_steps = 2'000'000;
  double min_step = 1e-13;
  /// Upper bound on |dt|; zero leaves the step unbounded.
  double max_step = 0.0;
  /// Largest change of arg det M_bb allowed in one step before it is
  /// retried with a shorter step.
  double max_phase_step = 0.5;
  /// Optional starting tangent (2N x 2N) and tracked phase, for chaining.
  const CMatrix* initial_tangent = nullptr;
  double initial_det_phase = 0.0;
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t chart_switches = 0;
};

struct TrajectorySegment {
  ClassicalState initial;
  /// End point, expressed in the charts of `initial`.
  ClassicalState final_state;
  double duration = 0.0;

  /// -Int_0^t [ i J sum_i (dv u - v du)/(1+uv) + H ] dt' with the one-form
  /// of the standard chart (boundary logarithms not included).
  cplx action_integral = 0.0;
  /// Int_0^t Z dt' when requested.
  cplx z_integral = 0.0;
  /// Per site, the continuous change of ln(v/u) in inverted-chart
  /// coordinates; tracked in the inverted chart always, and in the standard
  /// chart for sites that start in the inverted one.
  CVector inverted_log;

  /// Deviation propagator (canonical variables, charts of `initial` on
  /// both sides) at the end point.
  CMatrix tangent;
  /// Continuous arg of det M_bb(t) from 0 to t.
  double det_phase = 0.0;

  std::vector<double> times;
  std::vector<ClassicalState> states;
  std::vector<CMatrix> tangents;

  IntegratorStats stats;
};

/// Integrates the flow (and optionally the canonical tangent flow) for a
/// duration t (may be negative) with adaptive Runge-Kutta-Fehlberg 7(8).
TrajectorySegment evolve(const ClassicalHamiltonian& h,
                         const ClassicalState& start, double t,
                         const EvolveOptions& opts = {});

/// evolve() with the tangent flow switched on and every step recorded.
TrajectorySegment tangent_flow(const ClassicalHamiltonian& h,
                               const ClassicalState& start, double t,
                               EvolveOptions opts = {});

enum class BoundaryTerms { include, omit };

/// Classical action of a segment. With boundary terms this is the open
/// segment action -iJ sum_i [ln(1+V''U'') + ln(1+V'U')] + integral; for a
/// closed orbit the logarithms cancel against the trace and only the
/// integral remains. Boundary labels are read in the standard chart.
cplx action_integral(const TrajectorySegment& seg, const ClassicalHamiltonian& h,
                     BoundaryTerms boundary = BoundaryTerms::include);

/// Action integral with the one-form of the starting charts instead of the
/// standard one. For a loop closed in the starting charts this is the
/// value to use when the loop sits at the pole of the standard chart.
cplx start_chart_action(const TrajectorySegment& seg, double j_class);

/// max |M^T Omega M - Omega|.
double symplectic_residual(const CMatrix& m);

}  // namespace spintrace
