#include "spintrace/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "real_coords.hpp"

namespace spintrace {

using detail::from_real;
using detail::real_jacobian;
using detail::to_real;
using detail::unit_distance;

void DrivenModel::validate(const ModelContext& ctx) const {
  smooth.validate(ctx);
  kick.validate(ctx);
  if (!(period > 0) || !std::isfinite(period))
    throw ValidationError("drive period must be positive");
}

namespace {

// exp(-i H s / hbar) for Hermitian H.
CMatrix unitary_exp(const CMatrix& h, double s, double hbar) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericError("Hermitian eigensolver failed");
  CVector ph(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < ph.size(); ++i)
    ph(i) = std::polar(1.0, -es.eigenvalues()(i) * s / hbar);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

CMatrix build_floquet(const DrivenModel& model, const ModelContext& ctx,
                      std::size_t dim_cap) {
  ctx.validate();
  model.validate(ctx);
  ctx.require_dim_within(dim_cap);
  const CMatrix flow = unitary_exp(build_hamiltonian(model.smooth, ctx, dim_cap),
                                   model.period, ctx.hbar);
  const CMatrix kick = unitary_exp(build_hamiltonian(model.kick, ctx, dim_cap), 1.0, ctx.hbar);
  return kick * flow;
}

double unitarity_residual(const CMatrix& f) {
  return (f.adjoint() * f - CMatrix::Identity(f.rows(), f.cols())).cwiseAbs().maxCoeff();
}

cplx FloquetSpectrum::trace_power(int n) const {
  cplx sum = 0.0;
  for (const auto& l : eigenvalues) sum += std::pow(l, n);
  return sum;
}

FloquetSpectrum floquet_spectrum(const CMatrix& f) {
  Eigen::ComplexEigenSolver<CMatrix> es(f, false);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on Floquet operator");
  FloquetSpectrum out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx l = es.eigenvalues()(i);
    out.eigenvalues.push_back(l);
    double th = -std::arg(l);
    if (th <= -kPi) th += 2.0 * kPi;
    out.phases.push_back(th);
  }
  std::sort(out.phases.begin(), out.phases.end());
  return out;
}

namespace {

double alt_dimension(const ModelContext& ctx) {
  return std::pow(static_cast<double>(ctx.twice_j), ctx.n_sites);
}

}  // namespace

EigenphaseDensity eigenphase_density(std::span<const double> phases,
                                     std::span<const double> grid, double width,
                                     const ModelContext& ctx) {
  if (!(width > 0)) throw ValidationError("smoothing width must be positive");
  const double dim = static_cast<double>(ctx.hilbert_dim());
  const double norm = 1.0 / (std::sqrt(2.0 * kPi) * width);
  EigenphaseDensity out;
  out.theta.assign(grid.begin(), grid.end());
  for (double th : grid) {
    double acc = 0.0;
    for (double p : phases) {
      const double d = std::remainder(th - p, 2.0 * kPi);
      for (int k = -3; k <= 3; ++k) {
        const double z = (d + 2.0 * kPi * k) / width;
        if (std::abs(z) < 40.0) acc += std::exp(-0.5 * z * z);
      }
    }
    out.value.push_back(norm * acc / dim);
    out.value_alt_norm.push_back(norm * acc / alt_dimension(ctx));
  }
  return out;
}

EigenphaseDensity eigenphase_density_from_traces(std::span<const cplx> traces,
                                                 std::span<const double> grid,
                                                 const ModelContext& ctx) {
  const double dim = static_cast<double>(ctx.hilbert_dim());
  EigenphaseDensity out;
  out.theta.assign(grid.begin(), grid.end());
  for (double th : grid) {
    double osc = 0.0;
    for (std::size_t n = 1; n <= traces.size(); ++n)
      osc += (std::exp(cplx(0.0, static_cast<double>(n) * th)) * traces[n - 1]).real();
    out.value.push_back(1.0 / (2.0 * kPi) + osc / (dim * kPi));
    out.value_alt_norm.push_back(1.0 / (2.0 * kPi) + osc / (alt_dimension(ctx) * kPi));
  }
  return out;
}

StroboscopicMap::StroboscopicMap(const DrivenModel& model, const ModelContext& ctx)
    : smooth_(model.smooth, ctx), kick_(model.kick, ctx), period_(model.period) {
  model.validate(ctx);
}

TrajectorySegment StroboscopicMap::apply(const ClassicalState& start, int n,
                                         const EvolveOptions& opts) const {
  if (n < 0) throw ValidationError("number of map steps must be >= 0");
  const int dim = 2 * n_sites();
  TrajectorySegment total;
  total.initial = start;
  total.final_state = start;
  total.det_phase = opts.initial_det_phase;
  total.inverted_log = CVector::Zero(n_sites());
  if (opts.with_tangent)
    total.tangent = opts.initial_tangent != nullptr ? *opts.initial_tangent
                                                    : CMatrix::Identity(dim, dim);
  EvolveOptions o = opts;
  o.record_path = false;
  for (int step = 0; step < n; ++step) {
    for (const auto* part : {&smooth_, &kick_}) {
      if (part->spec().terms.empty()) continue;
      const double dt = part == &smooth_ ? period_ : 1.0;
      o.initial_tangent = opts.with_tangent ? &total.tangent : nullptr;
      o.initial_det_phase = total.det_phase;
      auto seg = evolve(*part, total.final_state, dt, o);
      total.final_state = seg.final_state;
      total.action_integral += seg.action_integral;
      total.z_integral += seg.z_integral;
      total.inverted_log += seg.inverted_log;
      total.duration += dt;
      if (opts.with_tangent) {
        total.tangent = std::move(seg.tangent);
        total.det_phase = seg.det_phase;
      }
      total.stats.accepted += seg.stats.accepted;
      total.stats.rejected += seg.stats.rejected;
      total.stats.chart_switches += seg.stats.chart_switches;
    }
  }
  return total;
}

void MapSearchConfig::validate() const {
  if (!(newton_tol > 0) || !(closure_tol > 0) || !(dedup_distance > 0) ||
      !(unit_threshold > 0))
    throw ValidationError("map search tolerances must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (seed_radius < 0) throw ValidationError("seed_radius must be >= 0");
}

MapOrbit characterize_map_orbit(const StroboscopicMap& map, const ClassicalState& start,
                                int n, const MapSearchConfig& config) {
  if (n < 1) throw ValidationError("map period must be >= 1");
  EvolveOptions o = config.integration;
  o.with_tangent = true;
  const auto seg = map.apply(start, n, o);
  MapOrbit orbit;
  orbit.initial = start;
  orbit.n = n;
  orbit.closure_error =
      (to_real(seg.final_state.in_charts(start.chart)) - to_real(start)).cwiseAbs().maxCoeff();
  // The cycle closes in the starting charts, so its action uses their one-form.
  const cplx action = start_chart_action(seg, map.j_class());
  orbit.action = action.real();
  orbit.action_imag = action.imag();
  orbit.monodromy = seg.tangent;
  orbit.det_phase = seg.det_phase;
  const auto dim = orbit.monodromy.rows();
  orbit.det_minus_one =
      (orbit.monodromy - CMatrix::Identity(dim, dim)).determinant().real();
  orbit.near_unit = std::abs(orbit.det_minus_one) < config.unit_threshold;
  Eigen::ComplexEigenSolver<CMatrix> es(orbit.monodromy, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    orbit.eigenvalues.push_back(es.eigenvalues()(i));
  if (!orbit.near_unit)
    orbit.maslov_phase =
        map_maslov_phase(orbit.det_phase, orbit.monodromy, canonical_scale(start, map.j_class()));

  const double tol = std::max(1e-6, 10.0 * orbit.closure_error);
  EvolveOptions plain = config.integration;
  plain.with_tangent = false;
  for (int d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    if (unit_distance(map.apply(start, d, plain).final_state, start) < tol) {
      orbit.primitive_n = d;
      orbit.repetitions = n / d;
      break;
    }
  }
  if (orbit.repetitions == 1) orbit.primitive_n = n;
  return orbit;
}

namespace {

// Multiple shooting with one node per map step: F(x_k) = x_{k+1}, x_n = x_0.
std::optional<MapOrbit> refine(const StroboscopicMap& map, const ClassicalState& guess, int n,
                               const MapSearchConfig& config, double first_step_limit) {
  EvolveOptions o = config.integration;
  o.with_tangent = true;
  EvolveOptions plain = config.integration;
  plain.with_tangent = false;
  const double jc = map.j_class();
  const int dn = 2 * map.n_sites();
  const int dim = dn * n;

  struct Step {
    ClassicalState end;
    CMatrix tangent;
  };
  auto residual = [&](const std::vector<ClassicalState>& xs, std::vector<Step>* steps) {
    RVector r(dim);
    for (int k = 0; k < n; ++k) {
      const auto& next = xs[(k + 1) % n];
      auto seg = map.apply(xs[k], 1, steps != nullptr ? o : plain);
      r.segment(k * dn, dn) = to_real(seg.final_state.in_charts(next.chart)) - to_real(next);
      if (steps != nullptr) (*steps)[k] = {seg.final_state, std::move(seg.tangent)};
    }
    return r;
  };

  try {
    std::vector<ClassicalState> xs{guess.in_preferred_charts()};
    for (int k = 1; k < n; ++k)
      xs.push_back(map.apply(xs.back(), 1, plain).final_state.in_preferred_charts());
    std::vector<Step> steps(n);
    RVector r = residual(xs, &steps);
    int stalled = 0;
    for (int it = 0; it < config.max_iterations; ++it) {
      if (r.cwiseAbs().maxCoeff() < config.newton_tol) {
        const auto orbit = characterize_map_orbit(map, xs[0], n, config);
        if (orbit.closure_error > config.closure_tol) return std::nullopt;
        return orbit;
      }
      RMatrix jac = RMatrix::Zero(dim, dim);
      for (int k = 0; k < n; ++k) {
        const int next = (k + 1) % n;
        jac.block(k * dn, k * dn, dn, dn) +=
            real_jacobian(jc, xs[k], steps[k].end, steps[k].tangent, xs[next].chart);
        jac.block(k * dn, next * dn, dn, dn) -= RMatrix::Identity(dn, dn);
      }
      RVector dx = -jac.completeOrthogonalDecomposition().solve(r);
      if (!dx.allFinite()) return std::nullopt;
      double longest = 0.0;
      for (int k = 0; k < n; ++k) longest = std::max(longest, dx.segment(k * dn, dn).norm());
      if (it == 0 && first_step_limit > 0 && longest > first_step_limit) return std::nullopt;
      if (longest > 0.5) dx *= 0.5 / longest;
      const double r0 = r.norm();
      double lambda = 1.0;
      for (int attempt = 0; attempt < 8; ++attempt, lambda *= 0.5) {
        std::vector<ClassicalState> trial;
        for (int k = 0; k < n; ++k)
          trial.push_back(from_real(to_real(xs[k]) + lambda * dx.segment(k * dn, dn), xs[k].chart)
                              .in_preferred_charts());
        std::vector<Step> tsteps(n);
        const RVector tr = residual(trial, &tsteps);
        if (tr.norm() < r0 || attempt == 7) {
          xs = std::move(trial);
          steps = std::move(tsteps);
          r = tr;
          break;
        }
      }
      stalled = r.norm() < 0.9 * r0 ? 0 : stalled + 1;
      if (stalled >= 6) return std::nullopt;
    }
  } catch (const NumericError&) {
  }
  return std::nullopt;
}

// Fibonacci lattice on the unit sphere.
std::vector<Eigen::Vector3d> sphere_grid(std::size_t count) {
  std::vector<Eigen::Vector3d> out;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(k);
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

}  // namespace

std::optional<MapOrbit> refine_map_orbit(const StroboscopicMap& map, const ClassicalState& guess,
                                         int n, const MapSearchConfig& config) {
  return refine(map, guess, n, config, 0.0);
}

std::vector<MapOrbit> find_map_orbits(const StroboscopicMap& map, int n,
                                      const MapSearchConfig& config) {
  config.validate();
  if (n < 1) throw ValidationError("map period must be >= 1");
  std::vector<ClassicalState> seeds = config.explicit_seeds;
  std::mt19937_64 rng(config.rng_seed);
  for (std::size_t k = 0; k < config.random_seeds; ++k)
    seeds.push_back(detail::random_state(map.n_sites(), rng));
  if (config.grid_seeds > 0) {
    const auto grid = sphere_grid(config.grid_seeds);
    for (int site = 0; site < map.n_sites(); ++site)
      for (const auto& g : grid) {
        auto other = detail::random_state(map.n_sites(), rng).unit_vectors();
        other[site] = g;
        seeds.push_back(ClassicalState::from_unit_vectors(other).in_preferred_charts());
      }
  }

  std::vector<std::optional<MapOrbit>> found(seeds.size());
  detail::parallel_for(seeds.size(), config.threads, [&](std::size_t i) {
    found[i] = refine(map, seeds[i], n, config, config.seed_radius);
  });

  EvolveOptions plain = config.integration;
  plain.with_tangent = false;
  std::vector<MapOrbit> unique;
  std::vector<std::vector<ClassicalState>> cycles;
  for (auto& f : found) {
    if (!f) continue;
    bool seen = false;
    for (const auto& cyc : cycles) {
      for (const auto& p : cyc)
        if (unit_distance(p, f->initial) < config.dedup_distance) {
          seen = true;
          break;
        }
      if (seen) break;
    }
    if (seen) continue;
    std::vector<ClassicalState> cyc{f->initial};
    ClassicalState cur = f->initial;
    for (int k = 1; k < f->primitive_n; ++k) {
      cur = map.apply(cur, 1, plain).final_state.in_preferred_charts();
      cyc.push_back(cur);
    }
    cycles.push_back(std::move(cyc));
    unique.push_back(std::move(*f));
  }
  std::stable_sort(unique.begin(), unique.end(),
                   [](const MapOrbit& a, const MapOrbit& b) { return a.action < b.action; });
  return unique;
}

cplx map_orbit_amplitude(const MapOrbit& orbit, double hbar) {
  return static_cast<double>(orbit.primitive_n) / std::sqrt(std::abs(orbit.det_minus_one)) *
         std::exp(cplx(0.0, orbit.action / hbar + orbit.maslov_phase));
}

MapTraceSum trace_F_semiclassical(std::span<const MapOrbit> orbits, int n, double hbar) {
  if (!(hbar > 0)) throw ValidationError("hbar must be positive");
  MapTraceSum sum;
  for (const auto& o : orbits) {
    if (o.n != n) throw ValidationError("orbit period differs from the trace power");
    if (o.near_unit) {
      std::ostringstream msg;
      msg.precision(10);
      msg << "cycle with S=" << o.action << " excluded: |det(M - 1)| = "
          << std::abs(o.det_minus_one);
      sum.warnings.push_back(msg.str());
      ++sum.excluded;
      continue;
    }
    sum.value += map_orbit_amplitude(o, hbar);
    ++sum.used;
  }
  return sum;
}

}  // namespace spintrace
