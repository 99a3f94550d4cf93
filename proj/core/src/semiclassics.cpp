#include "spintrace/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spintrace {

BoundarySolution semiclassical_propagator(const ClassicalHamiltonian& h,
                                          const CVector& u_start, const CVector& v_end,
                                          double t, const EvolveOptions& opts,
                                          const CVector* v_guess, double tol,
                                          int max_iterations) {
  const int n = h.n_sites();
  if (u_start.size() != n || v_end.size() != n)
    throw ValidationError("boundary data has wrong number of sites");
  EvolveOptions o = opts;
  o.with_tangent = true;
  o.record_path = false;

  ClassicalState s(n);
  s.u = u_start;
  s.v = v_guess != nullptr ? *v_guess : v_end;
  BoundarySolution out;
  const double scale = std::max(1.0, v_end.cwiseAbs().maxCoeff());
  for (;;) {
    out.segment = evolve(h, s, t, o);
    const CVector r = out.segment.final_state.v - v_end;
    if (r.cwiseAbs().maxCoeff() < tol * scale) break;
    if (++out.iterations > max_iterations)
      throw NumericError("boundary-value Newton iteration did not converge");
    const CMatrix mbb = out.segment.tangent.bottomRightCorner(n, n);
    s.v -= mbb.fullPivLu().solve(r);
  }

  const double hbar = h.context().hbar;
  out.action = action_integral(out.segment, h, BoundaryTerms::include);
  const CMatrix mbb = out.segment.tangent.bottomRightCorner(n, n);
  cplx pre = std::exp(cplx(0.0, -0.5 * out.segment.det_phase)) /
             std::sqrt(std::abs(mbb.determinant()));
  for (int i = 0; i < n; ++i) pre /= 1.0 + u_start(i) * s.v(i);
  out.prefactor = pre;
  out.propagator = pre * std::exp(cplx(0.0, 1.0) * out.action / hbar);
  return out;
}

std::string exclusion_reason(const PeriodicOrbit& orbit) {
  if (orbit.degenerate_family) return "degenerate family (isochronous or integrable)";
  if (!orbit.reduced.usable)
    return "unusable stability" + (orbit.reduced.note.empty() ? std::string()
                                                               : ": " + orbit.reduced.note);
  if (!std::isfinite(orbit.k) || orbit.k == 0.0) return "k = 0";
  return {};
}

cplx orbit_trace_amplitude(const PeriodicOrbit& orbit, double hbar) {
  const double stab = 1.0 / std::sqrt(std::abs(orbit.reduced.det_red_minus_one));
  const cplx root = std::sqrt(cplx(0.0, -2.0 * kPi * hbar * orbit.k));
  return orbit.primitive_period / root * stab *
         std::exp(cplx(0.0, orbit.action / hbar + orbit.maslov_phase));
}

TraceSum trace_K_semiclassical(std::span<const PeriodicOrbit> orbits, double hbar) {
  TraceSum sum;
  if (orbits.empty()) return sum;
  const double t = orbits.front().period;
  for (const auto& o : orbits) {
    if (std::abs(o.period - t) > 1e-6 * std::max(1.0, std::abs(t)))
      throw ValidationError("orbits in a trace sum must share the same duration");
    std::ostringstream label;
    label.precision(10);
    label << "orbit T=" << o.period << " E=" << o.energy;
    const std::string reason = exclusion_reason(o);
    if (!reason.empty()) {
      ++sum.excluded;
      sum.warnings.push_back(label.str() + " excluded: " + reason);
      continue;
    }
    if (o.reduced.has_elliptic)
      sum.warnings.push_back(label.str() + " is elliptic; determinant formula applied");
    sum.value += orbit_trace_amplitude(o, hbar);
    ++sum.used;
  }
  return sum;
}

double legendre_action(const PeriodicOrbit& orbit) {
  return orbit.action + orbit.energy * orbit.period;
}

double repeated_stability_factor(const PeriodicOrbit& orbit, int r) {
  double prod = 1.0;
  for (const auto& p : orbit.reduced.pairs) {
    const cplx lr = std::pow(p.lambda, r);
    prod *= std::abs(2.0 - lr - 1.0 / lr);
  }
  return 1.0 / std::sqrt(prod);
}

OrbitFamily continue_family(const ClassicalHamiltonian& h, const PeriodicOrbit& start,
                            std::span<const double> energies,
                            const OrbitSearchConfig& config, int max_halvings) {
  if (!std::is_sorted(energies.begin(), energies.end()))
    throw ValidationError("family energies must be sorted");
  OrbitSearchConfig cfg = config;
  cfg.continuation_step = 0.0;
  cfg.explicit_seeds.clear();

  auto step = [&](const PeriodicOrbit& from, double e) -> std::optional<PeriodicOrbit> {
    const double de = e - from.energy;
    const ClassicalState seed = shift_energy(h, from.initial, de);
    const double t_guess = from.period + from.k * de;
    if (!(t_guess > 0.0)) return std::nullopt;
    auto next = refine_orbit(h, seed, t_guess, e, cfg);
    if (!next || next->repetitions != from.repetitions ||
        std::abs(next->period - t_guess) > 0.2 * from.period)
      return std::nullopt;
    return next;
  };
  // Reaches e from `from`, halving the step on failure.
  auto reach = [&](const PeriodicOrbit& from, double e) -> std::optional<PeriodicOrbit> {
    std::vector<double> targets{e};
    PeriodicOrbit cur = from;
    int depth = 0;
    while (!targets.empty()) {
      if (auto next = step(cur, targets.back())) {
        cur = std::move(*next);
        targets.pop_back();
        continue;
      }
      if (++depth > max_halvings) return std::nullopt;
      targets.push_back(0.5 * (cur.energy + targets.back()));
    }
    return cur;
  };

  OrbitFamily fam;
  const auto split = std::lower_bound(energies.begin(), energies.end(), start.energy);
  std::vector<std::pair<double, PeriodicOrbit>> below, above;
  PeriodicOrbit cur = start;
  for (auto it = split; it != energies.end(); ++it) {
    auto next = reach(cur, *it);
    if (!next) {
      fam.notes.push_back("continuation stopped above E=" + std::to_string(cur.energy));
      break;
    }
    cur = std::move(*next);
    above.emplace_back(*it, cur);
  }
  cur = start;
  for (auto it = split; it != energies.begin();) {
    --it;
    auto next = reach(cur, *it);
    if (!next) {
      fam.notes.push_back("continuation stopped below E=" + std::to_string(cur.energy));
      break;
    }
    cur = std::move(*next);
    below.emplace_back(*it, cur);
  }
  std::reverse(below.begin(), below.end());
  for (auto* part : {&below, &above})
    for (auto& [e, o] : *part) {
      fam.energies.push_back(e);
      fam.orbits.push_back(std::move(o));
    }
  return fam;
}

SpectralDensity density_osc(std::span<const OrbitFamily> families,
                            std::span<const double> grid, double hbar, double sigma,
                            int max_repetitions) {
  if (!(hbar > 0)) throw ValidationError("hbar must be positive");
  if (sigma < 0) throw ValidationError("smoothing width must be non-negative");
  if (max_repetitions < 1) throw ValidationError("max_repetitions must be >= 1");
  SpectralDensity d;
  d.x.assign(grid.begin(), grid.end());
  d.value.assign(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double e = grid[g];
    for (const auto& fam : families) {
      const auto it = std::lower_bound(fam.energies.begin(), fam.energies.end(),
                                       e - 1e-12 * std::max(1.0, std::abs(e)));
      if (it == fam.energies.end() || std::abs(*it - e) > 1e-12 * std::max(1.0, std::abs(e)))
        continue;
      const auto& o = fam.orbits[static_cast<std::size_t>(it - fam.energies.begin())];
      if (!exclusion_reason(o).empty() || o.repetitions != 1) continue;
      const double phase = legendre_action(o) / hbar + o.maslov_phase;
      const double tp = o.primitive_period;
      for (int r = 1; r <= max_repetitions; ++r) {
        const double damp = std::exp(-0.5 * std::pow(r * tp * sigma / hbar, 2));
        d.value[g] += tp * repeated_stability_factor(o, r) * std::cos(r * phase) * damp /
                      (kPi * hbar);
      }
    }
  }
  return d;
}

std::vector<double> fourier_peaks(std::span<const double> eigenvalues, double hbar,
                                  double e_center, double window, double sigma_smooth,
                                  std::span<const double> times) {
  if (!(window > 0) || !(hbar > 0)) throw ValidationError("window and hbar must be positive");
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    cplx sum = 0.0;
    for (double e : eigenvalues) {
      const double x = (e - e_center) / window;
      sum += std::exp(-0.5 * x * x) * std::exp(cplx(0.0, e * t / hbar));
    }
    const double smooth = std::exp(-0.5 * std::pow(sigma_smooth * t / hbar, 2));
    out.push_back(std::abs(sum) * (1.0 - smooth));
  }
  return out;
}

std::vector<TimeRow> time_domain_compare(const ExactSystem& exact,
                                         const ClassicalHamiltonian& h,
                                         std::span<const double> times,
                                         const OrbitSearchConfig& config, bool with_orbits,
                                         double e_center, double window,
                                         double sigma_smooth) {
  const double hbar = exact.context().hbar;
  const auto peaks =
      fourier_peaks(exact.eigenvalues(), hbar, e_center, window, sigma_smooth, times);
  std::vector<TimeRow> rows;
  for (std::size_t i = 0; i < times.size(); ++i) {
    TimeRow row;
    row.t = times[i];
    row.exact = exact.propagator_trace(row.t);
    row.fourier = peaks[i];
    if (with_orbits && row.t > 0.0) {
      const auto orbits = find_periodic_orbits(h, SearchWindow::at_period(row.t), config);
      const auto sum = trace_K_semiclassical(orbits, hbar);
      row.semiclassical = sum.value;
      row.orbits = sum.used;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace spintrace
