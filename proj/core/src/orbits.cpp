#include "spintrace/orbits.hpp"

#include "real_coords.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <random>
#include <cmath>
#include <numeric>
#include <thread>

namespace spintrace {

using detail::from_real;
using detail::parallel_for;
using detail::random_state;
using detail::real_jacobian;
using detail::to_real;
using detail::unit_distance;

void OrbitSearchConfig::validate() const {
  if (shooting_segments < 1) throw ValidationError("shooting_segments must be >= 1");
  if (!(newton_tol > 0) || !(closure_tol > 0) || !(dedup_distance > 0) ||
      !(return_radius > 0))
    throw ValidationError("orbit search tolerances must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (guesses_per_seed < 1) throw ValidationError("guesses_per_seed must be >= 1");
  if (max_repetitions < 1) throw ValidationError("max_repetitions must be >= 1");
  if (continuation_step < 0) throw ValidationError("continuation_step must be >= 0");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

SearchWindow SearchWindow::at_energy(double e, double t_min, double t_max) {
  if (!(t_min > 0) || !(t_max > t_min))
    throw ValidationError("period window must satisfy 0 < t_min < t_max");
  SearchWindow w;
  w.mode = Mode::energy;
  w.energy = e;
  w.t_min = t_min;
  w.t_max = t_max;
  return w;
}

SearchWindow SearchWindow::at_period(double t) {
  if (!(t > 0)) throw ValidationError("period must be positive");
  SearchWindow w;
  w.mode = Mode::period;
  w.period = t;
  return w;
}

namespace {

// dH/d(Re u_i), dH/d(Im u_i) on the real section.
RVector real_gradient(const ClassicalHamiltonian& h, const ClassicalState& s) {
  const int n = s.n_sites();
  const auto jet = h.jet(s, 1);
  RVector g(2 * n);
  for (int i = 0; i < n; ++i) {
    g(2 * i) = (jet.grad(i) + jet.grad(n + i)).real();
    g(2 * i + 1) = (cplx(0.0, 1.0) * (jet.grad(i) - jet.grad(n + i))).real();
  }
  return g;
}

RVector real_velocity(const ClassicalHamiltonian& h, const ClassicalState& s) {
  const int n = s.n_sites();
  const CVector vel = flow_velocity(s, h.jet(s, 1), h.j_class());
  RVector out(2 * n);
  for (int i = 0; i < n; ++i) {
    out(2 * i) = vel(i).real();
    out(2 * i + 1) = vel(i).imag();
  }
  return out;
}

double section_value(const ClassicalState& s, int index) {
  return s.stacked_unit_vectors()(index);
}

// Gauss-Newton projection onto H = e (and the seed section if enabled).
std::optional<ClassicalState> project_to_shell(const ClassicalHamiltonian& h,
                                               ClassicalState s, double e,
                                               const OrbitSearchConfig& cfg) {
  const bool section = cfg.section_index >= 0;
  const double scale = std::max(1.0, std::abs(e));
  for (int it = 0; it < 60; ++it) {
    s = s.in_preferred_charts();
    const RVector x = to_real(s);
    const int rows = section ? 2 : 1;
    RMatrix jac(rows, x.size());
    RVector res(rows);
    res(0) = h.value(s).real() - e;
    jac.row(0) = real_gradient(h, s).transpose();
    if (section) {
      res(1) = section_value(s, cfg.section_index) - cfg.section_level;
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        RVector xp = x, xm = x;
        xp(c) += 1e-7;
        xm(c) -= 1e-7;
        jac(1, c) = (section_value(from_real(xp, s.chart), cfg.section_index) -
                     section_value(from_real(xm, s.chart), cfg.section_index)) / 2e-7;
      }
    }
    if (res.cwiseAbs().maxCoeff() < 1e-13 * scale) return s;
    const RMatrix jjt = jac * jac.transpose();
    if (std::abs(jjt.determinant()) < 1e-300) return std::nullopt;
    RVector dx = -jac.transpose() * jjt.ldlt().solve(res);
    const double len = dx.norm();
    if (len > 0.3) dx *= 0.3 / len;
    s = from_real(x + dx, s.chart);
  }
  return std::nullopt;
}

struct ShootingResult {
  ClassicalState start;
  double period;
};

RVector real_end_velocity(const ClassicalHamiltonian& h, const ClassicalState& end,
                          const std::vector<Chart>& end_charts) {
  const int n = end.n_sites();
  const CVector vel = flow_velocity(end, h.jet(end, 1), h.j_class());
  RVector out(2 * n);
  for (int a = 0; a < n; ++a) {
    cplx du = vel(a);
    if (end_charts[a] != end.chart[a]) du *= -1.0 / (end.u(a) * end.u(a));
    out(2 * a) = du.real();
    out(2 * a + 1) = du.imag();
  }
  return out;
}

struct ShootingSystem {
  RMatrix jac;
  RVector res;
};

// Multiple shooting on nodes x_s with charts chosen per iteration.
std::optional<ShootingResult> shoot(const ClassicalHamiltonian& h,
                                    std::vector<ClassicalState> nodes, double period,
                                    std::optional<double> energy, bool free_period,
                                    const OrbitSearchConfig& cfg) {
  const int n = h.n_sites();
  const int m = static_cast<int>(nodes.size());
  const int dn = 2 * n;
  EvolveOptions opts = cfg.integration;
  opts.with_tangent = true;
  opts.record_path = false;
  const double t_initial = period;

  auto assemble = [&](const std::vector<ClassicalState>& xs, double t,
                      bool with_jac) -> std::optional<ShootingSystem> {
    const int unknowns = m * dn + (free_period ? 1 : 0);
    const int rows = m * dn + (energy ? 1 : 0) + 1;
    ShootingSystem sys;
    sys.res = RVector::Zero(rows);
    if (with_jac) sys.jac = RMatrix::Zero(rows, unknowns);
    try {
      for (int s = 0; s < m; ++s) {
        const auto& next = xs[(s + 1) % m];
        const auto seg = evolve(h, xs[s], t / m, opts);
        const ClassicalState end = seg.final_state.in_charts(next.chart);
        sys.res.segment(s * dn, dn) = to_real(end) - to_real(next);
        if (!with_jac) continue;
        sys.jac.block(s * dn, s * dn, dn, dn) =
            real_jacobian(h.j_class(), xs[s], seg.final_state, seg.tangent, next.chart);
        sys.jac.block(s * dn, ((s + 1) % m) * dn, dn, dn) -= RMatrix::Identity(dn, dn);
        if (free_period)
          sys.jac.block(s * dn, m * dn, dn, 1) =
              real_end_velocity(h, seg.final_state, next.chart) / m;
      }
      int row = m * dn;
      if (energy) {
        sys.res(row) = h.value(xs[0]).real() - *energy;
        if (with_jac) sys.jac.block(row, 0, 1, dn) = real_gradient(h, xs[0]).transpose();
        ++row;
      }
      // Phase condition: no step along the flow at the first node.
      if (with_jac) {
        const RVector f = real_velocity(h, xs[0]);
        sys.jac.block(row, 0, 1, dn) = f.transpose() / std::max(f.norm(), 1e-300);
      }
    } catch (const NumericError&) {
      return std::nullopt;
    }
    return sys;
  };

  double t = period;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (auto& x : nodes) x = x.in_preferred_charts();
    auto sys = assemble(nodes, t, true);
    if (!sys) return std::nullopt;
    const double r0 = sys->res.cwiseAbs().maxCoeff();
    if (!std::isfinite(r0)) return std::nullopt;
    if (r0 < cfg.newton_tol) return ShootingResult{nodes[0], t};
    const RVector step = sys->jac.completeOrthogonalDecomposition().solve(-sys->res);
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 8; ++ls, lambda *= 0.5) {
      std::vector<ClassicalState> trial(nodes.size());
      for (int s = 0; s < m; ++s)
        trial[s] = from_real(to_real(nodes[s]) + lambda * step.segment(s * dn, dn),
                             nodes[s].chart);
      const double t_trial = free_period ? t + lambda * step(m * dn) : t;
      if (!(t_trial > 0.0) || t_trial > 4.0 * t_initial) continue;
      const auto trial_sys = assemble(trial, t_trial, false);
      if (!trial_sys) continue;
      const double r1 = trial_sys->res.cwiseAbs().maxCoeff();
      if (std::isfinite(r1) && (r1 < r0 || ls == 7)) {
        nodes = std::move(trial);
        t = t_trial;
        accepted = r1 < r0;
        if (r1 < cfg.newton_tol) {
          for (auto& x : nodes) x = x.in_preferred_charts();
          return ShootingResult{nodes[0], t};
        }
        break;
      }
    }
    if (!accepted) return std::nullopt;
  }
  return std::nullopt;
}

std::vector<ClassicalState> shooting_nodes(const ClassicalHamiltonian& h,
                                           const ClassicalState& start, double t,
                                           const OrbitSearchConfig& cfg) {
  std::vector<ClassicalState> nodes{start.in_preferred_charts()};
  for (int s = 1; s < cfg.shooting_segments; ++s)
    nodes.push_back(evolve(h, nodes.back(), t / cfg.shooting_segments, cfg.integration)
                        .final_state.in_preferred_charts());
  return nodes;
}

}  // namespace

namespace {

struct Guess {
  double t;
  double distance;
};

// Local minima of the return distance inside [lo, hi].
std::vector<Guess> close_returns(const ClassicalHamiltonian& h, const ClassicalState& seed,
                                 double lo, double hi, const OrbitSearchConfig& cfg) {
  EvolveOptions opts = cfg.integration;
  opts.with_tangent = false;
  opts.record_path = true;
  opts.max_step = hi / 2000.0;
  const auto seg = evolve(h, seed, 1.05 * hi, opts);
  const RVector x0 = seed.stacked_unit_vectors();
  std::vector<double> d(seg.states.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = (seg.states[i].stacked_unit_vectors() - x0).norm();
  std::vector<Guess> out;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    const double t = seg.times[i];
    if (t < lo || t > hi) continue;
    if (d[i] <= d[i - 1] && d[i] <= d[i + 1] && d[i] < cfg.return_radius)
      out.push_back({t, d[i]});
  }
  std::sort(out.begin(), out.end(),
            [](const Guess& a, const Guess& b) { return a.distance < b.distance; });
  if (out.size() > static_cast<std::size_t>(cfg.guesses_per_seed))
    out.resize(cfg.guesses_per_seed);
  return out;
}

struct Candidate {
  ClassicalState start;
  double period;
  double energy;
};

}  // namespace

std::pair<CVector, CVector> flow_and_gradient(const ClassicalHamiltonian& h,
                                              const ClassicalState& s) {
  const int n = s.n_sites();
  const auto jet = h.jet(s, 1);
  const CVector k = canonical_scale(s, h.j_class());
  CVector flow(2 * n), grad(2 * n);
  for (int i = 0; i < n; ++i) {
    flow(i) = jet.grad(n + i);
    flow(n + i) = -k(i) * jet.grad(i);
    grad(i) = k(i) * jet.grad(i);
    grad(n + i) = jet.grad(n + i);
  }
  return {flow, grad};
}

CMatrix monodromy(const ClassicalHamiltonian& h, const PeriodicOrbit& orbit,
                  const EvolveOptions& opts) {
  EvolveOptions o = opts;
  o.with_tangent = true;
  o.record_path = false;
  return evolve(h, orbit.initial, orbit.period, o).tangent;
}

double orbit_distance(const ClassicalHamiltonian& h, const ClassicalState& a, double t,
                      const ClassicalState& b, const EvolveOptions& opts) {
  EvolveOptions o = opts;
  o.with_tangent = false;
  o.record_path = true;
  o.max_step = t / 400.0;
  const auto seg = evolve(h, a, t, o);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seg.states.size(); ++i) {
    const double d = unit_distance(seg.states[i], b);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  // Golden-section refinement around the nearest recorded point.
  o.record_path = false;
  o.max_step = 0.0;
  const ClassicalState& anchor = seg.states[best];
  const double lo_t = best > 0 ? seg.times[best - 1] - seg.times[best] : -t / 400.0;
  const double hi_t = best + 1 < seg.times.size() ? seg.times[best + 1] - seg.times[best]
                                                  : t / 400.0;
  auto dist = [&](double s) { return unit_distance(evolve(h, anchor, s, o).final_state, b); };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = lo_t, hi = hi_t;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = dist(c), fd = dist(d);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = dist(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = dist(d);
    }
  }
  return std::min({best_d, fc, fd});
}

std::pair<double, int> primitive_period(const ClassicalHamiltonian& h,
                                        const ClassicalState& start, double period,
                                        double tol, int max_r, const EvolveOptions& opts) {
  EvolveOptions o = opts;
  o.with_tangent = false;
  o.record_path = false;
  for (int r = max_r; r >= 2; --r) {
    try {
      const auto seg = evolve(h, start, period / r, o);
      if (unit_distance(seg.final_state, start) < tol) return {period / r, r};
    } catch (const NumericError&) {
    }
  }
  return {period, 1};
}

std::optional<PeriodicOrbit> refine_orbit(const ClassicalHamiltonian& h,
                                          const ClassicalState& guess, double period_guess,
                                          std::optional<double> target_energy,
                                          const OrbitSearchConfig& config) {
  config.validate();
  std::optional<ShootingResult> res;
  try {
    res = shoot(h, shooting_nodes(h, guess, period_guess, config), period_guess,
                target_energy, target_energy.has_value(), config);
  } catch (const NumericError&) {
    return std::nullopt;
  }
  if (!res) return std::nullopt;
  PeriodicOrbit orbit = characterize_orbit(h, res->start, res->period, config);
  if (!(orbit.closure_error < config.closure_tol)) return std::nullopt;
  return orbit;
}

ClassicalState shift_energy(const ClassicalHamiltonian& h, const ClassicalState& s,
                            double de) {
  const ClassicalState base = s.in_preferred_charts();
  const RVector g = real_gradient(h, base);
  const double g2 = g.squaredNorm();
  if (g2 < 1e-24) throw NumericError("energy gradient vanishes");
  return from_real(to_real(base) + (de / g2) * g, base.chart);
}

double dT_dE(const ClassicalHamiltonian& h, const PeriodicOrbit& orbit, double de,
             const OrbitSearchConfig& config) {
  if (!(de > 0)) throw ValidationError("continuation step must be positive");
  auto period_at = [&](double shift) {
    const ClassicalState seed = shift_energy(h, orbit.initial, shift);
    const double t_guess = orbit.period + orbit.k_monodromy * shift;
    const auto res = shoot(h, shooting_nodes(h, seed, t_guess, config), t_guess,
                           orbit.energy + shift, true, config);
    if (!res || std::abs(res->period - orbit.period) > 0.1 * orbit.period)
      throw NumericError("orbit continuation failed");
    return res->period;
  };
  const double d1 = (period_at(de) - period_at(-de)) / (2.0 * de);
  const double d2 = (period_at(2.0 * de) - period_at(-2.0 * de)) / (4.0 * de);
  return (4.0 * d1 - d2) / 3.0;
}

PeriodicOrbit characterize_orbit(const ClassicalHamiltonian& h, const ClassicalState& start,
                                 double period, const OrbitSearchConfig& config) {
  PeriodicOrbit orbit;
  orbit.initial = start.in_preferred_charts();
  orbit.period = period;
  orbit.energy = h.value(orbit.initial).real();

  EvolveOptions opts = config.integration;
  opts.with_tangent = true;
  opts.record_path = false;
  const auto seg = evolve(h, orbit.initial, period, opts);
  orbit.closure_error =
      (to_real(seg.final_state.in_charts(orbit.initial.chart)) - to_real(orbit.initial))
          .cwiseAbs()
          .maxCoeff();
  const cplx s = action_integral(seg, h, BoundaryTerms::omit);
  orbit.action = s.real();
  orbit.action_imag = s.imag();
  orbit.monodromy = seg.tangent;
  orbit.det_phase = seg.det_phase;

  const auto [tp, r] = primitive_period(h, orbit.initial, period,
                                        std::max(1e-6, 10.0 * orbit.closure_error),
                                        config.max_repetitions, config.integration);
  orbit.primitive_period = tp;
  orbit.repetitions = r;

  const CMatrix& m = orbit.monodromy;
  const Eigen::Index dim = m.rows();
  {
    Eigen::JacobiSVD<CMatrix> svd(m - CMatrix::Identity(dim, dim));
    const double thresh = 1e-6 * std::max(1.0, m.norm());
    const auto& sv = svd.singularValues();
    int small = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) small += sv(i) < thresh ? 1 : 0;
    orbit.degenerate_family = small >= 2;
  }

  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    orbit.stability_moduli.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(orbit.stability_moduli.begin(), orbit.stability_moduli.end(),
            std::greater<>());

  const auto [flow, grad] = flow_and_gradient(h, orbit.initial);
  try {
    orbit.reduced = generalized_eigensystem(m, flow, grad);
    orbit.k_monodromy = orbit.reduced.k;
  } catch (const NumericError& e) {
    orbit.reduced.usable = false;
    orbit.reduced.note = e.what();
  }
  orbit.k = orbit.k_monodromy;
  if (config.continuation_step > 0.0 && !orbit.degenerate_family) {
    try {
      orbit.k = dT_dE(h, orbit, config.continuation_step, config);
      orbit.k_from_continuation = true;
    } catch (const NumericError&) {
    }
  }
  if (std::abs(orbit.k) < 1e-9 * std::max(1.0, period)) orbit.degenerate_family = true;
  try {
    orbit.maslov_phase = autonomous_maslov_phase(orbit.det_phase, m, orbit.reduced);
  } catch (const NumericError&) {
    orbit.reduced.usable = false;
  }
  return orbit;
}

std::vector<PeriodicOrbit> find_periodic_orbits(const ClassicalHamiltonian& h,
                                                const SearchWindow& window,
                                                const OrbitSearchConfig& config) {
  config.validate();
  const bool energy_mode = window.mode == SearchWindow::Mode::energy;
  if (energy_mode && !(window.t_min > 0 && window.t_max > window.t_min))
    throw ValidationError("period window must satisfy 0 < t_min < t_max");
  if (!energy_mode && !(window.period > 0)) throw ValidationError("period must be positive");

  // Seeds are drawn on the calling thread so results do not depend on the
  // thread count.
  std::vector<ClassicalState> seeds;
  for (const auto& s : config.explicit_seeds) {
    if (s.n_sites() != h.n_sites()) throw ValidationError("seed has wrong number of sites");
    seeds.push_back(s.in_preferred_charts());
  }
  std::mt19937_64 rng(config.rng_seed);
  for (std::size_t i = 0; i < config.random_seeds; ++i)
    seeds.push_back(random_state(h.n_sites(), rng));

  std::vector<std::vector<Candidate>> found(seeds.size());
  parallel_for(seeds.size(), config.threads, [&](std::size_t idx) {
    ClassicalState seed = seeds[idx];
    try {
      std::optional<double> target;
      if (energy_mode) {
        target = window.energy;
      } else {
        const double e = h.value(seed).real();
        if (window.e_min && e < *window.e_min) target = *window.e_min;
        if (window.e_max && e > *window.e_max) target = *window.e_max;
      }
      if (target) {
        auto projected = project_to_shell(h, seed, *target, config);
        if (!projected) return;
        seed = *projected;
      }
      const double lo = energy_mode ? window.t_min : 0.8 * window.period;
      const double hi = energy_mode ? window.t_max : 1.2 * window.period;
      for (const auto& g : close_returns(h, seed, lo, hi, config)) {
        const double t0 = energy_mode ? g.t : window.period;
        auto nodes = shooting_nodes(h, seed, t0, config);
        auto res = shoot(h, std::move(nodes), t0,
                         energy_mode ? std::optional<double>(window.energy) : std::nullopt,
                         energy_mode, config);
        if (!res) continue;
        const double e = h.value(res->start).real();
        if (energy_mode) {
          const double slack = 1e-9 * window.t_max;
          if (res->period < window.t_min - slack || res->period > window.t_max + slack)
            continue;
        } else {
          if (window.e_min && e < *window.e_min - 1e-9) continue;
          if (window.e_max && e > *window.e_max + 1e-9) continue;
        }
        found[idx].push_back({res->start, res->period, e});
      }
    } catch (const NumericError&) {
    }
  });

  std::vector<Candidate> unique;
  for (const auto& list : found)
    for (const auto& c : list) {
      bool dup = false;
      for (const auto& u : unique) {
        if (std::abs(u.period - c.period) > 1e-6 * std::max(1.0, c.period)) continue;
        if (std::abs(u.energy - c.energy) > 1e-6 * std::max(1.0, std::abs(c.energy)))
          continue;
        try {
          if (orbit_distance(h, u.start, u.period, c.start, config.integration) <
              config.dedup_distance) {
            dup = true;
            break;
          }
        } catch (const NumericError&) {
        }
      }
      if (!dup) unique.push_back(c);
    }

  std::vector<std::optional<PeriodicOrbit>> characterized(unique.size());
  parallel_for(unique.size(), config.threads, [&](std::size_t idx) {
    try {
      auto orbit = characterize_orbit(h, unique[idx].start, unique[idx].period, config);
      if (orbit.closure_error < config.closure_tol) characterized[idx] = std::move(orbit);
    } catch (const NumericError&) {
    }
  });

  std::vector<PeriodicOrbit> out;
  for (auto& o : characterized)
    if (o) out.push_back(std::move(*o));
  std::stable_sort(out.begin(), out.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (a.period != b.period) return a.period < b.period;
    return a.energy < b.energy;
  });
  return out;
}

}  // namespace spintrace
