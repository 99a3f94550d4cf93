#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "spintrace/classical.hpp"

namespace spintrace {

namespace {

using State = std::vector<double>;
namespace ode = boost::numeric::odeint;

// Complex layout of the packed state:
//   [u (N), v (N), action, z, tangent (2N x 2N, column major)]
struct Layout {
  int n;
  bool tangent;
  [[nodiscard]] std::size_t action() const { return 2 * n; }
  [[nodiscard]] std::size_t z() const { return 2 * n + 1; }
  [[nodiscard]] std::size_t tan() const { return 2 * n + 2; }
  [[nodiscard]] std::size_t size() const {
    return tan() + (tangent ? static_cast<std::size_t>(4 * n * n) : 0);
  }
};

cplx* as_complex(State& x) { return reinterpret_cast<cplx*>(x.data()); }
const cplx* as_complex(const State& x) {
  return reinterpret_cast<const cplx*>(x.data());
}

ClassicalState unpack_state(const State& x, const Layout& lay,
                            const std::vector<Chart>& charts) {
  const cplx* c = as_complex(x);
  ClassicalState s(lay.n);
  for (int i = 0; i < lay.n; ++i) {
    s.u(i) = c[i];
    s.v(i) = c[lay.n + i];
  }
  s.chart = charts;
  return s;
}

Eigen::Map<CMatrix> tangent_map(State& x, const Layout& lay) {
  return {as_complex(x) + lay.tan(), 2 * lay.n, 2 * lay.n};
}

Eigen::Map<const CMatrix> tangent_map(const State& x, const Layout& lay) {
  return {as_complex(x) + lay.tan(), 2 * lay.n, 2 * lay.n};
}

struct FlowSystem {
  const ClassicalHamiltonian* h;
  const Layout* lay;
  const std::vector<Chart>* charts;
  bool want_z;

  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const int n = lay->n;
    const double jc = h->j_class();
    const ClassicalState s = unpack_state(x, *lay, *charts);
    const int order = (lay->tangent || want_z) ? 2 : 1;
    const HamiltonianJet jet = h->jet(s, order);
    const CVector vel = flow_velocity(s, jet, jc);
    dxdt.assign(x.size(), 0.0);
    cplx* d = as_complex(dxdt);
    cplx sympl = 0.0;
    cplx z = 0.0;
    for (int i = 0; i < n; ++i) {
      d[i] = vel(i);
      d[n + i] = vel(n + i);
      const cplx den = 1.0 + s.u(i) * s.v(i);
      sympl += (vel(n + i) * s.u(i) - s.v(i) * vel(i)) / den;
      if (want_z) z += den * den * jet.hess(i, n + i);
    }
    d[lay->action()] = -(cplx(0.0, jc) * sympl + jet.value);
    d[lay->z()] = want_z ? z / (4.0 * jc) : cplx(0.0);
    if (lay->tangent) {
      const CMatrix a = tangent_generator(s, jet, jc);
      Eigen::Map<CMatrix> out(d + lay->tan(), 2 * n, 2 * n);
      out.noalias() = a * tangent_map(x, *lay);
    }
  }
};

cplx current_det_bb(const State& x, const Layout& lay) {
  return tangent_map(x, lay).bottomRightCorner(lay.n, lay.n).determinant();
}

// Moves site i to the other chart, transforming the tangent rows.
void switch_chart(State& x, const Layout& lay, std::vector<Chart>& charts,
                  int i) {
  cplx* c = as_complex(x);
  const int n = lay.n;
  const cplx v_old = c[n + i];
  if (lay.tangent) {
    auto m = tangent_map(x, lay);
    m.row(i) *= -v_old * v_old;
    m.row(n + i) *= -1.0 / (v_old * v_old);
  }
  c[i] = 1.0 / c[i];
  c[n + i] = 1.0 / v_old;
  charts[i] = charts[i] == Chart::standard ? Chart::inverted : Chart::standard;
}

bool wants_switch(cplx u, cplx v, double radius) {
  const double big = std::max(std::abs(u), std::abs(v));
  const double small = std::min(std::abs(u), std::abs(v));
  return big > radius && small > 1.0 / radius;
}

}  // namespace

TrajectorySegment evolve(const ClassicalHamiltonian& h,
                         const ClassicalState& start, double t,
                         const EvolveOptions& opts) {
  const int n = h.n_sites();
  if (start.n_sites() != n) throw ValidationError("state size does not match model");
  if (!std::isfinite(t)) throw ValidationError("evolution time must be finite");
  if (static_cast<int>(start.chart.size()) != n)
    throw ValidationError("state chart list has wrong length");
  const Layout lay{n, opts.with_tangent};
  const std::vector<Chart> ref = start.chart;
  std::vector<Chart> cur = ref;

  State x(2 * lay.size(), 0.0);
  {
    cplx* c = as_complex(x);
    for (int i = 0; i < n; ++i) {
      c[i] = start.u(i);
      c[n + i] = start.v(i);
    }
    if (lay.tangent) {
      auto m = tangent_map(x, lay);
      if (opts.initial_tangent != nullptr) {
        if (opts.initial_tangent->rows() != 2 * n ||
            opts.initial_tangent->cols() != 2 * n)
          throw ValidationError("initial tangent has wrong shape");
        m = *opts.initial_tangent;
      } else {
        m.setIdentity();
      }
    }
  }
  // Validates the starting point (chart singularity).
  (void)h.jet(start, 0);

  TrajectorySegment seg;
  seg.initial = start;
  seg.duration = t;

  // arg det M_bb in the reference charts is tracked as arg det of the bb
  // block in the current charts plus arg(-1/v^2) for every site whose
  // current chart differs; each piece is resolved separately so that fast
  // rotations of v near a chart singularity cannot alias.
  double phase = opts.initial_det_phase;
  cplx psi_prev = lay.tangent ? current_det_bb(x, lay) : cplx(1.0);
  cplx log_correction = 0.0;
  // Continuous change of ln(v/u) in inverted-chart coordinates, per site.
  CVector inverted_log = CVector::Zero(n);

  auto record = [&](double time) {
    if (!opts.record_path) return;
    seg.times.push_back(time);
    seg.states.push_back(unpack_state(x, lay, cur));
    if (lay.tangent) {
      CMatrix m = tangent_map(x, lay);
      const cplx* c = as_complex(x);
      for (int i = 0; i < n; ++i) {
        if (cur[i] == ref[i]) continue;
        const cplx v = c[n + i];
        m.row(i) *= -v * v;
        m.row(n + i) *= -1.0 / (v * v);
      }
      seg.tangents.push_back(std::move(m));
    }
  };
  record(0.0);

  if (t != 0.0) {
    FlowSystem sys{&h, &lay, &cur, opts.accumulate_z};
    auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol,
                                        ode::runge_kutta_fehlberg78<State>());
    double time = 0.0;
    double dt = std::copysign(std::min(std::abs(t), 1e-2), t);
    const double end_tol = 1e-14 * std::max(1.0, std::abs(t));
    State x_prev;
    while (std::abs(t - time) > end_tol) {
      if (seg.stats.accepted + seg.stats.rejected >= opts.max_steps)
        throw NumericError("integrator exceeded the step budget");
      if (opts.max_step > 0.0 && std::abs(dt) > opts.max_step)
        dt = std::copysign(opts.max_step, t);
      if (std::abs(dt) > std::abs(t - time)) dt = t - time;
      x_prev = x;
      const double t_prev = time;
      if (stepper.try_step(sys, x, time, dt) == ode::fail) {
        ++seg.stats.rejected;
        if (std::abs(dt) < opts.min_step)
          throw NumericError("integrator step size underflow");
        continue;
      }
      bool finite = true;
      for (double c : x) finite = finite && std::isfinite(c);
      if (!finite) {
        x = x_prev;
        time = t_prev;
        dt = 0.25 * (dt == 0.0 ? t - time : dt);
        ++seg.stats.rejected;
        if (std::abs(dt) < opts.min_step)
          throw NumericError("trajectory left the finite domain");
        continue;
      }
      if (lay.tangent) {
        const cplx psi = current_det_bb(x, lay);
        double dphase = std::arg(psi / psi_prev);
        bool resolved = std::abs(dphase) <= opts.max_phase_step;
        const cplx* a = as_complex(x_prev);
        const cplx* b = as_complex(x);
        for (int i = 0; i < n && resolved; ++i) {
          if (cur[i] == ref[i]) continue;
          const double dv = std::arg(b[n + i] / a[n + i]);
          resolved = 2.0 * std::abs(dv) <= opts.max_phase_step;
          dphase -= 2.0 * dv;
        }
        if (!resolved) {
          const double used = time - t_prev;
          x = x_prev;
          time = t_prev;
          dt = 0.5 * used;
          ++seg.stats.rejected;
          if (std::abs(dt) < opts.min_step)
            throw NumericError("cannot resolve the phase of det M_bb");
          continue;
        }
        phase += dphase;
        psi_prev = psi;
      }
      ++seg.stats.accepted;
      // The action is always accumulated with the standard-chart one-form,
      // which differs from the inverted-chart one by d ln(v/u).
      {
        const cplx* a = as_complex(x_prev);
        const cplx* b = as_complex(x);
        for (int i = 0; i < n; ++i) {
          const bool pole = a[i] == 0.0 || a[n + i] == 0.0 || b[i] == 0.0 || b[n + i] == 0.0;
          if (pole) continue;
          const cplx step_log = std::log((b[n + i] / b[i]) / (a[n + i] / a[i]));
          if (cur[i] == Chart::standard) {
            if (ref[i] == Chart::inverted) inverted_log(i) -= step_log;
            continue;
          }
          log_correction += cplx(0.0, h.j_class()) * step_log;
          inverted_log(i) += step_log;
        }
      }
      for (int i = 0; i < n; ++i) {
        const cplx* c = as_complex(x);
        if (wants_switch(c[i], c[n + i], opts.chart_switch_radius)) {
          switch_chart(x, lay, cur, i);
          ++seg.stats.chart_switches;
          if (lay.tangent) psi_prev = current_det_bb(x, lay);
        }
      }
      record(time);
    }
  }

  // Back to the reference charts.
  for (int i = 0; i < n; ++i)
    if (cur[i] != ref[i]) switch_chart(x, lay, cur, i);
  seg.final_state = unpack_state(x, lay, cur);
  const cplx* c = as_complex(x);
  seg.action_integral = c[lay.action()] + log_correction;
  seg.z_integral = c[lay.z()];
  seg.inverted_log = inverted_log;
  if (lay.tangent) seg.tangent = tangent_map(x, lay);
  seg.det_phase = phase;
  return seg;
}

cplx start_chart_action(const TrajectorySegment& seg, double j_class) {
  cplx s = seg.action_integral;
  for (int i = 0; i < seg.initial.n_sites(); ++i)
    if (seg.initial.chart[i] == Chart::inverted && i < seg.inverted_log.size())
      s -= cplx(0.0, j_class) * seg.inverted_log(i);
  return s;
}

TrajectorySegment tangent_flow(const ClassicalHamiltonian& h,
                               const ClassicalState& start, double t,
                               EvolveOptions opts) {
  opts.with_tangent = true;
  opts.record_path = true;
  return evolve(h, start, t, opts);
}

cplx action_integral(const TrajectorySegment& seg, const ClassicalHamiltonian& h,
                     BoundaryTerms boundary) {
  cplx s = seg.action_integral;
  if (boundary == BoundaryTerms::omit) return s;
  const cplx ij(0.0, h.j_class());
  // Boundary labels are taken in the standard chart.
  auto log_overlap = [](const ClassicalState& p, int i) {
    if (p.chart[i] == Chart::standard) return std::log(1.0 + p.v(i) * p.u(i));
    const cplx uv = p.u(i) * p.v(i);
    if (uv == 0.0)
      throw NumericError("boundary label at the north pole has no standard chart value");
    return std::log(1.0 + 1.0 / uv);
  };
  for (int i = 0; i < seg.initial.n_sites(); ++i) {
    s -= ij * log_overlap(seg.final_state, i);
    s -= ij * log_overlap(seg.initial, i);
  }
  return s;
}

}  // namespace spintrace
