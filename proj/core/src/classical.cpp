#include "spintrace/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spintrace {

namespace {

constexpr double kChartSingular = 1e-12;

double chart_sign(Chart c, int axis) {
  return (c == Chart::inverted && axis != 1) ? -1.0 : 1.0;
}

// One unit-vector component and its derivatives in (u, v).
struct ComponentJet {
  cplx val, du, dv, duu, duv, dvv;
};

ComponentJet component_jet(cplx u, cplx v, Chart chart, int axis) {
  const cplx d = 1.0 + u * v;
  if (std::abs(d) < kChartSingular)
    throw NumericError("chart singularity: |1 + u v| < 1e-12");
  const cplx d2 = d * d;
  const cplx d3 = d2 * d;
  const cplx i(0.0, 1.0);
  ComponentJet c{};
  switch (axis) {
    case 1:
      c.val = (u + v) / d;
      c.du = (1.0 - v * v) / d2;
      c.dv = (1.0 - u * u) / d2;
      c.duu = -2.0 * v * (1.0 - v * v) / d3;
      c.dvv = -2.0 * u * (1.0 - u * u) / d3;
      c.duv = -2.0 * (u + v) / d3;
      break;
    case 2:
      c.val = -i * (v - u) / d;
      c.du = i * (1.0 + v * v) / d2;
      c.dv = -i * (1.0 + u * u) / d2;
      c.duu = -2.0 * i * v * (1.0 + v * v) / d3;
      c.dvv = 2.0 * i * u * (1.0 + u * u) / d3;
      c.duv = 2.0 * i * (v - u) / d3;
      break;
    case 3:
      c.val = (u * v - 1.0) / d;
      c.du = 2.0 * v / d2;
      c.dv = 2.0 * u / d2;
      c.duu = -4.0 * v * v / d3;
      c.dvv = -4.0 * u * u / d3;
      c.duv = 2.0 * (1.0 - u * v) / d3;
      break;
    default:
      throw ValidationError("spin component must be 1, 2 or 3");
  }
  const double s = chart_sign(chart, axis);
  c.val *= s;
  c.du *= s;
  c.dv *= s;
  c.duu *= s;
  c.duv *= s;
  c.dvv *= s;
  return c;
}

}  // namespace

SitePoint angles_to_uv(double theta, double phi) {
  SitePoint p;
  if (theta >= 0.5 * kPi) {
    p.u = std::polar(1.0 / std::tan(0.5 * theta), -phi);
    p.chart = Chart::standard;
  } else {
    p.u = std::polar(std::tan(0.5 * theta), phi);
    p.chart = Chart::inverted;
  }
  p.v = std::conj(p.u);
  return p;
}

std::pair<double, double> uv_to_angles(cplx u, Chart chart) {
  const double r = std::abs(u);
  if (chart == Chart::standard) {
    const double theta = 2.0 * std::atan2(1.0, r);
    return {theta, r == 0.0 ? 0.0 : -std::arg(u)};
  }
  const double theta = 2.0 * std::atan(r);
  return {theta, r == 0.0 ? 0.0 : std::arg(u)};
}

Eigen::Vector3cd site_unit_vector(cplx u, cplx v, Chart chart) {
  Eigen::Vector3cd n;
  for (int a = 1; a <= 3; ++a) n(a - 1) = component_jet(u, v, chart, a).val;
  return n;
}

ClassicalState::ClassicalState(int n_sites)
    : u(CVector::Zero(n_sites)),
      v(CVector::Zero(n_sites)),
      chart(static_cast<std::size_t>(n_sites), Chart::standard) {}

ClassicalState ClassicalState::from_angles(std::span<const double> theta,
                                           std::span<const double> phi) {
  if (theta.size() != phi.size() || theta.empty())
    throw ValidationError("theta and phi must be non-empty and of equal length");
  ClassicalState s(static_cast<int>(theta.size()));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto p = angles_to_uv(theta[i], phi[i]);
    const auto k = static_cast<Eigen::Index>(i);
    s.u(k) = p.u;
    s.v(k) = p.v;
    s.chart[i] = p.chart;
  }
  return s;
}

ClassicalState ClassicalState::from_unit_vectors(
    std::span<const Eigen::Vector3d> n) {
  std::vector<double> theta, phi;
  for (const auto& x : n) {
    const double norm = x.norm();
    if (!(norm > 0.0)) throw ValidationError("zero spin direction");
    theta.push_back(std::acos(std::clamp(x(2) / norm, -1.0, 1.0)));
    phi.push_back(std::atan2(x(1), x(0)));
  }
  return from_angles(theta, phi);
}

bool ClassicalState::is_real(double tol) const {
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (std::abs(v(i) - std::conj(u(i))) > tol * (1.0 + std::abs(u(i))))
      return false;
  return true;
}

std::vector<Eigen::Vector3d> ClassicalState::unit_vectors() const {
  std::vector<Eigen::Vector3d> out;
  for (int i = 0; i < n_sites(); ++i)
    out.push_back(site_unit_vector(u(i), v(i), chart[i]).real());
  return out;
}

RVector ClassicalState::stacked_unit_vectors() const {
  RVector out(3 * n_sites());
  for (int i = 0; i < n_sites(); ++i)
    out.segment<3>(3 * i) = site_unit_vector(u(i), v(i), chart[i]).real();
  return out;
}

ClassicalState chart_convert(const ClassicalState& s, int site) {
  if (site < 0 || site >= s.n_sites())
    throw ValidationError("site index out of range");
  const auto k = static_cast<std::size_t>(site);
  if (s.u(site) == 0.0 || s.v(site) == 0.0)
    throw NumericError("point sits on the pole of the target chart");
  ClassicalState out = s;
  out.u(site) = 1.0 / s.u(site);
  out.v(site) = 1.0 / s.v(site);
  out.chart[k] = s.chart[k] == Chart::standard ? Chart::inverted : Chart::standard;
  return out;
}

ClassicalState ClassicalState::in_charts(const std::vector<Chart>& charts) const {
  if (charts.size() != chart.size())
    throw ValidationError("chart list length must equal n_sites");
  ClassicalState out = *this;
  for (int i = 0; i < n_sites(); ++i)
    if (out.chart[i] != charts[i]) out = chart_convert(out, i);
  return out;
}

ClassicalState ClassicalState::in_preferred_charts() const {
  ClassicalState out = *this;
  for (int i = 0; i < n_sites(); ++i)
    if (std::abs(out.u(i)) > 1.0) out = chart_convert(out, i);
  return out;
}

ClassicalHamiltonian::ClassicalHamiltonian(HamiltonianSpec spec, ModelContext ctx)
    : spec_(std::move(spec)), ctx_(ctx) {
  ctx_.validate();
  spec_.validate(ctx_);
}

cplx ClassicalHamiltonian::value(const ClassicalState& s) const {
  return jet(s, 0).value;
}

HamiltonianJet ClassicalHamiltonian::jet(const ClassicalState& s,
                                         int order) const {
  const int n = ctx_.n_sites;
  if (s.n_sites() != n) throw ValidationError("state size does not match model");
  const double jc = ctx_.j_class();
  HamiltonianJet out;
  out.value = 0.0;
  out.grad = CVector::Zero(2 * n);
  if (order >= 2) out.hess = CMatrix::Zero(2 * n, 2 * n);

  // Component jets are cached per (site, axis).
  std::vector<std::array<ComponentJet, 3>> cache(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int a = 1; a <= 3; ++a)
      cache[i][a - 1] = component_jet(s.u(i), s.v(i), s.chart[i], a);

  std::vector<cplx> val, prefix, suffix;
  for (const auto& term : spec_.terms) {
    if (term.coefficient == 0.0) continue;
    const auto& f = term.factors;
    const std::size_t m = f.size();
    if (m == 0) {
      out.value += term.coefficient;
      continue;
    }
    val.resize(m);
    for (std::size_t k = 0; k < m; ++k)
      val[k] = jc * cache[f[k].site - 1][f[k].axis - 1].val;
    prefix.assign(m + 1, 1.0);
    suffix.assign(m + 1, 1.0);
    for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] * val[k];
    for (std::size_t k = m; k-- > 0;) suffix[k] = suffix[k + 1] * val[k];
    const double c = term.coefficient;
    out.value += c * prefix[m];
    if (order < 1) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& cj = cache[f[k].site - 1][f[k].axis - 1];
      const cplx others = c * jc * prefix[k] * suffix[k + 1];
      const int iu = f[k].site - 1;
      const int iv = n + f[k].site - 1;
      out.grad(iu) += others * cj.du;
      out.grad(iv) += others * cj.dv;
      if (order < 2) continue;
      out.hess(iu, iu) += others * cj.duu;
      out.hess(iv, iv) += others * cj.dvv;
      out.hess(iu, iv) += others * cj.duv;
      out.hess(iv, iu) += others * cj.duv;
      for (std::size_t q = 0; q < m; ++q) {
        if (q == k) continue;
        cplx rest = c * jc * jc;
        for (std::size_t l = 0; l < m; ++l)
          if (l != k && l != q) rest *= val[l];
        const auto& cq = cache[f[q].site - 1][f[q].axis - 1];
        const int qu = f[q].site - 1;
        const int qv = n + f[q].site - 1;
        out.hess(iu, qu) += rest * cj.du * cq.du;
        out.hess(iu, qv) += rest * cj.du * cq.dv;
        out.hess(iv, qu) += rest * cj.dv * cq.du;
        out.hess(iv, qv) += rest * cj.dv * cq.dv;
      }
    }
  }
  return out;
}

CVector canonical_scale(const ClassicalState& s, double j_class) {
  const cplx denom(0.0, 2.0 * j_class);
  CVector k(s.n_sites());
  for (int i = 0; i < s.n_sites(); ++i) {
    const cplx d = 1.0 + s.u(i) * s.v(i);
    k(i) = d * d / denom;
  }
  return k;
}

CVector flow_velocity(const ClassicalState& s, const HamiltonianJet& jet,
                      double j_class) {
  const int n = s.n_sites();
  const CVector k = canonical_scale(s, j_class);
  CVector out(2 * n);
  for (int i = 0; i < n; ++i) {
    out(i) = k(i) * jet.grad(n + i);
    out(n + i) = -k(i) * jet.grad(i);
  }
  return out;
}

CMatrix symplectic_form(int n) {
  CMatrix om = CMatrix::Zero(2 * n, 2 * n);
  om.topRightCorner(n, n).setIdentity();
  om.bottomLeftCorner(n, n) = -CMatrix::Identity(n, n);
  return om;
}

CMatrix tangent_generator(const ClassicalState& s, const HamiltonianJet& jet,
                          double j_class) {
  const int n = s.n_sites();
  const CVector k = canonical_scale(s, j_class);
  const auto& g = jet.grad;
  const auto& h = jet.hess;
  // Jacobian of the raw flow (k_i H_v_i, -k_i H_u_i) in (u, v).
  CMatrix jf(2 * n, 2 * n);
  CVector dk_du(n), dk_dv(n), kdot(n);
  for (int i = 0; i < n; ++i) {
    const cplx d = 1.0 + s.u(i) * s.v(i);
    dk_du(i) = 2.0 * k(i) * s.v(i) / d;
    dk_dv(i) = 2.0 * k(i) * s.u(i) / d;
    kdot(i) = dk_du(i) * k(i) * g(n + i) - dk_dv(i) * k(i) * g(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < 2 * n; ++l) {
      jf(i, l) = k(i) * h(n + i, l);
      jf(n + i, l) = -k(i) * h(i, l);
    }
    jf(i, i) += dk_du(i) * g(n + i);
    jf(i, n + i) += dk_dv(i) * g(n + i);
    jf(n + i, i) -= dk_du(i) * g(i);
    jf(n + i, n + i) -= dk_dv(i) * g(i);
  }
  // A = T^-1 (J_F T - dT/dt), T = diag(k, 1).
  CMatrix a(2 * n, 2 * n);
  for (int r = 0; r < 2 * n; ++r) {
    const cplx row_scale = r < n ? 1.0 / k(r) : cplx(1.0);
    for (int c = 0; c < 2 * n; ++c) {
      const cplx col_scale = c < n ? k(c) : cplx(1.0);
      a(r, c) = row_scale * jf(r, c) * col_scale;
    }
  }
  for (int i = 0; i < n; ++i) a(i, i) -= kdot(i) / k(i);
  return a;
}

CMatrix tangent_generator_hamiltonian(const ClassicalState& s,
                                      const HamiltonianJet& jet,
                                      double j_class) {
  const int n = s.n_sites();
  const CVector k = canonical_scale(s, j_class);
  const auto& g = jet.grad;
  const auto& h = jet.hess;
  CMatrix quu(n, n), quv(n, n), qvv(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      quu(a, b) = h(a, b) * k(a) * k(b);
      quv(a, b) = h(a, n + b) * k(a);
      qvv(a, b) = h(n + a, n + b);
    }
    const cplx d = 1.0 + s.u(a) * s.v(a);
    quu(a, a) += 2.0 * g(a) * s.v(a) * k(a) * k(a) / d;
    quv(a, a) += 2.0 * g(a) * s.u(a) * k(a) / d;
    qvv(a, a) += 2.0 * g(n + a) * s.u(a) / d;
  }
  CMatrix q(2 * n, 2 * n);
  q << quu, quv, quv.transpose(), qvv;
  return symplectic_form(n) * q;
}

double symplectic_residual(const CMatrix& m) {
  const int n = static_cast<int>(m.rows() / 2);
  const CMatrix om = symplectic_form(n);
  return (m.transpose() * om * m - om).cwiseAbs().maxCoeff();
}

}  // namespace spintrace
