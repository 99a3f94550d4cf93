#include "spintrace/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/KroneckerProduct>

namespace spintrace {

const CMatrix& SpinOperators::component(int axis) const {
  switch (axis) {
    case 1: return jx;
    case 2: return jy;
    case 3: return jz;
    default: throw ValidationError("spin component must be 1, 2 or 3");
  }
}

SpinOperators build_spin_operators(const ModelContext& ctx) {
  ctx.validate();
  const int d = ctx.local_dim();
  const double j = ctx.j();
  const double hbar = ctx.hbar;
  CMatrix jplus = CMatrix::Zero(d, d);
  CMatrix jz = CMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = k - j;
    jz(k, k) = hbar * m;
    if (k + 1 < d) jplus(k + 1, k) = hbar * std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const CMatrix jminus = jplus.adjoint();
  SpinOperators ops;
  ops.jx = 0.5 * (jplus + jminus);
  ops.jy = cplx(0.0, -0.5) * (jplus - jminus);
  ops.jz = jz;
  return ops;
}

namespace {

// Ordered product of the factors of `term` that live on `site`.
CMatrix site_product(const Term& term, int site, const SpinOperators& ops,
                     int d, bool reversed) {
  CMatrix p = CMatrix::Identity(d, d);
  const auto& f = term.factors;
  if (!reversed) {
    for (const auto& x : f)
      if (x.site == site) p = p * ops.component(x.axis);
  } else {
    for (auto it = f.rbegin(); it != f.rend(); ++it)
      if (it->site == site) p = p * ops.component(it->axis);
  }
  return p;
}

CMatrix kron_chain(const std::vector<CMatrix>& parts) {
  CMatrix out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    CMatrix next = Eigen::kroneckerProduct(out, parts[i]).eval();
    out.swap(next);
  }
  return out;
}

}  // namespace

CMatrix build_hamiltonian(const HamiltonianSpec& spec, const ModelContext& ctx,
                          std::size_t dim_cap) {
  ctx.validate();
  spec.validate(ctx);
  ctx.require_dim_within(dim_cap);
  const auto ops = build_spin_operators(ctx);
  const int d = ctx.local_dim();
  const auto dim = static_cast<Eigen::Index>(ctx.hilbert_dim());
  CMatrix h = CMatrix::Zero(dim, dim);
  // Factors on different sites commute, so P is a Kronecker product of the
  // per-site ordered products; P^dagger reverses the order on each site.
  for (const auto& term : spec.terms) {
    if (term.coefficient == 0.0) continue;
    std::vector<CMatrix> fwd;
    fwd.reserve(ctx.n_sites);
    for (int s = 1; s <= ctx.n_sites; ++s)
      fwd.push_back(site_product(term, s, ops, d, false));
    const CMatrix p = kron_chain(fwd);
    h += (0.5 * term.coefficient) * (p + p.adjoint());
  }
  return h;
}

CVector coherent_state(cplx u, const ModelContext& ctx) {
  const int n = ctx.twice_j;
  CVector c(n + 1);
  // sqrt(binom(n, k)) built multiplicatively to stay accurate for large j.
  double root_binom = 1.0;
  cplx power = 1.0;
  for (int k = 0; k <= n; ++k) {
    c(k) = root_binom * power;
    root_binom *= std::sqrt(static_cast<double>(n - k) / (k + 1));
    power *= u;
  }
  return c;
}

CVector coherent_state(std::span<const cplx> u, const ModelContext& ctx) {
  if (static_cast<int>(u.size()) != ctx.n_sites)
    throw ValidationError("coherent label length must equal n_sites");
  ctx.require_dim_within(std::numeric_limits<std::size_t>::max());
  CVector out = coherent_state(u[0], ctx);
  for (std::size_t i = 1; i < u.size(); ++i) {
    CVector next = Eigen::kroneckerProduct(out, coherent_state(u[i], ctx)).eval();
    out.swap(next);
  }
  return out;
}

cplx coherent_overlap(std::span<const cplx> v, std::span<const cplx> u,
                      const ModelContext& ctx) {
  cplx prod = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const CVector bra = coherent_state(v[i], ctx);
    const CVector ket = coherent_state(u[i], ctx);
    prod *= (bra.transpose() * ket)(0);
  }
  return prod;
}

void gauss_legendre(int order, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (order < 1) throw ValidationError("quadrature order must be >= 1");
  nodes.assign(order, 0.0);
  weights.assign(order, 0.0);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[order - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = weights[order - 1 - i] = w;
  }
}

double resolve_identity_residual(const ModelContext& ctx, int order) {
  if (ctx.n_sites != 1)
    throw ValidationError("resolution-of-identity check is defined for N = 1");
  const int d = ctx.local_dim();
  const double two_j = ctx.twice_j;
  std::vector<double> x, w;
  gauss_legendre(order, x, w);
  CMatrix acc = CMatrix::Zero(d, d);
  const double dphi = 2.0 * kPi / order;
  for (int a = 0; a < order; ++a) {
    // theta in (0, pi), r = cot(theta/2), d^2U = r dr dphi,
    // |dr/dtheta| = 1 / (2 sin^2(theta/2)), 1 + r^2 = 1 / sin^2(theta/2).
    const double theta = 0.5 * kPi * (x[a] + 1.0);
    const double wt = 0.5 * kPi * w[a];
    const double s = std::sin(0.5 * theta);
    const double c = std::cos(0.5 * theta);
    const double r = c / s;
    const double jac = r / (2.0 * s * s);
    const double measure = std::pow(s * s, two_j + 2.0);
    for (int b = 0; b < order; ++b) {
      const double phi = b * dphi;
      const CVector ket = coherent_state(std::polar(r, -phi), ctx);
      acc += (wt * dphi * jac * measure) * (ket * ket.adjoint());
    }
  }
  acc *= (two_j + 1.0) / kPi;
  return (acc - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

namespace {

void check_overlap(cplx u, cplx v) {
  if (std::abs(1.0 + u * v) < 1e-12)
    throw NumericError("coherent overlap vanishes: |1 + v u| < 1e-12");
}

}  // namespace

cplx q_symbol(const HamiltonianSpec& spec, std::span<const cplx> u,
              std::span<const cplx> v, const ModelContext& ctx) {
  spec.validate(ctx);
  if (static_cast<int>(u.size()) != ctx.n_sites ||
      static_cast<int>(v.size()) != ctx.n_sites)
    throw ValidationError("coherent labels must have length n_sites");
  for (int i = 0; i < ctx.n_sites; ++i) check_overlap(u[i], v[i]);
  const auto ops = build_spin_operators(ctx);
  std::vector<CVector> kets, bras;
  std::vector<cplx> overlaps;
  for (int i = 0; i < ctx.n_sites; ++i) {
    kets.push_back(coherent_state(u[i], ctx));
    bras.push_back(coherent_state(v[i], ctx));
    overlaps.push_back((bras.back().transpose() * kets.back())(0));
  }
  cplx total = 0.0;
  for (const auto& term : spec.terms) {
    // Normalized per-site matrix elements of P and of P^dagger.
    cplx fwd = 1.0, bwd = 1.0;
    for (int s = 0; s < ctx.n_sites; ++s) {
      CVector a = kets[s];
      CVector b = kets[s];
      const auto& f = term.factors;
      for (auto it = f.rbegin(); it != f.rend(); ++it)
        if (it->site == s + 1) a = ops.component(it->axis) * a;
      for (const auto& x : f)
        if (x.site == s + 1) b = ops.component(x.axis) * b;
      fwd *= (bras[s].transpose() * a)(0) / overlaps[s];
      bwd *= (bras[s].transpose() * b)(0) / overlaps[s];
    }
    total += term.coefficient * 0.5 * (fwd + bwd);
  }
  return total;
}

cplx q_symbol_dense(const CMatrix& op, std::span<const cplx> u,
                    std::span<const cplx> v, const ModelContext& ctx) {
  for (int i = 0; i < ctx.n_sites; ++i) check_overlap(u[i], v[i]);
  const CVector ket = coherent_state(u, ctx);
  const CVector bra = coherent_state(v, ctx);
  return (bra.transpose() * op * ket)(0) / (bra.transpose() * ket)(0);
}

SpectralDensity gaussian_density(std::span<const double> levels,
                                 std::span<const double> grid, double width) {
  if (!(width > 0.0)) throw ValidationError("smoothing width must be positive");
  SpectralDensity out;
  out.x.assign(grid.begin(), grid.end());
  out.value.assign(grid.size(), 0.0);
  const double norm = 1.0 / (std::sqrt(2.0 * kPi) * width);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double e : levels) {
      const double z = (grid[i] - e) / width;
      if (std::abs(z) < 40.0) acc += std::exp(-0.5 * z * z);
    }
    out.value[i] = norm * acc;
  }
  return out;
}

ExactSystem::ExactSystem(const HamiltonianSpec& spec, const ModelContext& ctx,
                         std::size_t dim_cap, bool keep_eigenvectors)
    : ctx_(ctx), h_(build_hamiltonian(spec, ctx, dim_cap)) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(
      h_, keep_eigenvectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("Hermitian eigensolver failed");
  const auto& ev = es.eigenvalues();
  evals_.assign(ev.data(), ev.data() + ev.size());
  if (keep_eigenvectors) evecs_ = es.eigenvectors();
}

cplx ExactSystem::propagator_trace(double t) const {
  cplx acc = 0.0;
  for (double e : evals_) acc += std::polar(1.0, -e * t / ctx_.hbar);
  return acc;
}

CMatrix ExactSystem::propagator(double t) const {
  if (evecs_.size() == 0)
    throw Error("ExactSystem built without eigenvectors");
  CVector phases(static_cast<Eigen::Index>(evals_.size()));
  for (std::size_t i = 0; i < evals_.size(); ++i)
    phases(static_cast<Eigen::Index>(i)) = std::polar(1.0, -evals_[i] * t / ctx_.hbar);
  return evecs_ * phases.asDiagonal() * evecs_.adjoint();
}

SpectralDensity ExactSystem::density(std::span<const double> grid,
                                     double width) const {
  return gaussian_density(evals_, grid, width);
}

std::vector<double> exact_spectrum(const HamiltonianSpec& spec,
                                   const ModelContext& ctx,
                                   std::size_t dim_cap) {
  return ExactSystem(spec, ctx, dim_cap).eigenvalues();
}

}  // namespace spintrace
