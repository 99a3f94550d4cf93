#include "spintrace/sk_verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spintrace/quantum.hpp"

namespace spintrace {

cplx z_correction(const ClassicalHamiltonian& h, const ClassicalState& s) {
  const int n = s.n_sites();
  const auto jet = h.jet(s, 2);
  cplx z = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx den = 1.0 + s.u(i) * s.v(i);
    z += den * den * jet.hess(i, n + i);
  }
  return z / (4.0 * h.j_class());
}

namespace {

bool admissible(const ClassicalState& s) {
  for (int i = 0; i < s.n_sites(); ++i)
    if (std::abs(1.0 + s.u(i) * s.v(i)) <= 0.1) return false;
  return true;
}

}  // namespace

std::vector<ClassicalState> near_real_samples(int n_sites, int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cos_theta(-0.95, 0.95), phi(-kPi, kPi),
      rho(0.9, 1.1), delta(-0.1, 0.1);
  std::vector<ClassicalState> out;
  while (static_cast<int>(out.size()) < count) {
    ClassicalState s(n_sites);
    for (int i = 0; i < n_sites; ++i) {
      const double c = cos_theta(rng);
      const double cot_half = std::sqrt((1.0 + c) / (1.0 - c));
      s.u(i) = std::polar(cot_half, -phi(rng));
      s.v(i) = std::conj(s.u(i)) * std::polar(rho(rng), delta(rng));
    }
    if (admissible(s)) out.push_back(s);
  }
  return out;
}

std::vector<ClassicalState> interior_samples(int n_sites, int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mod(0.1, 2.0), ang(-kPi, kPi);
  std::vector<ClassicalState> out;
  while (static_cast<int>(out.size()) < count) {
    ClassicalState s(n_sites);
    for (int i = 0; i < n_sites; ++i) {
      s.u(i) = std::polar(mod(rng), ang(rng));
      s.v(i) = std::polar(mod(rng), ang(rng));
    }
    if (admissible(s)) out.push_back(s);
  }
  return out;
}

ScalingReport verify_hprime(const HamiltonianSpec& spec, int n_sites,
                            const std::vector<int>& twice_j,
                            const std::vector<ClassicalState>& points, double j_class,
                            double exact_tol) {
  if (twice_j.size() < 2) throw ValidationError("need at least two spin values");
  const auto [lo, hi] = std::minmax_element(twice_j.begin(), twice_j.end());
  if (*lo < 1 || *hi + 1 < 10 * (*lo + 1))
    throw ValidationError("spin values must span at least one decade");
  if (points.empty()) throw ValidationError("no sample points");

  ScalingReport report;
  for (int tj : twice_j) {
    const auto ctx = ModelContext::with_fixed_j_class(n_sites, tj, j_class);
    const ClassicalHamiltonian h(spec, ctx);
    SymbolComparison cmp;
    cmp.twice_j = tj;
    cmp.hbar = ctx.hbar;
    for (const auto& p : points) {
      if (p.n_sites() != n_sites) throw ValidationError("sample point has wrong size");
      SymbolSample smp;
      smp.point = p;
      const std::vector<cplx> u(p.u.data(), p.u.data() + n_sites);
      const std::vector<cplx> v(p.v.data(), p.v.data() + n_sites);
      smp.exact = q_symbol(spec, u, v, ctx);
      smp.naive = h.value(p);
      smp.z = z_correction(h, p);
      smp.residual = std::abs(smp.exact - smp.naive - ctx.hbar * smp.z);
      cmp.max_residual = std::max(cmp.max_residual, smp.residual);
      cmp.samples.push_back(std::move(smp));
    }
    report.levels.push_back(std::move(cmp));
  }

  report.exact = true;
  for (const auto& l : report.levels) report.exact = report.exact && l.max_residual < exact_tol;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(report.levels.size());
  for (const auto& l : report.levels) {
    const double x = std::log(l.hbar);
    const double y = std::log(std::max(l.max_residual, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  report.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return report;
}

namespace {

// <-j| e^{g S-} W |-j> with W the word conjugated by e^{u S+}, g = v / (1 + u v):
// S+ -> S+, S0 -> S0 + u S+, S- -> S- - 2u S0 - u^2 S+ (hbar = 1 units).
cplx word_symbol(const std::vector<int>& word, cplx u, cplx v, const ModelContext& ctx) {
  const int d = ctx.twice_j + 1;
  const double j = ctx.j();
  std::vector<double> raise(d, 0.0);  // <k+1|S+|k>
  for (int k = 0; k + 1 < d; ++k) {
    const double m = k - j;
    raise[k] = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  CVector w = CVector::Zero(d);
  w(0) = 1.0;
  auto plus = [&](const CVector& x) {
    CVector y = CVector::Zero(d);
    for (int k = 0; k + 1 < d; ++k) y(k + 1) = raise[k] * x(k);
    return y;
  };
  auto minus = [&](const CVector& x) {
    CVector y = CVector::Zero(d);
    for (int k = 1; k < d; ++k) y(k - 1) = raise[k - 1] * x(k);
    return y;
  };
  auto zero = [&](const CVector& x) {
    CVector y(d);
    for (int k = 0; k < d; ++k) y(k) = (k - j) * x(k);
    return y;
  };
  const cplx i(0.0, 1.0);
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    const CVector p = plus(w);
    const CVector z = zero(w) + u * p;
    const CVector m = minus(w) - 2.0 * u * zero(w) - u * u * p;
    switch (*it) {
      case 1: w = 0.5 * (p + m); break;
      case 2: w = (p - m) / (2.0 * i); break;
      default: w = z; break;
    }
    w *= ctx.hbar;
  }
  const CVector bra = coherent_state(v / (1.0 + u * v), ctx);
  return (bra.transpose() * w)(0);
}

// Symbol of sum_t c_t (P_t + P_t^dag) / 2, optionally symmetrized with one
// more spin component as (J_m O + O J_m) / 2.
cplx hermitized_symbol(const HamiltonianSpec& spec, cplx u, cplx v, const ModelContext& ctx,
                       int extra_axis) {
  cplx total = 0.0;
  for (const auto& term : spec.terms) {
    std::vector<int> word;
    for (const auto& f : term.factors) {
      if (f.site != 1) throw ValidationError("single-site symbol needs factors on site 1");
      word.push_back(f.axis);
    }
    const std::vector<int> rev(word.rbegin(), word.rend());
    cplx t = 0.0;
    if (extra_axis == 0) {
      t = 0.5 * (word_symbol(word, u, v, ctx) + word_symbol(rev, u, v, ctx));
    } else {
      for (const auto* w : std::array<const std::vector<int>*, 2>{&word, &rev}) {
        std::vector<int> left{extra_axis}, right = *w;
        left.insert(left.end(), w->begin(), w->end());
        right.push_back(extra_axis);
        t += 0.25 * (word_symbol(left, u, v, ctx) + word_symbol(right, u, v, ctx));
      }
    }
    total += term.coefficient * t;
  }
  return total;
}

}  // namespace

cplx q_symbol_one_site(const HamiltonianSpec& spec, cplx u, cplx v, const ModelContext& ctx) {
  if (ctx.n_sites != 1) throw ValidationError("single-site symbol needs n_sites = 1");
  if (std::abs(1.0 + u * v) < 1e-12) throw NumericError("coherent states are orthogonal");
  return hermitized_symbol(spec, u, v, ctx, 0);
}

RecursionReport verify_recursion(const HamiltonianSpec& spec, const ModelContext& ctx,
                                 int axis, const std::vector<ClassicalState>& points,
                                 double step) {
  if (ctx.n_sites != 1) throw ValidationError("the recursion check is defined for N = 1");
  if (axis < 1 || axis > 3) throw ValidationError("axis must be 1, 2 or 3");
  if (!(step > 0)) throw ValidationError("difference step must be positive");
  for (const auto& term : spec.terms)
    for (const auto& f : term.factors)
      if (f.site != 1) throw ValidationError("recursion spec must live on site 1");

  auto h_of = [&](cplx u, cplx v) { return hermitized_symbol(spec, u, v, ctx, 0); };
  // Size of the symbol of J_m H for unit coherent labels; guards cases where
  // the symmetrized product vanishes identically (e.g. anticommutators at j = 1/2).
  double floor = 0.0;
  for (const auto& term : spec.terms)
    floor += std::abs(term.coefficient) *
             std::pow(ctx.hbar * ctx.j(), static_cast<double>(term.factors.size() + 1));
  // Fourth-order central difference along a complex direction.
  auto derivative = [&](cplx u, cplx v, bool in_u) {
    auto f = [&](double k) {
      return in_u ? h_of(u + k * step, v) : h_of(u, v + k * step);
    };
    return (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * step);
  };

  const double hbar = ctx.hbar;
  const double j = ctx.j();
  const cplx i(0.0, 1.0);
  RecursionReport report;
  report.axis = axis;
  for (const auto& p : points) {
    if (p.n_sites() != 1) throw ValidationError("sample point has wrong size");
    const cplx u = p.u(0), v = p.v(0);
    const cplx lhs = hermitized_symbol(spec, u, v, ctx, axis);
    const cplx h = h_of(u, v);
    const cplx hu = derivative(u, v, true), hv = derivative(u, v, false);
    const cplx den = 1.0 + u * v;
    cplx nm, r;
    switch (axis) {
      case 1:
        nm = (u + v) / den;
        r = 0.5 * (1.0 - u * u) * hu + 0.5 * (1.0 - v * v) * hv;
        break;
      case 2:
        nm = (v - u) / (i * den);
        r = (1.0 + u * u) / (2.0 * i) * hu - (1.0 + v * v) / (2.0 * i) * hv;
        break;
      default:
        nm = (u * v - 1.0) / den;
        r = v * hv + u * hu;
        break;
    }
    const cplx lead = hbar * j * nm * h;
    const cplx rhs = lead + 0.5 * hbar * r;
    const double scale = std::max({std::abs(lhs), std::abs(lead), floor, 1e-300});
    const double res = std::abs(lhs - rhs) / scale;
    report.residuals.push_back(res);
    report.max_residual = std::max(report.max_residual, res);
  }
  return report;
}

std::vector<HamiltonianSpec> single_site_monomials(int max_degree) {
  std::vector<HamiltonianSpec> out;
  std::vector<std::vector<int>> words{{}};
  for (int d = 0; d <= max_degree; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& w : words) {
      HamiltonianSpec s;
      std::vector<Factor> f;
      for (int a : w) f.push_back({1, a});
      s.add(1.0, f);
      out.push_back(s);
      for (int a = 1; a <= 3; ++a) {
        auto longer = w;
        longer.push_back(a);
        next.push_back(longer);
      }
    }
    words = std::move(next);
  }
  return out;
}

}  // namespace spintrace
