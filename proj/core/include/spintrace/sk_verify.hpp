#pragma once

// Checks of the O(hbar) relation between the exact Q-symbol h and the naive
// classical Hamiltonian H, h = H + hbar Z + O(hbar^2), and of the exact
// recursion that adds one spin operator to a Hamiltonian.

#include <random>
#include <vector>

#include "spintrace/classical.hpp"

namespace spintrace {

/// Z = (1 / 4 J_class) sum_i (1 + u_i v_i)^2 d^2H / du_i dv_i.
cplx z_correction(const ClassicalHamiltonian& h, const ClassicalState& s);

/// Points near the real section: v_i = conj(u_i) rho e^{i delta} with
/// rho in [0.9, 1.1] and |delta| <= 0.1; |1 + u_i v_i| > 0.1 is enforced.
std::vector<ClassicalState> near_real_samples(int n_sites, int count, std::mt19937_64& rng);

/// Independent complex u, v with moduli in [0.1, 2]; |1 + u_i v_i| > 0.1.
std::vector<ClassicalState> interior_samples(int n_sites, int count, std::mt19937_64& rng);

struct SymbolSample {
  ClassicalState point;
  cplx exact = 0.0;  // h
  cplx naive = 0.0;  // H
  cplx z = 0.0;
  double residual = 0.0;  // |h - H - hbar Z|
};

struct SymbolComparison {
  int twice_j = 0;
  double hbar = 0.0;
  std::vector<SymbolSample> samples;
  double max_residual = 0.0;
};

struct ScalingReport {
  std::vector<SymbolComparison> levels;
  /// Least-squares slope of log max_residual against log hbar.
  double slope = 0.0;
  /// All residuals below exact_tol: the correction cancels exactly and the
  /// slope is not meaningful.
  bool exact = false;
};

/// Compares h, H and Z at the same points for every 2j in `twice_j`, with
/// J_class fixed (hbar = J_class / (j + 1/2)). Needs a j range spanning at
/// least a factor of ten.
ScalingReport verify_hprime(const HamiltonianSpec& spec, int n_sites,
                            const std::vector<int>& twice_j,
                            const std::vector<ClassicalState>& points, double j_class = 1.0,
                            double exact_tol = 1e-12);

/// One-site Q-symbol of the Hermitized spec. e^{u J+} is moved through the
/// operator first, so the result stays accurate where <V*|U> is small
/// compared with the coherent-state norms.
cplx q_symbol_one_site(const HamiltonianSpec& spec, cplx u, cplx v, const ModelContext& ctx);

struct RecursionReport {
  int axis = 0;
  std::vector<double> residuals;
  double max_residual = 0.0;
};

/// One site: Q-symbol of (J_m H + H J_m) / 2 against
/// hbar j n_m h + (hbar / 2) R_m h, with the first derivatives of h taken by
/// fourth-order central differences of step `step`. Residuals are relative
/// to max(|lhs|, |hbar j n_m h|, sum_t |c_t| (hbar j)^(deg_t + 1)).
RecursionReport verify_recursion(const HamiltonianSpec& spec, const ModelContext& ctx,
                                 int axis, const std::vector<ClassicalState>& points,
                                 double step = 1e-5);

/// Every ordered product of spin components on site 1 with degree <= max_degree
/// (the identity included), unit coefficient.
std::vector<HamiltonianSpec> single_site_monomials(int max_degree);

}  // namespace spintrace
