#pragma once

// Exact quantum side: spin matrices in the |j,m> basis (m ascending), dense
// chain Hamiltonians, unnormalized spin coherent states, Q-symbols and
// spectra. Everything semiclassical is checked against this module.

#include <span>
#include <vector>

#include "spintrace/model.hpp"

namespace spintrace {

/// Cartesian components of one spin-j in the |j,-j>, ..., |j,j> basis.
struct SpinOperators {
  CMatrix jx;
  CMatrix jy;
  CMatrix jz;

  [[nodiscard]] const CMatrix& component(int axis) const;
};

SpinOperators build_spin_operators(const ModelContext& ctx);

/// Dense (2j+1)^N matrix of a HamiltonianSpec, each term Hermitized as (P + P^dag)/2.
CMatrix build_hamiltonian(const HamiltonianSpec& spec, const ModelContext& ctx,
                          std::size_t dim_cap = kDefaultDimensionCap);

/// Single-site coherent state exp(u J+ / hbar)|j,-j>, components
/// sqrt(binom(2j, j+m)) u^(j+m). Not normalized.
CVector coherent_state(cplx u, const ModelContext& ctx);

/// Tensor product of single-site coherent states.
CVector coherent_state(std::span<const cplx> u, const ModelContext& ctx);

/// <V*|U> as a plain bilinear sum; equals prod_i (1 + v_i u_i)^(2j).
cplx coherent_overlap(std::span<const cplx> v, std::span<const cplx> u,
                      const ModelContext& ctx);

/// max-norm of (2j+1)/pi Int d^2U |U><U| / (1+|U|^2)^(2j+2) - 1 for one
/// site, using Gauss-Legendre in theta (U = e^{-i phi} cot(theta/2)) and
/// the trapezoid rule in phi, both with `order` nodes.
double resolve_identity_residual(const ModelContext& ctx, int order);

/// <V*|H|U> / <V*|U>, evaluated term by term with per-site matrix-vector
/// products so no (2j+1)^N matrix is formed. Throws NumericError when some
/// |1 + v_i u_i| < 1e-12.
cplx q_symbol(const HamiltonianSpec& spec, std::span<const cplx> u,
              std::span<const cplx> v, const ModelContext& ctx);

/// Same quantity from a dense operator (used to cross-check q_symbol).
cplx q_symbol_dense(const CMatrix& op, std::span<const cplx> u,
                    std::span<const cplx> v, const ModelContext& ctx);

struct SpectralDensity {
  std::vector<double> x;
  std::vector<double> value;
};

/// Counting density sum_n g_sigma(x - x_n) with a normalized Gaussian.
SpectralDensity gaussian_density(std::span<const double> levels,
                                 std::span<const double> grid, double width);

/// Hamiltonian together with its eigendecomposition, computed once on
/// construction. Immutable afterwards.
class ExactSystem {
 public:
  ExactSystem(const HamiltonianSpec& spec, const ModelContext& ctx,
              std::size_t dim_cap = kDefaultDimensionCap,
              bool keep_eigenvectors = false);

  [[nodiscard]] const ModelContext& context() const { return ctx_; }
  [[nodiscard]] const CMatrix& hamiltonian() const { return h_; }
  [[nodiscard]] const std::vector<double>& eigenvalues() const { return evals_; }
  /// Columns are eigenvectors; empty unless requested at construction.
  [[nodiscard]] const CMatrix& eigenvectors() const { return evecs_; }

  /// Tr exp(-i H t / hbar).
  [[nodiscard]] cplx propagator_trace(double t) const;

  /// exp(-i H t / hbar); requires eigenvectors.
  [[nodiscard]] CMatrix propagator(double t) const;

  [[nodiscard]] SpectralDensity density(std::span<const double> grid,
                                        double width) const;

 private:
  ModelContext ctx_;
  CMatrix h_;
  std::vector<double> evals_;
  CMatrix evecs_;
};

/// Sorted eigenvalues of a HamiltonianSpec.
std::vector<double> exact_spectrum(const HamiltonianSpec& spec,
                                   const ModelContext& ctx,
                                   std::size_t dim_cap = kDefaultDimensionCap);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace spintrace
