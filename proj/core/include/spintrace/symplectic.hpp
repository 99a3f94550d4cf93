#pragma once

// Linear algebra around the monodromy matrix M of a periodic orbit, in the
// canonical deviations (dU~, dV~) with the a-block first and b-block second.

#include <random>
#include <string>
#include <vector>

#include "spintrace/model.hpp"

namespace spintrace {

struct MonodromyBlocks {
  CMatrix aa, ab, ba, bb;
};

MonodromyBlocks split_blocks(const CMatrix& m);

/// Hessian of the trace exponent F in (dU~', dV~''):
///   [[Mbb^-1 Mba,             1 - Mbb^-1   ],
///    [1 + Mab Mbb^-1 Mba - Maa, -Mab Mbb^-1 ]].
/// Throws NumericError if M_bb is singular.
CMatrix hessian_from_monodromy(const CMatrix& m);

/// Inverse map, with Z = (1 - H_ab)^-1:
///   M = [[1 - H_ab^T - H_bb Z H_aa, -H_bb Z], [Z H_aa, Z]].
CMatrix monodromy_from_hessian(const CMatrix& hf);

/// Hessians of the action S and of F at the orbit point s, together with
/// the diagonal blocks A and D that separate them: H_F = H_S + [[A, 1], [1, D]].
struct HessianPair {
  CMatrix h_s;
  CMatrix h_f;
  CVector a;
  CVector d;
};

HessianPair hessian_pair(const CMatrix& m, const CVector& s, double j_class);

/// |det M_bb det H_F - det(M - 1)| / max(1, |det(M - 1)|).
double three_dets_residual(const CMatrix& m);

/// |det M_bb det H_F(M) - det m_bb det H_F(m)| / max(1, |det M_bb det H_F(M)|)
/// with m = W M W^-1.
double symplectic_invariance_residual(const CMatrix& m, const CMatrix& w);

/// max |H - H^T| / max(1, max |H|).
double symmetry_residual(const CMatrix& h);

/// exp(Omega S) with S complex symmetric, entries normal with the given
/// standard deviation.
CMatrix random_symplectic(int n, std::mt19937_64& rng, double scale = 0.5);

/// Real symplectic matrix exp(Omega S) with real symmetric S.
CMatrix random_real_symplectic(int n, std::mt19937_64& rng, double scale = 0.5);

enum class StabilityKind {
  hyperbolic,          // real Lambda > 0, Lambda != 1
  inverse_hyperbolic,  // real Lambda < 0
  elliptic,            // |Lambda| = 1, Lambda not real
  loxodromic,          // complex quartet off the unit circle
  parabolic,           // Lambda = +-1 (marginal)
};

std::string to_string(StabilityKind k);

struct StabilityPair {
  cplx lambda;  // |lambda| <= 1 member of the pair
  StabilityKind kind;
};

/// Monodromy of an autonomous orbit in the basis (dt, xi, dE, pi).
struct ReducedMonodromy {
  /// Columns: flow direction, stable directions, energy direction,
  /// unstable directions. Symplectic.
  CMatrix w;
  /// W^-1 M W.
  CMatrix m;
  /// m without the dt and dE rows and columns.
  CMatrix m_red;
  std::vector<StabilityPair> pairs;
  /// dT/dE read off the monodromy.
  double k = 0.0;
  /// det(m_red - 1), equal to prod (2 - Lambda - 1/Lambda).
  double det_red_minus_one = 1.0;
  /// False for loxodromic or non-diagonalizable stability blocks; such
  /// orbits are excluded from trace sums.
  bool usable = true;
  bool has_elliptic = false;
  std::string note;
  /// max |W^T Omega W - Omega|.
  double w_symplectic_residual = 0.0;
};

/// `flow` is the canonical flow direction (H_V, -k H_U) and `grad_h` the
/// energy gradient (k H_U, H_V) at the orbit point.
ReducedMonodromy generalized_eigensystem(const CMatrix& m, const CVector& flow,
                                         const CVector& grad_h);

/// Maslov phase of an autonomous orbit: the branch of det^-1/2(-M_bb)
/// followed continuously along the orbit, relative to the principal one,
/// plus the phase of the reduced Gaussian integrals (zero for hyperbolic
/// pairs, -pi/2 per elliptic or inverse-hyperbolic pair).
double autonomous_maslov_phase(double tracked_det_phase, const CMatrix& m,
                               const ReducedMonodromy& red);

/// Maslov phase of a periodic point of a map (no unit eigenvalues):
/// -arg_tracked(det M_bb)/2 - sum arg(mu)/2 with mu the eigenvalues of -i R,
/// R the Hessian H_F restricted to real deviations at a point with scale
/// factors k_i.
double map_maslov_phase(double tracked_det_phase, const CMatrix& m,
                        const CVector& k_start);

/// Complex amplitude of a map periodic point computed from the Gaussian
/// integral directly: 2^N |det K| |det M_bb|^-1/2 prod |mu|^-1/2 e^{iG}.
/// Its modulus equals 1 / sqrt|det(M - 1)|.
cplx map_gaussian_amplitude(double tracked_det_phase, const CMatrix& m,
                            const CVector& k_start);

}  // namespace spintrace
