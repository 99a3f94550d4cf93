#include "spintrace/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "spintrace/classical.hpp"

namespace spintrace {

MonodromyBlocks split_blocks(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0 || m.rows() == 0)
    throw ValidationError("monodromy must be square of even size");
  const auto n = m.rows() / 2;
  return {m.topLeftCorner(n, n), m.topRightCorner(n, n),
          m.bottomLeftCorner(n, n), m.bottomRightCorner(n, n)};
}

CMatrix hessian_from_monodromy(const CMatrix& m) {
  const auto b = split_blocks(m);
  const auto n = b.aa.rows();
  Eigen::FullPivLU<CMatrix> lu(b.bb);
  if (!lu.isInvertible() || lu.rcond() < 1e-14)
    throw NumericError("M_bb is singular");
  const CMatrix bb_inv = lu.inverse();
  const CMatrix id = CMatrix::Identity(n, n);
  CMatrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = bb_inv * b.ba;
  h.topRightCorner(n, n) = id - bb_inv;
  h.bottomLeftCorner(n, n) = id + b.ab * bb_inv * b.ba - b.aa;
  h.bottomRightCorner(n, n) = -b.ab * bb_inv;
  return h;
}

CMatrix monodromy_from_hessian(const CMatrix& hf) {
  const auto h = split_blocks(hf);
  const auto n = h.aa.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  Eigen::FullPivLU<CMatrix> lu(id - h.ab);
  if (!lu.isInvertible()) throw NumericError("1 - H_ab is singular");
  const CMatrix z = lu.inverse();
  CMatrix m(2 * n, 2 * n);
  m.topLeftCorner(n, n) = id - h.ab.transpose() - h.bb * z * h.aa;
  m.topRightCorner(n, n) = -h.bb * z;
  m.bottomLeftCorner(n, n) = z * h.aa;
  m.bottomRightCorner(n, n) = z;
  return m;
}

HessianPair hessian_pair(const CMatrix& m, const CVector& s, double j_class) {
  const auto n = m.rows() / 2;
  if (s.size() != n) throw ValidationError("orbit point has wrong length");
  HessianPair out;
  out.h_f = hessian_from_monodromy(m);
  out.a.resize(n);
  out.d.resize(n);
  const cplx two_ij(0.0, 2.0 * j_class);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = 1.0 + std::norm(s(i));
    const cplx b = two_ij / (q * q);
    out.d(i) = -two_ij * s(i) * s(i) / (q * q);
    out.a(i) = -std::conj(out.d(i)) / (b * b);
  }
  CMatrix shift = CMatrix::Zero(2 * n, 2 * n);
  shift.topLeftCorner(n, n) = out.a.asDiagonal();
  shift.bottomRightCorner(n, n) = out.d.asDiagonal();
  shift.topRightCorner(n, n).setIdentity();
  shift.bottomLeftCorner(n, n).setIdentity();
  out.h_s = out.h_f - shift;
  return out;
}

double three_dets_residual(const CMatrix& m) {
  const auto n = m.rows();
  const cplx lhs =
      split_blocks(m).bb.determinant() * hessian_from_monodromy(m).determinant();
  const cplx rhs = (m - CMatrix::Identity(n, n)).determinant();
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
}

double symplectic_invariance_residual(const CMatrix& m, const CMatrix& w) {
  const CMatrix mt = w * m * w.inverse();
  const cplx a =
      split_blocks(m).bb.determinant() * hessian_from_monodromy(m).determinant();
  const cplx b =
      split_blocks(mt).bb.determinant() * hessian_from_monodromy(mt).determinant();
  return std::abs(a - b) / std::max(1.0, std::abs(a));
}

double symmetry_residual(const CMatrix& h) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  return (h - h.transpose()).cwiseAbs().maxCoeff() / scale;
}

CMatrix random_symplectic(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  CMatrix s(2 * n, 2 * n);
  for (int r = 0; r < 2 * n; ++r)
    for (int c = r; c < 2 * n; ++c) s(r, c) = s(c, r) = cplx(g(rng), g(rng));
  const CMatrix gen = symplectic_form(n) * s;
  return gen.exp();
}

CMatrix random_real_symplectic(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  RMatrix s(2 * n, 2 * n);
  for (int r = 0; r < 2 * n; ++r)
    for (int c = r; c < 2 * n; ++c) s(r, c) = s(c, r) = g(rng);
  const RMatrix gen = symplectic_form(n).real() * s;
  return gen.exp().cast<cplx>();
}

std::string to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::hyperbolic: return "hyperbolic";
    case StabilityKind::inverse_hyperbolic: return "inverse_hyperbolic";
    case StabilityKind::elliptic: return "elliptic";
    case StabilityKind::loxodromic: return "loxodromic";
    case StabilityKind::parabolic: return "parabolic";
  }
  return "unknown";
}

namespace {

StabilityKind classify(cplx lambda) {
  const double mag = std::abs(lambda);
  if (std::abs(lambda - 1.0) < 1e-6 || std::abs(lambda + 1.0) < 1e-6)
    return StabilityKind::parabolic;
  const bool real = std::abs(lambda.imag()) < 1e-7 * std::max(1.0, mag);
  if (real) return lambda.real() > 0 ? StabilityKind::hyperbolic
                                     : StabilityKind::inverse_hyperbolic;
  if (std::abs(mag - 1.0) < 1e-6) return StabilityKind::elliptic;
  return StabilityKind::loxodromic;
}

cplx omega_product(const CVector& a, const CVector& b) {
  const auto n = a.size() / 2;
  return (a.head(n).transpose() * b.tail(n))(0) -
         (a.tail(n).transpose() * b.head(n))(0);
}

}  // namespace

ReducedMonodromy generalized_eigensystem(const CMatrix& m, const CVector& flow,
                                         const CVector& grad_h) {
  const auto dim = m.rows();
  const auto n = dim / 2;
  if (m.cols() != dim || dim % 2 != 0 || flow.size() != dim || grad_h.size() != dim)
    throw ValidationError("generalized_eigensystem: inconsistent sizes");
  const CMatrix id = CMatrix::Identity(dim, dim);
  ReducedMonodromy out;

  // (M - 1) g + k f = 0, grad_h . g = 1, f^H g = 0.
  CMatrix sys = CMatrix::Zero(dim + 2, dim + 1);
  CVector rhs = CVector::Zero(dim + 2);
  sys.topLeftCorner(dim, dim) = m - id;
  sys.block(0, dim, dim, 1) = flow;
  sys.block(dim, 0, 1, dim) = grad_h.transpose();
  sys.block(dim + 1, 0, 1, dim) = flow.adjoint();
  rhs(dim) = 1.0;
  const CVector sol = sys.completeOrthogonalDecomposition().solve(rhs);
  const CVector g = sol.head(dim);
  const cplx k = sol(dim);
  out.k = k.real();
  std::ostringstream note;
  if (std::abs(k.imag()) > 1e-6 * std::max(1.0, std::abs(k.real())))
    note << "k has imaginary part " << k.imag() << "; ";
  const double eq_res = (sys * sol - rhs).norm();
  if (eq_res > 1e-6) note << "energy-direction system residual " << eq_res << "; ";

  std::vector<CVector> xi, pi;
  if (n > 1) {
    // Symplectic complement of span{f, g}.
    const CMatrix om = symplectic_form(static_cast<int>(n));
    const CMatrix proj = id - flow * (om * g).transpose() -
                         g * (om.transpose() * flow).transpose();
    Eigen::ColPivHouseholderQR<CMatrix> qr(proj);
    const CMatrix q = qr.householderQ();
    const CMatrix y = q.leftCols(dim - 2);
    const CMatrix reduced = y.adjoint() * m * y;
    Eigen::ComplexEigenSolver<CMatrix> es(reduced);
    if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on reduced monodromy");
    std::vector<cplx> lam(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
    std::vector<CVector> vec;
    for (Eigen::Index c = 0; c < es.eigenvectors().cols(); ++c)
      vec.push_back(y * es.eigenvectors().col(c));
    std::vector<bool> used(lam.size(), false);
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      // Smallest unused |lambda| first, partner closest to 1/lambda.
      std::size_t a = lam.size();
      for (std::size_t i = 0; i < lam.size(); ++i)
        if (!used[i] && (a == lam.size() || std::abs(lam[i]) < std::abs(lam[a]) - 1e-12 ||
                         (std::abs(std::abs(lam[i]) - std::abs(lam[a])) <= 1e-12 &&
                          lam[i].imag() > lam[a].imag())))
          a = i;
      used[a] = true;
      std::size_t b = lam.size();
      for (std::size_t i = 0; i < lam.size(); ++i)
        if (!used[i] && (b == lam.size() ||
                         std::abs(lam[i] * lam[a] - 1.0) < std::abs(lam[b] * lam[a] - 1.0)))
          b = i;
      used[b] = true;
      StabilityPair sp{lam[a], classify(lam[a])};
      const cplx w = omega_product(vec[a], vec[b]);
      if (std::abs(w) < 1e-10 * vec[a].norm() * vec[b].norm()) {
        out.usable = false;
        note << "non-diagonalizable stability block at Lambda = " << lam[a] << "; ";
      } else {
        xi.push_back(vec[a]);
        pi.push_back(vec[b] / w);
      }
      if (sp.kind == StabilityKind::loxodromic) {
        out.usable = false;
        note << "loxodromic quartet excluded; ";
      }
      if (sp.kind == StabilityKind::parabolic) {
        out.usable = false;
        note << "marginal stability pair (Lambda = +-1); ";
      }
      if (sp.kind == StabilityKind::elliptic) out.has_elliptic = true;
      out.pairs.push_back(sp);
    }
  }

  double det = 1.0;
  for (const auto& p : out.pairs)
    det *= (2.0 - p.lambda - 1.0 / p.lambda).real();
  out.det_red_minus_one = det;

  if (static_cast<Eigen::Index>(xi.size()) == n - 1) {
    out.w.resize(dim, dim);
    out.w.col(0) = flow;
    out.w.col(n) = g;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      out.w.col(1 + i) = xi[i];
      out.w.col(n + 1 + i) = pi[i];
    }
    out.w_symplectic_residual = symplectic_residual(out.w);
    out.m = out.w.fullPivLu().solve(m * out.w);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < dim; ++i)
      if (i != 0 && i != n) keep.push_back(i);
    out.m_red.resize(dim - 2, dim - 2);
    for (std::size_t r = 0; r < keep.size(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c)
        out.m_red(r, c) = out.m(keep[r], keep[c]);
  }
  out.note = note.str();
  return out;
}

}  // namespace spintrace

namespace spintrace {

double autonomous_maslov_phase(double tracked_det_phase, const CMatrix& m,
                               const ReducedMonodromy& red) {
  const double principal = std::arg(split_blocks(m).bb.determinant());
  double g = -0.5 * (tracked_det_phase - principal);
  for (const auto& p : red.pairs)
    if (p.kind != StabilityKind::hyperbolic) g -= 0.5 * kPi;
  return g;
}

namespace {

// Eigenvalues of -i L^T H_F L with L mapping (Re z, Im z) to (z, -K conj z).
CVector gaussian_eigenvalues(const CMatrix& m, const CVector& k_start) {
  const auto n = m.rows() / 2;
  const CMatrix hf = hessian_from_monodromy(m);
  CMatrix l = CMatrix::Zero(2 * n, 2 * n);
  const cplx i(0.0, 1.0);
  for (Eigen::Index a = 0; a < n; ++a) {
    l(a, a) = 1.0;
    l(a, n + a) = i;
    l(n + a, a) = -k_start(a);
    l(n + a, n + a) = i * k_start(a);
  }
  const CMatrix r = l.transpose() * hf * l;
  Eigen::ComplexEigenSolver<CMatrix> es(-i * r, false);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on Gaussian form");
  return es.eigenvalues();
}

}  // namespace

double map_maslov_phase(double tracked_det_phase, const CMatrix& m,
                        const CVector& k_start) {
  const CVector mu = gaussian_eigenvalues(m, k_start);
  double g = -0.5 * tracked_det_phase;
  for (Eigen::Index a = 0; a < mu.size(); ++a) g -= 0.5 * std::arg(mu(a));
  return g;
}

cplx map_gaussian_amplitude(double tracked_det_phase, const CMatrix& m,
                            const CVector& k_start) {
  const auto n = m.rows() / 2;
  const CVector mu = gaussian_eigenvalues(m, k_start);
  double mod = std::pow(2.0, static_cast<double>(n));
  for (Eigen::Index a = 0; a < n; ++a) mod *= std::abs(k_start(a));
  mod /= std::sqrt(std::abs(split_blocks(m).bb.determinant()));
  double g = -0.5 * tracked_det_phase;
  for (Eigen::Index a = 0; a < mu.size(); ++a) {
    mod /= std::sqrt(std::abs(mu(a)));
    g -= 0.5 * std::arg(mu(a));
  }
  return std::polar(mod, g);
}

}  // namespace spintrace
