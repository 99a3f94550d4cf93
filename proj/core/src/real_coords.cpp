#include "real_coords.hpp"

namespace spintrace::detail {

RVector to_real(const ClassicalState& s) {
  RVector x(2 * s.n_sites());
  for (int i = 0; i < s.n_sites(); ++i) {
    x(2 * i) = s.u(i).real();
    x(2 * i + 1) = s.u(i).imag();
  }
  return x;
}

ClassicalState from_real(const RVector& x, const std::vector<Chart>& charts) {
  const int n = static_cast<int>(charts.size());
  ClassicalState s(n);
  for (int i = 0; i < n; ++i) {
    s.u(i) = cplx(x(2 * i), x(2 * i + 1));
    s.v(i) = std::conj(s.u(i));
  }
  s.chart = charts;
  return s;
}

double unit_distance(const ClassicalState& a, const ClassicalState& b) {
  return (a.stacked_unit_vectors() - b.stacked_unit_vectors()).norm();
}

RMatrix real_jacobian(double j_class, const ClassicalState& start, const ClassicalState& end,
                      const CMatrix& tangent, const std::vector<Chart>& end_charts) {
  const int n = start.n_sites();
  const CVector k0 = canonical_scale(start, j_class);
  const CVector k1 = canonical_scale(end, j_class);
  const cplx i(0.0, 1.0);
  CMatrix kin = CMatrix::Zero(2 * n, 2 * n);
  for (int a = 0; a < n; ++a) {
    kin(a, 2 * a) = 1.0 / k0(a);
    kin(a, 2 * a + 1) = i / k0(a);
    kin(n + a, 2 * a) = 1.0;
    kin(n + a, 2 * a + 1) = -i;
  }
  const CMatrix du_canon = tangent * kin;
  RMatrix out(2 * n, 2 * n);
  for (int a = 0; a < n; ++a) {
    cplx factor = k1(a);
    if (end_charts[a] != end.chart[a]) factor *= -1.0 / (end.u(a) * end.u(a));
    for (int c = 0; c < 2 * n; ++c) {
      const cplx du = factor * du_canon(a, c);
      out(2 * a, c) = du.real();
      out(2 * a + 1, c) = du.imag();
    }
  }
  return out;
}

ClassicalState random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Eigen::Vector3d> dirs(n);
  for (auto& d : dirs) {
    do {
      d = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    } while (d.norm() < 1e-8);
    d.normalize();
  }
  return ClassicalState::from_unit_vectors(dirs).in_preferred_charts();
}

}  // namespace spintrace::detail
