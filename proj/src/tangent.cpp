#include "linresp/tangent.hpp"

#include <cmath>
#include <string>

namespace linresp {

QrFactors qr_interface(const Matrix& e_end) {
  const Eigen::Index m = e_end.rows();
  const Eigen::Index u = e_end.cols();
  if (u == 0) return {Matrix(m, 0), Matrix(0, 0)};
  if (u > m) throw std::invalid_argument("qr_interface: more columns than rows");

  Eigen::HouseholderQR<Matrix> qr(e_end);
  Matrix q = qr.householderQ() * Matrix::Identity(m, u);
  Matrix r = qr.matrixQR().topRows(u).triangularView<Eigen::Upper>();

  const double scale = e_end.norm();
  for (Eigen::Index i = 0; i < u; ++i) {
    if (!(std::abs(r(i, i)) >= 1e-13 * scale)) {
      throw NumericalError("rank-deficient tangent basis at interface (column " +
                           std::to_string(i) + ")");
    }
    if (r(i, i) < 0.0) {
      r.row(i) *= -1.0;
      q.col(i) *= -1.0;
    }
  }
  return {std::move(q), std::move(r)};
}

TangentData run_tangent(const Orbit& orbit, const DynamicalSystem& system, const Vector& gamma,
                        std::mt19937_64& rng, TangentInit init) {
  const int n_steps = orbit.steps_per_segment();
  const int segs = orbit.segments();
  const int m = system.dim();
  const int u = system.unstable_dim();
  TangentData data(n_steps, segs);

  Matrix start(m, u);
  if (init == TangentInit::random) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < u; ++j)
      for (int i = 0; i < m; ++i) start(i, j) = normal(rng);
  } else {
    start = Matrix::Identity(m, u);
  }
  QrFactors first = qr_interface(start);
  data.q(0) = std::move(first.q);
  data.r(0) = Matrix::Identity(u, u);

  for (int a = 0; a < segs; ++a) {
    data.e(a, 0) = data.q(a);
    for (int n = 0; n < n_steps; ++n) {
      data.e(a, n + 1) = system.jacobian_apply(orbit.at(a, n), gamma, data.e(a, n));
    }
    QrFactors f = qr_interface(data.e(a, n_steps));
    data.q(a + 1) = std::move(f.q);
    data.r(a + 1) = std::move(f.r);
  }
  return data;
}

}  // namespace linresp
