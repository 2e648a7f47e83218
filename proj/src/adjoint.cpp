#include "linresp/adjoint.hpp"

#include <cmath>
#include <string>

namespace linresp {

namespace {

double condition_number(const Matrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double smallest = s[s.size() - 1];
  if (!(smallest > 0.0)) return std::numeric_limits<double>::infinity();
  return s[0] / smallest;
}

double duality_error(const Matrix& eps, const Matrix& e) {
  if (eps.cols() == 0) return 0.0;
  const Matrix g = eps.transpose() * e - Matrix::Identity(eps.cols(), e.cols());
  return g.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

Matrix terminal_epsilon(const Matrix& q, const Matrix& r) {
  if (r.size() == 0) return Matrix(q.rows(), 0);
  if (condition_number(r) > 1e12) {
    throw NumericalError("terminal R factor is ill-conditioned");
  }
  // Q R^{-T}: solve R X^T = Q^T for X^T with R upper triangular.
  Matrix xt = r.triangularView<Eigen::Upper>().solve(q.transpose());
  return xt.transpose();
}

Vector compute_omega(const DynamicalSystem& system, const Matrix& eps_next, const Matrix& e_prev,
                     const Phase& x_prev, const Vector& gamma) {
  return system.hessian_contract_sum(x_prev, gamma, eps_next, e_prev);
}

AdjointData run_adjoint(const Orbit& orbit, const TangentData& tangent,
                        const DynamicalSystem& system, const Vector& gamma,
                        const Objective& objective, const AdjointOptions& options) {
  const int n_steps = orbit.steps_per_segment();
  const int segs = orbit.segments();
  const int m = system.dim();
  const int u = system.unstable_dim();
  AdjointData data(n_steps, segs);

  // Columns: [eps_1 .. eps_u | nu' | nu~'] pulled back together.
  Matrix block(m, u + 2);
  block.leftCols(u) = terminal_epsilon(tangent.q(segs), tangent.r(segs));
  block.col(u).setZero();
  block.col(u + 1).setZero();

  double max_dual = 0.0;
  for (int a = segs - 1; a >= 0; --a) {
    data.eps(a, n_steps) = block.leftCols(u);
    data.nu_prime(a, n_steps) = block.col(u);
    data.nu_tilde_prime(a, n_steps) = block.col(u + 1);
    max_dual = std::max(max_dual, duality_error(data.eps(a, n_steps), tangent.e(a, n_steps)));

    for (int n = n_steps; n >= 1; --n) {
      const Phase& x_prev = orbit.at(a, n - 1);
      Vector omega = compute_omega(system, data.eps(a, n), tangent.e(a, n - 1), x_prev, gamma);
      block = system.jacobian_adjoint_apply(x_prev, gamma, block);
      block.col(u) += objective.gradient(x_prev);
      block.col(u + 1) += omega;
      data.omega(a, n - 1) = std::move(omega);

      data.eps(a, n - 1) = block.leftCols(u);
      data.nu_prime(a, n - 1) = block.col(u);
      data.nu_tilde_prime(a, n - 1) = block.col(u + 1);
      max_dual = std::max(max_dual, duality_error(data.eps(a, n - 1), tangent.e(a, n - 1)));
    }
    if (max_dual > options.duality_abort) {
      throw NumericalError("duality drift " + std::to_string(max_dual) + " in segment " +
                           std::to_string(a) + "; segments are too long");
    }

    // Least-squares moments over the sampled steps of this segment.
    Matrix c = Matrix::Zero(u, u);
    Vector d = Vector::Zero(u);
    Vector d_tilde = Vector::Zero(u);
    for (int n = n_steps; n >= 1; n -= options.moment_stride) {
      const Matrix& eps = data.eps(a, n);
      c.noalias() += eps.transpose() * eps;
      d.noalias() += eps.transpose() * data.nu_prime(a, n);
      d_tilde.noalias() += eps.transpose() * data.nu_tilde_prime(a, n);
    }
    data.c()[a] = std::move(c);
    data.d()[a] = std::move(d);
    data.d_tilde()[a] = std::move(d_tilde);

    // Projections at step (a, 0).
    const Matrix& eps0 = data.eps(a, 0);
    Vector b = Vector::Zero(u);
    Vector b_tilde = Vector::Zero(u);
    if (u > 0) {
      const Matrix gram = eps0.transpose() * eps0;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (!(lo > 0.0) || hi / lo > options.gram_condition_abort) {
        throw NumericalError("singular adjoint Gram matrix at segment " + std::to_string(a));
      }
      Eigen::LLT<Matrix> llt(gram);
      b = llt.solve(eps0.transpose() * data.nu_prime(a, 0));
      b_tilde = llt.solve(eps0.transpose() * data.nu_tilde_prime(a, 0));
    }
    data.b()[a] = b;
    data.b_tilde()[a] = b_tilde;

    if (a == 0) break;

    // Terminal values for segment a-1.
    if (u > 0) {
      const Matrix coupling = eps0.transpose() * tangent.e(a - 1, n_steps);
      if (condition_number(coupling) > options.gram_condition_abort) {
        throw NumericalError("ill-conditioned interface coupling at segment " + std::to_string(a));
      }
      // eps0 * coupling^{-T}
      block.leftCols(u) = coupling.partialPivLu().solve(eps0.transpose()).transpose();
    }
    block.col(u) = data.nu_prime(a, 0) - eps0 * b;
    block.col(u + 1) = data.nu_tilde_prime(a, 0) - eps0 * b_tilde;
  }
  data.max_duality_error = max_dual;
  return data;
}

}  // namespace linresp
