#include "linresp/shadowing.hpp"

#include <cmath>
#include <string>

namespace linresp {

double CovectorField::max_norm() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, v.norm());
  return m;
}

double CovectorField::continuity_residual() const {
  const double scale = max_norm();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int s = 0; s + 1 < a_; ++s) worst = std::max(worst, (at(s, n_) - at(s + 1, 0)).norm());
  return worst / scale;
}

std::vector<Vector> solve_projection(std::span<const Vector> b, std::span<const Matrix> r) {
  const std::size_t segs = b.size();
  std::vector<Vector> a(segs);
  if (segs == 0) return a;
  if (r.size() < segs) throw std::invalid_argument("solve_projection: missing R factors");
  a[0] = -b[0];
  for (std::size_t k = 1; k < segs; ++k) {
    const Matrix& rk = r[k];
    if (rk.size() > 0) {
      Eigen::JacobiSVD<Matrix> svd(rk);
      const auto& s = svd.singularValues();
      if (!(s[s.size() - 1] > 0.0) || s[0] / s[s.size() - 1] > 1e12) {
        throw NumericalError("ill-conditioned R at interface " + std::to_string(k));
      }
    }
    // R^{-T} a = solution of R^T x = a.
    a[k] = rk.transpose().triangularView<Eigen::Lower>().solve(a[k - 1]) - b[k];
  }
  return a;
}

namespace {

Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what, int index) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + " is not positive definite at segment " +
                         std::to_string(index));
  }
  return llt;
}

}  // namespace

SchurBlocks assemble_schur(const KktSystem& kkt) {
  const int segs = kkt.segments();
  SchurBlocks s;
  s.d_blocks.resize(segs);
  s.e_blocks.resize(segs);
  s.y.resize(segs);
  std::vector<Eigen::LLT<Matrix>> c_fac;
  c_fac.reserve(segs);
  for (int k = 0; k < segs; ++k) c_fac.push_back(spd_factor(kkt.c[k], "C", k));
  for (int k = 1; k < segs; ++k) {
    const Matrix& r = kkt.r[k];
    s.d_blocks[k] = c_fac[k].solve(r);
    const Matrix u_id = Matrix::Identity(r.rows(), r.rows());
    s.e_blocks[k] = c_fac[k - 1].solve(u_id) + r.transpose() * s.d_blocks[k];
    s.y[k] = s.d_blocks[k].transpose() * kkt.d[k] - c_fac[k - 1].solve(kkt.d[k - 1]) -
             r.transpose() * kkt.b[k];
  }
  return s;
}

LeastSquaresSolution solve_least_squares(const KktSystem& kkt) {
  const int segs = kkt.segments();
  LeastSquaresSolution sol;
  sol.a.resize(segs);
  sol.lambda.resize(segs);
  if (segs == 0) return sol;
  if (segs == 1) {
    sol.a[0] = -spd_factor(kkt.c[0], "C", 0).solve(kkt.d[0]);
    return sol;
  }

  SchurBlocks s = assemble_schur(kkt);
  auto& dd = s.d_blocks;
  auto& ee = s.e_blocks;
  auto& y = s.y;

  // Forward chasing: eliminate the sub-diagonal blocks -D_{k-1}.
  for (int k = 2; k < segs; ++k) {
    Eigen::LLT<Matrix> e_prev = spd_factor(ee[k - 1], "Schur block E", k - 1);
    const Matrix w = e_prev.solve(dd[k - 1].transpose()).transpose();  // D_{k-1} E_{k-1}^{-1}
    ee[k] -= w * dd[k - 1].transpose();
    y[k] += w * y[k - 1];
  }

  // Backward chasing.
  sol.lambda[segs - 1] = spd_factor(ee[segs - 1], "Schur block E", segs - 1).solve(y[segs - 1]);
  for (int k = segs - 2; k >= 1; --k) {
    sol.lambda[k] = spd_factor(ee[k], "Schur block E", k)
                        .solve(dd[k].transpose() * sol.lambda[k + 1] + y[k]);
  }

  // a = -C^{-1} (B lambda + d).
  for (int k = 0; k < segs; ++k) {
    Vector rhs = -kkt.d[k];
    if (k + 1 < segs) rhs -= sol.lambda[k + 1];
    if (k >= 1) rhs += kkt.r[k] * sol.lambda[k];
    sol.a[k] = spd_factor(kkt.c[k], "C", k).solve(rhs);
  }
  return sol;
}

CovectorField reconstruct_shadowing(int steps_per_segment, int segments,
                                    const std::function<const Vector&(int, int)>& inhomogeneous,
                                    const std::function<const Matrix&(int, int)>& eps,
                                    std::span<const Vector> coef) {
  CovectorField field(steps_per_segment, segments);
  for (int s = 0; s < segments; ++s) {
    for (int n = 0; n <= steps_per_segment; ++n) {
      const Matrix& basis = eps(s, n);
      if (basis.cols() == 0) {
        field.at(s, n) = inhomogeneous(s, n);
      } else {
        field.at(s, n) = inhomogeneous(s, n) + basis * coef[s];
      }
    }
  }
  return field;
}

ShadowingSolution solve_shadowing(const AdjointData& adjoint, const TangentData& tangent,
                                  SolverKind kind) {
  const int n_steps = adjoint.steps_per_segment();
  const int segs = adjoint.segments();
  const int u = static_cast<int>(adjoint.eps(0, 0).cols());

  ShadowingSolution out;
  if (u == 0) {
    out.a.assign(segs, Vector(0));
    out.a_tilde.assign(segs, Vector(0));
  } else {
    std::vector<Matrix> r(segs);
    for (int k = 1; k < segs; ++k) r[k] = tangent.r(k);
    if (kind == SolverKind::projection) {
      out.a = solve_projection(adjoint.b(), r);
      out.a_tilde = solve_projection(adjoint.b_tilde(), r);
    } else {
      KktSystem kkt{adjoint.c(), r, adjoint.d(), adjoint.b()};
      out.a = solve_least_squares(kkt).a;
      kkt.d = adjoint.d_tilde();
      kkt.b = adjoint.b_tilde();
      out.a_tilde = solve_least_squares(kkt).a;
    }
  }

  auto eps = [&](int s, int n) -> const Matrix& { return adjoint.eps(s, n); };
  out.nu = reconstruct_shadowing(
      n_steps, segs, [&](int s, int n) -> const Vector& { return adjoint.nu_prime(s, n); }, eps,
      out.a);
  out.nu_tilde = reconstruct_shadowing(
      n_steps, segs, [&](int s, int n) -> const Vector& { return adjoint.nu_tilde_prime(s, n); },
      eps, out.a_tilde);
  return out;
}

}  // namespace linresp
