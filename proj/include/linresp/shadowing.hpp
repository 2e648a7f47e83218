#pragma once

#include "linresp/adjoint.hpp"
#include "linresp/orbit.hpp"
#include "linresp/tangent.hpp"

#include <functional>
#include <span>
#include <vector>

namespace linresp {

/// A covector per step (segment, n), n = 0..N, of a segmented orbit.
class CovectorField {
 public:
  CovectorField() = default;
  CovectorField(int steps_per_segment, int segments)
      : n_(steps_per_segment),
        a_(segments),
        data_(static_cast<std::size_t>(segments) * (steps_per_segment + 1)) {}

  int steps_per_segment() const { return n_; }
  int segments() const { return a_; }
  const Vector& at(int s, int n) const { return data_[slot(s, n)]; }
  Vector& at(int s, int n) { return data_[slot(s, n)]; }

  /// max over steps of the Euclidean norm.
  double max_norm() const;
  /// max over interfaces of ||v(a, N) - v(a+1, 0)|| divided by max_norm().
  double continuity_residual() const;

 private:
  std::size_t slot(int s, int n) const { return static_cast<std::size_t>(s) * (n_ + 1) + n; }

  int n_ = 0;
  int a_ = 0;
  std::vector<Vector> data_;
};

/// Coefficients making nu' + eps a continuous, by forward recursion
///   a_0 = -b_0,   a_k = R_k^{-T} a_{k-1} - b_k.
/// `r[k]` is the interface-k factor; r[0] is not used.
std::vector<Vector> solve_projection(std::span<const Vector> b, std::span<const Matrix> r);

/// Block data of the least-squares shadowing problem
///   min sum_k 1/2 a_k^T C_k a_k + d_k^T a_k   s.t.  a_{k-1} = R_k^T (a_k + b_k).
/// c and d are indexed by segment 0..A-1; r and b by interface, index 0 unused.
struct KktSystem {
  std::vector<Matrix> c;
  std::vector<Matrix> r;
  std::vector<Vector> d;
  std::vector<Vector> b;

  int segments() const { return static_cast<int>(c.size()); }
};

/// Blocks of the Schur complement  Lambda = B^T C^{-1} B  and its right side,
/// before elimination. Index k = 1..A-1; index 0 is left empty.
///   D_k = C_k^{-1} R_k,  E_k = C_{k-1}^{-1} + R_k^T D_k,
///   y_k = D_k^T d_k - C_{k-1}^{-1} d_{k-1} - R_k^T b_k.
/// Lambda has E_k on the diagonal and -D_k^T at (k, k+1).
struct SchurBlocks {
  std::vector<Matrix> d_blocks;
  std::vector<Matrix> e_blocks;
  std::vector<Vector> y;
};

SchurBlocks assemble_schur(const KktSystem& kkt);

struct LeastSquaresSolution {
  std::vector<Vector> a;       ///< a_0 .. a_{A-1}
  std::vector<Vector> lambda;  ///< index 0 unused; lambda_1 .. lambda_{A-1}
};

/// Block-tridiagonal (forward/backward chasing) solve of the KKT system.
/// Throws NumericalError naming the segment whose C_k is not positive definite.
LeastSquaresSolution solve_least_squares(const KktSystem& kkt);

/// nu(a, n) = inhomogeneous(a, n) + eps(a, n) coef[a].
CovectorField reconstruct_shadowing(int steps_per_segment, int segments,
                                    const std::function<const Vector&(int, int)>& inhomogeneous,
                                    const std::function<const Matrix&(int, int)>& eps,
                                    std::span<const Vector> coef);

/// Shadowing covectors nu = S(dPhi) and nu~ = S(omega) with their coefficients.
struct ShadowingSolution {
  std::vector<Vector> a;
  std::vector<Vector> a_tilde;
  CovectorField nu;
  CovectorField nu_tilde;
};

/// Runs the selected solver for both right-hand sides and reconstructs the
/// covectors. With u = 0 the coefficients are empty and nu = nu'.
ShadowingSolution solve_shadowing(const AdjointData& adjoint, const TangentData& tangent,
                                  SolverKind kind);

}  // namespace linresp
