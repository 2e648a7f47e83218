#pragma once

#include "linresp/orbit.hpp"
#include "linresp/system.hpp"
#include "linresp/tangent.hpp"

#include <vector>

namespace linresp {

/// eps = Q R^{-T}, the covector basis dual to e = Q R.
/// Throws NumericalError when cond(R) > 1e12.
Matrix terminal_epsilon(const Matrix& q, const Matrix& r);

/// Source term of the modified adjoint equation at x_prev:
///   omega = sum_i  eps_next^i (grad_{e_prev,i} f_*),
/// i.e. the sum over columns of the Hessian-covector contractions.
Vector compute_omega(const DynamicalSystem& system, const Matrix& eps_next, const Matrix& e_prev,
                     const Phase& x_prev, const Vector& gamma);

/// Output of the backward sweep.
///
/// Per-step quantities use (segment, n) with n = 0..N, except omega which
/// exists for n = 0..N-1 only. Interface projections b(a), b_tilde(a) are
/// computed at step (a, 0) for every segment a = 0..A-1; moments C(a), d(a),
/// d_tilde(a) belong to segment a.
class AdjointData {
 public:
  AdjointData(int steps_per_segment, int segments)
      : n_(steps_per_segment), a_(segments) {
    const std::size_t per_step = static_cast<std::size_t>(segments) * (steps_per_segment + 1);
    eps_.resize(per_step);
    nu_.resize(per_step);
    nu_tilde_.resize(per_step);
    omega_.resize(static_cast<std::size_t>(segments) * steps_per_segment);
    b_.resize(segments);
    b_tilde_.resize(segments);
    c_.resize(segments);
    d_.resize(segments);
    d_tilde_.resize(segments);
  }

  int steps_per_segment() const { return n_; }
  int segments() const { return a_; }

  const Matrix& eps(int s, int n) const { return eps_[slot(s, n)]; }
  Matrix& eps(int s, int n) { return eps_[slot(s, n)]; }
  /// Inhomogeneous solution nu' driven by dPhi.
  const Vector& nu_prime(int s, int n) const { return nu_[slot(s, n)]; }
  Vector& nu_prime(int s, int n) { return nu_[slot(s, n)]; }
  /// Inhomogeneous solution driven by omega.
  const Vector& nu_tilde_prime(int s, int n) const { return nu_tilde_[slot(s, n)]; }
  Vector& nu_tilde_prime(int s, int n) { return nu_tilde_[slot(s, n)]; }
  const Vector& omega(int s, int n) const { return omega_[omega_slot(s, n)]; }
  Vector& omega(int s, int n) { return omega_[omega_slot(s, n)]; }

  const std::vector<Vector>& b() const { return b_; }
  const std::vector<Vector>& b_tilde() const { return b_tilde_; }
  const std::vector<Matrix>& c() const { return c_; }
  const std::vector<Vector>& d() const { return d_; }
  const std::vector<Vector>& d_tilde() const { return d_tilde_; }
  std::vector<Vector>& b() { return b_; }
  std::vector<Vector>& b_tilde() { return b_tilde_; }
  std::vector<Matrix>& c() { return c_; }
  std::vector<Vector>& d() { return d_; }
  std::vector<Vector>& d_tilde() { return d_tilde_; }

  /// max over steps of || eps^T e - I ||_inf.
  double max_duality_error = 0.0;

 private:
  std::size_t slot(int s, int n) const { return static_cast<std::size_t>(s) * (n_ + 1) + n; }
  std::size_t omega_slot(int s, int n) const {
    if (n < 0 || n >= n_) throw std::out_of_range("omega is defined for n = 0..N-1 only");
    return static_cast<std::size_t>(s) * n_ + n;
  }

  int n_;
  int a_;
  std::vector<Matrix> eps_;
  std::vector<Vector> nu_;
  std::vector<Vector> nu_tilde_;
  std::vector<Vector> omega_;
  std::vector<Vector> b_;
  std::vector<Vector> b_tilde_;
  std::vector<Matrix> c_;
  std::vector<Vector> d_;
  std::vector<Vector> d_tilde_;
};

struct AdjointOptions {
  int moment_stride = 1;            ///< C, d sampled at n = N, N - s, ... >= 1
  double duality_abort = 1e-6;      ///< abort threshold for || eps^T e - I ||_inf
  double gram_condition_abort = 1e12;
};

/// Backward sweep: terminal conditions nu' = nu~' = 0 and eps = Q_A R_A^{-T},
/// homogeneous and inhomogeneous pullbacks inside segments, unstable-part
/// removal and dual renormalization at interfaces, and least-squares moments.
AdjointData run_adjoint(const Orbit& orbit, const TangentData& tangent,
                        const DynamicalSystem& system, const Vector& gamma,
                        const Objective& objective, const AdjointOptions& options = {});

}  // namespace linresp
