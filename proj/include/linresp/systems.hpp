#pragma once

#include "linresp/system.hpp"

namespace linresp {

/// Solenoid map on R x T^K with two parameters:
///
///   x1'  = 0.05 x1 + g1 + 0.1 sum_i cos(5 x_i) + U
///   x_i' = 2 x_i + g2 (1 + x1) sin(2 x_i) + U    (mod 2 pi),  i = 2..K+1
///
/// Objective Phi = x1^3 + w sum_i (x_i - pi)^2. U is uniform on
/// [-a, a], drawn independently for every coordinate and step when noisy.
class SolenoidMap final : public DynamicalSystem {
 public:
  struct Options {
    std::string id = "solenoid21";
    int torus_dims = 20;
    double torus_weight = 0.005;
    bool noisy = false;
    double noise_amplitude = 0.0;
    Vector default_gamma = Vector::Constant(2, 0.1);
  };

  explicit SolenoidMap(Options options);

  std::string id() const override { return opt_.id; }
  std::string description() const override;
  int dim() const override { return opt_.torus_dims + 1; }
  int unstable_dim() const override { return opt_.torus_dims; }
  int num_params() const override { return 2; }
  int noise_dim() const override { return opt_.noisy ? dim() : 0; }
  double noise_amplitude() const override { return opt_.noise_amplitude; }
  Vector default_gamma() const override { return opt_.default_gamma; }

  Phase random_phase(std::mt19937_64& rng) const override;
  Phase step(const Phase& x, const Vector& gamma,
             std::span<const double> noise) const override;
  Matrix jacobian_apply(const Phase& x, const Vector& gamma,
                        const Matrix& v) const override;
  Matrix jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                const Matrix& w) const override;
  Vector hessian_covector_contract(const Phase& x, const Vector& gamma,
                                   const Vector& eta,
                                   const Vector& v) const override;
  Matrix parameter_forcing(const Phase& x, const Vector& gamma) const override;
  Vector mixed_hessian_contract(const Phase& x, const Vector& gamma,
                                const Vector& eta,
                                const Vector& v) const override;
  Vector hessian_contract_sum(const Phase& x, const Vector& gamma, const Matrix& eta,
                              const Matrix& v) const override;
  Vector mixed_hessian_contract_sum(const Phase& x, const Vector& gamma, const Matrix& eta,
                                    const Matrix& v) const override;
  double objective(const Phase& x) const override;
  Vector objective_gradient(const Phase& x) const override;

 private:
  Options opt_;
};

/// Lorenz-type circle map on [0, 1):
///
///   f(x) = B x^2 + 2x + g sin(2 pi T x) / (2 pi T)              x <= 0.5
///   f(x) = B (x-1)^2 + 2 - 2x - g sin(2 pi T x) / (2 pi T)      otherwise
///
/// taken mod 1, with Phi(x) = x. B = 0 is the tent map. At the kink
/// x = 0.5 the left-branch derivatives are used.
class LorenzMap final : public DynamicalSystem {
 public:
  LorenzMap(std::string id, double b, int t);

  std::string id() const override { return id_; }
  std::string description() const override;
  int dim() const override { return 1; }
  int unstable_dim() const override { return 1; }
  int num_params() const override { return 1; }
  Vector default_gamma() const override { return Vector::Constant(1, 0.1); }

  double b() const { return b_; }
  int t() const { return t_; }

  Phase random_phase(std::mt19937_64& rng) const override;
  Phase step(const Phase& x, const Vector& gamma,
             std::span<const double> noise) const override;
  Matrix jacobian_apply(const Phase& x, const Vector& gamma,
                        const Matrix& v) const override;
  Matrix jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                const Matrix& w) const override;
  Vector hessian_covector_contract(const Phase& x, const Vector& gamma,
                                   const Vector& eta,
                                   const Vector& v) const override;
  Matrix parameter_forcing(const Phase& x, const Vector& gamma) const override;
  Vector mixed_hessian_contract(const Phase& x, const Vector& gamma,
                                const Vector& eta,
                                const Vector& v) const override;
  double objective(const Phase& x) const override { return x[0]; }
  Vector objective_gradient(const Phase& x) const override;

 private:
  double slope(double x, double gamma) const;

  std::string id_;
  double b_;
  int t_;
};

/// f(x) = 0.5 x + g on R, Phi(x) = x. No unstable direction; the
/// response d rho / d g is exactly 2.
class StableLinearMap final : public DynamicalSystem {
 public:
  std::string id() const override { return "stable-linear"; }
  std::string description() const override;
  int dim() const override { return 1; }
  int unstable_dim() const override { return 0; }
  int num_params() const override { return 1; }
  Vector default_gamma() const override { return Vector::Constant(1, 1.0); }

  Phase random_phase(std::mt19937_64& rng) const override;
  Phase step(const Phase& x, const Vector& gamma,
             std::span<const double> noise) const override;
  Matrix jacobian_apply(const Phase& x, const Vector& gamma,
                        const Matrix& v) const override;
  Matrix jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                const Matrix& w) const override;
  Vector hessian_covector_contract(const Phase& x, const Vector& gamma,
                                   const Vector& eta,
                                   const Vector& v) const override;
  Matrix parameter_forcing(const Phase& x, const Vector& gamma) const override;
  Vector mixed_hessian_contract(const Phase& x, const Vector& gamma,
                                const Vector& eta,
                                const Vector& v) const override;
  double objective(const Phase& x) const override { return x[0]; }
  Vector objective_gradient(const Phase& x) const override;
};

/// f(x) = (3.8 + g) x (1 - x), Phi(x) = x. Not uniformly hyperbolic; the
/// shadowing covector is unbounded along long orbits.
class LogisticMap final : public DynamicalSystem {
 public:
  std::string id() const override { return "logistic"; }
  std::string description() const override;
  int dim() const override { return 1; }
  int unstable_dim() const override { return 1; }
  int num_params() const override { return 1; }
  Vector default_gamma() const override { return Vector::Zero(1); }

  Phase random_phase(std::mt19937_64& rng) const override;
  Phase step(const Phase& x, const Vector& gamma,
             std::span<const double> noise) const override;
  Matrix jacobian_apply(const Phase& x, const Vector& gamma,
                        const Matrix& v) const override;
  Matrix jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                const Matrix& w) const override;
  Vector hessian_covector_contract(const Phase& x, const Vector& gamma,
                                   const Vector& eta,
                                   const Vector& v) const override;
  Matrix parameter_forcing(const Phase& x, const Vector& gamma) const override;
  Vector mixed_hessian_contract(const Phase& x, const Vector& gamma,
                                const Vector& eta,
                                const Vector& v) const override;
  double objective(const Phase& x) const override { return x[0]; }
  Vector objective_gradient(const Phase& x) const override;
};

/// Reduces an angle to [0, 2 pi).
double wrap_angle(double theta);
/// Reduces a real to [0, 1).
double wrap_unit(double x);

}  // namespace linresp
