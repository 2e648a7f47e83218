#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace linresp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of phase space. Torus components are kept reduced to their period.
using Phase = Eigen::VectorXd;

/// Raised when a computation leaves the regime where it is meaningful:
/// non-finite states, rank-deficient bases, ill-conditioned interface solves.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Contract for a discrete-time map f(x; gamma) together with the derivative
/// oracles the response computation needs.
///
/// Covectors are stored as column vectors; pairing is the Euclidean dot
/// product. All methods are pure: the same (x, gamma, noise) gives the same
/// answer, so a system object may be shared between threads.
class DynamicalSystem {
 public:
  virtual ~DynamicalSystem() = default;

  virtual std::string id() const = 0;
  /// Human-readable note on the safe parameter range.
  virtual std::string description() const = 0;

  /// Phase-space dimension M.
  virtual int dim() const = 0;
  /// Unstable dimension u, 0 <= u <= M.
  virtual int unstable_dim() const = 0;
  /// Number of parameters p >= 1.
  virtual int num_params() const = 0;
  /// Number of independent noise draws consumed per step (0 for deterministic maps).
  virtual int noise_dim() const { return 0; }
  /// Half-width of the uniform noise distribution.
  virtual double noise_amplitude() const { return 0.0; }

  virtual Vector default_gamma() const = 0;

  /// Draws an initial condition in the basin of the attractor.
  virtual Phase random_phase(std::mt19937_64& rng) const = 0;

  /// f(x). `noise` is empty or holds noise_dim() draws for this step.
  virtual Phase step(const Phase& x, const Vector& gamma,
                     std::span<const double> noise = {}) const = 0;

  /// (df/dx)(x) V, column by column.
  virtual Matrix jacobian_apply(const Phase& x, const Vector& gamma,
                                const Matrix& v) const = 0;

  /// (df/dx)(x)^T W, where the columns of W are covectors at f(x).
  virtual Matrix jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                        const Matrix& w) const = 0;

  /// Covector with components  sum_{l,k} eta_l d2f^l/dx^k dx^j (x) v^k.
  virtual Vector hessian_covector_contract(const Phase& x, const Vector& gamma,
                                           const Vector& eta,
                                           const Vector& v) const = 0;

  /// M x p matrix; column j is df/dgamma_j at x.
  virtual Matrix parameter_forcing(const Phase& x, const Vector& gamma) const = 0;

  /// p-vector with entries  sum_{l,k} eta_l d2f^l/dgamma_j dx^k (x) v^k.
  virtual Vector mixed_hessian_contract(const Phase& x, const Vector& gamma,
                                        const Vector& eta,
                                        const Vector& v) const = 0;

  /// sum_i hessian_covector_contract(x, gamma, eta.col(i), v.col(i)).
  /// Systems may override this to share work across columns.
  virtual Vector hessian_contract_sum(const Phase& x, const Vector& gamma, const Matrix& eta,
                                      const Matrix& v) const {
    Vector out = Vector::Zero(dim());
    for (Eigen::Index i = 0; i < v.cols(); ++i)
      out += hessian_covector_contract(x, gamma, eta.col(i), v.col(i));
    return out;
  }

  /// sum_i mixed_hessian_contract(x, gamma, eta.col(i), v.col(i)).
  virtual Vector mixed_hessian_contract_sum(const Phase& x, const Vector& gamma,
                                            const Matrix& eta, const Matrix& v) const {
    Vector out = Vector::Zero(num_params());
    for (Eigen::Index i = 0; i < v.cols(); ++i)
      out += mixed_hessian_contract(x, gamma, eta.col(i), v.col(i));
    return out;
  }

  /// Instantaneous objective Phi and its gradient dPhi.
  virtual double objective(const Phase& x) const = 0;
  virtual Vector objective_gradient(const Phase& x) const = 0;
};

/// Instantaneous objective Phi with its gradient dPhi.
struct Objective {
  std::function<double(const Phase&)> value;
  std::function<Vector(const Phase&)> gradient;

  /// The system's built-in objective. `system` must outlive the result.
  static Objective of(const DynamicalSystem& system) {
    return {[&system](const Phase& x) { return system.objective(x); },
            [&system](const Phase& x) { return system.objective_gradient(x); }};
  }
  static Objective zero(int dim) {
    return {[](const Phase&) { return 0.0; },
            [dim](const Phase&) { return Vector::Zero(dim).eval(); }};
  }
};

/// Per-system knobs that are not differentiated parameters.
struct SystemOptions {
  double lorenz_b = 3.0;  ///< quadratic coefficient B of the Lorenz map (0 gives the tent map)
  int lorenz_t = 1;       ///< frequency T of the perturbation sin(2 pi T x)
};

/// Builds a system from its string identifier:
/// "solenoid21", "solenoid3", "solenoid3-noisy", "lorenz", "tent",
/// "stable-linear", "logistic". Throws std::invalid_argument for unknown ids.
std::unique_ptr<DynamicalSystem> make_system(std::string_view id,
                                             const SystemOptions& options = {});

}  // namespace linresp
