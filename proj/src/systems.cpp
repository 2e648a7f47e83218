#include "linresp/systems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace linresp {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Solenoid

SolenoidMap::SolenoidMap(Options options) : opt_(std::move(options)) {
  if (opt_.torus_dims < 1) throw std::invalid_argument("solenoid needs at least one torus dimension");
}

std::string SolenoidMap::description() const {
  std::ostringstream os;
  os << "solenoid on R x T^" << opt_.torus_dims << ", parameters (g1, g2); "
     << "safe range |g2| <= 0.2";
  if (opt_.noisy) os << " (|g2| <= 0.06 with noise amplitude " << opt_.noise_amplitude << ")";
  os << ", default g = (" << opt_.default_gamma[0] << ", " << opt_.default_gamma[1] << ")";
  return os.str();
}

Phase SolenoidMap::random_phase(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> radial(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Phase x(dim());
  x[0] = radial(rng);
  for (int i = 1; i < dim(); ++i) x[i] = angle(rng);
  return x;
}

Phase SolenoidMap::step(const Phase& x, const Vector& gamma,
                        std::span<const double> noise) const {
  const int m = dim();
  const bool with_noise = !noise.empty();
  Phase y(m);
  double sum = 0.0;
  for (int i = 1; i < m; ++i) sum += std::cos(5.0 * x[i]);
  y[0] = 0.05 * x[0] + gamma[0] + 0.1 * sum;
  if (with_noise) y[0] += noise[0];
  const double amp = gamma[1] * (1.0 + x[0]);
  for (int i = 1; i < m; ++i) {
    double v = 2.0 * x[i] + amp * std::sin(2.0 * x[i]);
    if (with_noise) v += noise[i];
    y[i] = wrap_angle(v);
  }
  return y;
}

Matrix SolenoidMap::jacobian_apply(const Phase& x, const Vector& gamma,
                                   const Matrix& v) const {
  const int m = dim();
  Matrix out(m, v.cols());
  out.row(0) = 0.05 * v.row(0);
  const double amp = gamma[1] * (1.0 + x[0]);
  for (int i = 1; i < m; ++i) {
    out.row(0) += (-0.5 * std::sin(5.0 * x[i])) * v.row(i);
    const double coupling = gamma[1] * std::sin(2.0 * x[i]);
    const double diag = 2.0 + 2.0 * amp * std::cos(2.0 * x[i]);
    out.row(i) = coupling * v.row(0) + diag * v.row(i);
  }
  return out;
}

Matrix SolenoidMap::jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                           const Matrix& w) const {
  const int m = dim();
  Matrix out(m, w.cols());
  out.row(0) = 0.05 * w.row(0);
  const double amp = gamma[1] * (1.0 + x[0]);
  for (int i = 1; i < m; ++i) {
    const double coupling = gamma[1] * std::sin(2.0 * x[i]);
    const double diag = 2.0 + 2.0 * amp * std::cos(2.0 * x[i]);
    out.row(0) += coupling * w.row(i);
    out.row(i) = (-0.5 * std::sin(5.0 * x[i])) * w.row(0) + diag * w.row(i);
  }
  return out;
}

// Nonzero second derivatives:
//   d2 f^1 / dx_i dx_i = -2.5 cos(5 x_i)
//   d2 f^i / dx_1 dx_i = 2 g2 cos(2 x_i)
//   d2 f^i / dx_i dx_i = -4 g2 (1 + x1) sin(2 x_i)
Vector SolenoidMap::hessian_covector_contract(const Phase& x, const Vector& gamma,
                                              const Vector& eta,
                                              const Vector& v) const {
  const int m = dim();
  Vector out(m);
  out[0] = 0.0;
  const double g2 = gamma[1];
  for (int i = 1; i < m; ++i) {
    const double c2 = std::cos(2.0 * x[i]);
    const double s2 = std::sin(2.0 * x[i]);
    const double cross = 2.0 * g2 * c2;
    out[0] += eta[i] * cross * v[i];
    out[i] = -2.5 * std::cos(5.0 * x[i]) * eta[0] * v[i] +
             eta[i] * (cross * v[0] - 4.0 * g2 * (1.0 + x[0]) * s2 * v[i]);
  }
  return out;
}

Matrix SolenoidMap::parameter_forcing(const Phase& x, const Vector&) const {
  const int m = dim();
  Matrix out = Matrix::Zero(m, 2);
  out(0, 0) = 1.0;
  for (int i = 1; i < m; ++i) out(i, 1) = (1.0 + x[0]) * std::sin(2.0 * x[i]);
  return out;
}

Vector SolenoidMap::mixed_hessian_contract(const Phase& x, const Vector&,
                                           const Vector& eta,
                                           const Vector& v) const {
  Vector out = Vector::Zero(2);
  double acc = 0.0;
  for (int i = 1; i < dim(); ++i) {
    acc += eta[i] * (std::sin(2.0 * x[i]) * v[0] +
                     2.0 * (1.0 + x[0]) * std::cos(2.0 * x[i]) * v[i]);
  }
  out[1] = acc;
  return out;
}

Vector SolenoidMap::hessian_contract_sum(const Phase& x, const Vector& gamma, const Matrix& eta,
                                         const Matrix& v) const {
  const int m = dim();
  Vector out(m);
  out[0] = 0.0;
  const double g2 = gamma[1];
  for (int i = 1; i < m; ++i) {
    const double cross = 2.0 * g2 * std::cos(2.0 * x[i]);
    const double self = -4.0 * g2 * (1.0 + x[0]) * std::sin(2.0 * x[i]);
    const double ii = eta.row(i).dot(v.row(i));
    out[0] += cross * ii;
    out[i] = -2.5 * std::cos(5.0 * x[i]) * eta.row(0).dot(v.row(i)) +
             cross * eta.row(i).dot(v.row(0)) + self * ii;
  }
  return out;
}

Vector SolenoidMap::mixed_hessian_contract_sum(const Phase& x, const Vector&, const Matrix& eta,
                                               const Matrix& v) const {
  Vector out = Vector::Zero(2);
  double acc = 0.0;
  for (int i = 1; i < dim(); ++i) {
    acc += std::sin(2.0 * x[i]) * eta.row(i).dot(v.row(0)) +
           2.0 * (1.0 + x[0]) * std::cos(2.0 * x[i]) * eta.row(i).dot(v.row(i));
  }
  out[1] = acc;
  return out;
}

double SolenoidMap::objective(const Phase& x) const {
  double torus = 0.0;
  for (int i = 1; i < dim(); ++i) {
    const double d = x[i] - std::numbers::pi;
    torus += d * d;
  }
  return x[0] * x[0] * x[0] + opt_.torus_weight * torus;
}

Vector SolenoidMap::objective_gradient(const Phase& x) const {
  Vector g(dim());
  g[0] = 3.0 * x[0] * x[0];
  for (int i = 1; i < dim(); ++i) g[i] = 2.0 * opt_.torus_weight * (x[i] - std::numbers::pi);
  return g;
}

// ---------------------------------------------------------------------------
// Lorenz / tent

LorenzMap::LorenzMap(std::string id, double b, int t) : id_(std::move(id)), b_(b), t_(t) {
  if (t_ < 1) throw std::invalid_argument("Lorenz map frequency T must be >= 1");
}

std::string LorenzMap::description() const {
  std::ostringstream os;
  os << "Lorenz map on [0,1) with B = " << b_ << ", T = " << t_
     << "; safe range |g| <= 0.5, default g = 0.1";
  return os.str();
}

Phase LorenzMap::random_phase(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return Phase::Constant(1, unit(rng));
}

Phase LorenzMap::step(const Phase& x, const Vector& gamma, std::span<const double>) const {
  const double z = x[0];
  const double w = kTwoPi * t_;
  const double bump = gamma[0] * std::sin(w * z) / w;
  double y;
  if (z <= 0.5) {
    y = b_ * z * z + 2.0 * z + bump;
  } else {
    const double s = z - 1.0;
    y = b_ * s * s + 2.0 - 2.0 * z - bump;
  }
  return Phase::Constant(1, wrap_unit(y));
}

double LorenzMap::slope(double z, double gamma) const {
  const double c = gamma * std::cos(kTwoPi * t_ * z);
  if (z <= 0.5) return 2.0 * b_ * z + 2.0 + c;
  return 2.0 * b_ * (z - 1.0) - 2.0 - c;
}

Matrix LorenzMap::jacobian_apply(const Phase& x, const Vector& gamma, const Matrix& v) const {
  return slope(x[0], gamma[0]) * v;
}

Matrix LorenzMap::jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                         const Matrix& w) const {
  return slope(x[0], gamma[0]) * w;
}

Vector LorenzMap::hessian_covector_contract(const Phase& x, const Vector& gamma,
                                            const Vector& eta, const Vector& v) const {
  const double z = x[0];
  const double s = kTwoPi * t_ * gamma[0] * std::sin(kTwoPi * t_ * z);
  const double second = z <= 0.5 ? 2.0 * b_ - s : 2.0 * b_ + s;
  return Vector::Constant(1, eta[0] * second * v[0]);
}

Matrix LorenzMap::parameter_forcing(const Phase& x, const Vector&) const {
  const double z = x[0];
  const double w = kTwoPi * t_;
  const double s = std::sin(w * z) / w;
  return Matrix::Constant(1, 1, z <= 0.5 ? s : -s);
}

Vector LorenzMap::mixed_hessian_contract(const Phase& x, const Vector&,
                                         const Vector& eta, const Vector& v) const {
  const double z = x[0];
  const double c = std::cos(kTwoPi * t_ * z);
  return Vector::Constant(1, eta[0] * (z <= 0.5 ? c : -c) * v[0]);
}

Vector LorenzMap::objective_gradient(const Phase&) const { return Vector::Ones(1); }

// ---------------------------------------------------------------------------
// Stable linear

std::string StableLinearMap::description() const {
  return "f(x) = 0.5 x + g on R; any real g, default g = 1";
}

Phase StableLinearMap::random_phase(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  return Phase::Constant(1, d(rng));
}

Phase StableLinearMap::step(const Phase& x, const Vector& gamma, std::span<const double>) const {
  return Phase::Constant(1, 0.5 * x[0] + gamma[0]);
}

Matrix StableLinearMap::jacobian_apply(const Phase&, const Vector&, const Matrix& v) const {
  return 0.5 * v;
}

Matrix StableLinearMap::jacobian_adjoint_apply(const Phase&, const Vector&, const Matrix& w) const {
  return 0.5 * w;
}

Vector StableLinearMap::hessian_covector_contract(const Phase&, const Vector&, const Vector&,
                                                  const Vector&) const {
  return Vector::Zero(1);
}

Matrix StableLinearMap::parameter_forcing(const Phase&, const Vector&) const {
  return Matrix::Ones(1, 1);
}

Vector StableLinearMap::mixed_hessian_contract(const Phase&, const Vector&, const Vector&,
                                               const Vector&) const {
  return Vector::Zero(1);
}

Vector StableLinearMap::objective_gradient(const Phase&) const { return Vector::Ones(1); }

// ---------------------------------------------------------------------------
// Logistic

std::string LogisticMap::description() const {
  return "f(x) = (3.8 + g) x (1 - x) on [0,1]; |g| <= 0.15, default g = 0 "
         "(no linear response; used to demonstrate divergence)";
}

Phase LogisticMap::random_phase(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> d(0.1, 0.9);
  return Phase::Constant(1, d(rng));
}

Phase LogisticMap::step(const Phase& x, const Vector& gamma, std::span<const double>) const {
  const double r = 3.8 + gamma[0];
  return Phase::Constant(1, r * x[0] * (1.0 - x[0]));
}

Matrix LogisticMap::jacobian_apply(const Phase& x, const Vector& gamma, const Matrix& v) const {
  return (3.8 + gamma[0]) * (1.0 - 2.0 * x[0]) * v;
}

Matrix LogisticMap::jacobian_adjoint_apply(const Phase& x, const Vector& gamma,
                                           const Matrix& w) const {
  return (3.8 + gamma[0]) * (1.0 - 2.0 * x[0]) * w;
}

Vector LogisticMap::hessian_covector_contract(const Phase&, const Vector& gamma,
                                              const Vector& eta, const Vector& v) const {
  return Vector::Constant(1, eta[0] * (-2.0 * (3.8 + gamma[0])) * v[0]);
}

Matrix LogisticMap::parameter_forcing(const Phase& x, const Vector&) const {
  return Matrix::Constant(1, 1, x[0] * (1.0 - x[0]));
}

Vector LogisticMap::mixed_hessian_contract(const Phase& x, const Vector&, const Vector& eta,
                                           const Vector& v) const {
  return Vector::Constant(1, eta[0] * (1.0 - 2.0 * x[0]) * v[0]);
}

Vector LogisticMap::objective_gradient(const Phase&) const { return Vector::Ones(1); }

// ---------------------------------------------------------------------------

std::unique_ptr<DynamicalSystem> make_system(std::string_view id, const SystemOptions& options) {
  if (id == "solenoid21") {
    return std::make_unique<SolenoidMap>(SolenoidMap::Options{});
  }
  if (id == "solenoid3") {
    SolenoidMap::Options o;
    o.id = "solenoid3";
    o.torus_dims = 2;
    o.torus_weight = 1.0;
    return std::make_unique<SolenoidMap>(o);
  }
  if (id == "solenoid3-noisy") {
    SolenoidMap::Options o;
    o.id = "solenoid3-noisy";
    o.torus_dims = 2;
    o.torus_weight = 1.0;
    o.noisy = true;
    o.noise_amplitude = 5.0;
    o.default_gamma = Vector::Constant(2, 0.05);
    return std::make_unique<SolenoidMap>(o);
  }
  if (id == "lorenz") return std::make_unique<LorenzMap>("lorenz", options.lorenz_b, options.lorenz_t);
  if (id == "tent") return std::make_unique<LorenzMap>("tent", 0.0, options.lorenz_t);
  if (id == "stable-linear") return std::make_unique<StableLinearMap>();
  if (id == "logistic") return std::make_unique<LogisticMap>();
  throw std::invalid_argument("unknown system id: " + std::string(id));
}

}  // namespace linresp
