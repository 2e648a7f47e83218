#include "linresp/response.hpp"

#include "linresp/parallel.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace linresp {

std::vector<StepIndex> included_steps(const Orbit& orbit, AveragingRange range) {
  std::vector<StepIndex> steps;
  steps.reserve(static_cast<std::size_t>(std::max(0, range.last - range.first)) *
                orbit.steps_per_segment());
  for (int s = range.first; s < range.last; ++s)
    for (int n = 1; n <= orbit.steps_per_segment(); ++n) steps.push_back({s, n});
  return steps;
}

double orbit_mean_phi(const Orbit& orbit, AveragingRange range) {
  const auto steps = included_steps(orbit, range);
  if (steps.empty()) throw std::invalid_argument("empty averaging range");
  double sum = 0.0;
  for (const auto& st : steps) sum += orbit.phi_at(st.segment, st.n);
  return sum / static_cast<double>(steps.size());
}

Vector shadowing_contribution(const CovectorField& nu, const Orbit& orbit,
                              const DynamicalSystem& system, const Vector& gamma,
                              AveragingRange range) {
  const auto steps = included_steps(orbit, range);
  if (steps.empty()) throw std::invalid_argument("empty averaging range");
  Vector sc = Vector::Zero(system.num_params());
  for (const auto& st : steps) {
    const Matrix x = system.parameter_forcing(orbit.at(st.segment, st.n - 1), gamma);
    sc.noalias() += x.transpose() * nu.at(st.segment, st.n);
  }
  return sc / static_cast<double>(steps.size());
}

std::vector<Vector> unstable_divergence(const CovectorField& nu_tilde, const AdjointData& adjoint,
                                        const TangentData& tangent, const Orbit& orbit,
                                        const DynamicalSystem& system, const Vector& gamma,
                                        AveragingRange range) {
  const auto steps = included_steps(orbit, range);
  std::vector<Vector> div;
  div.reserve(steps.size());
  for (const auto& st : steps) {
    const Phase& x_prev = orbit.at(st.segment, st.n - 1);
    Vector v = system.parameter_forcing(x_prev, gamma).transpose() * nu_tilde.at(st.segment, st.n);
    v += system.mixed_hessian_contract_sum(x_prev, gamma, adjoint.eps(st.segment, st.n),
                                           tangent.e(st.segment, st.n - 1));
    div.push_back(std::move(v));
  }
  return div;
}

std::vector<double> windowed_psi(std::span<const double> phi, int window, double rho,
                                 std::span<const int> steps) {
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  const long size = static_cast<long>(phi.size());
  std::vector<double> psi;
  psi.reserve(steps.size());
  for (int k : steps) {
    if (k - window < 0 || k + window >= size) {
      throw std::out_of_range("psi window exceeds the stored orbit buffer");
    }
    double acc = 0.0;
    for (int m = -window; m <= window; ++m) acc += phi[k + m] - rho;
    psi.push_back(acc);
  }
  return psi;
}

Vector unstable_contribution(std::span<const double> psi, std::span<const Vector> divergence) {
  if (psi.size() != divergence.size()) throw std::invalid_argument("psi/divergence size mismatch");
  if (psi.empty()) throw std::invalid_argument("empty averaging range");
  Vector uc = Vector::Zero(divergence.front().size());
  for (std::size_t k = 0; k < psi.size(); ++k) uc += psi[k] * divergence[k];
  return uc / static_cast<double>(psi.size());
}

ResponseResult compute_response(const DynamicalSystem& system, const RunConfig& config,
                                const ResponseOptions& options) {
  config.validate();
  const Vector gamma = config.gamma.value_or(system.default_gamma());
  if (gamma.size() != system.num_params()) {
    throw std::invalid_argument("gamma has " + std::to_string(gamma.size()) + " entries, system " +
                                system.id() + " expects " + std::to_string(system.num_params()));
  }
  const Objective objective = Objective::of(system);
  const AveragingRange range = AveragingRange::from(config);

  const Orbit orbit = generate_orbit(system, config, gamma, objective);
  std::mt19937_64 tangent_rng(derive_seed(config.seed, 2));
  const TangentData tangent = run_tangent(orbit, system, gamma, tangent_rng, options.tangent_init);
  AdjointOptions adj_opt;
  adj_opt.moment_stride = config.moment_stride;
  const AdjointData adjoint = run_adjoint(orbit, tangent, system, gamma, objective, adj_opt);
  const ShadowingSolution shadow = solve_shadowing(adjoint, tangent, config.solver);

  ResponseResult res;
  res.config = config;
  res.gamma = gamma;
  res.rho_phi = orbit_mean_phi(orbit, range);
  res.sc = shadowing_contribution(shadow.nu, orbit, system, gamma, range);

  const auto steps = included_steps(orbit, range);
  std::vector<int> flat(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) flat[k] = orbit.index(steps[k]);
  const double rho = options.external_rho.value_or(res.rho_phi);
  std::vector<double> psi = windowed_psi(orbit.phi, config.window, rho, flat);
  std::vector<Vector> div =
      unstable_divergence(shadow.nu_tilde, adjoint, tangent, orbit, system, gamma, range);
  res.uc = unstable_contribution(psi, div);
  res.derivative = linear_response(res.sc, res.uc);

  res.max_duality_error = adjoint.max_duality_error;
  res.continuity_nu = shadow.nu.continuity_residual();
  res.continuity_nu_tilde = shadow.nu_tilde.continuity_residual();
  res.max_nu_norm = shadow.nu.max_norm();
  res.max_nu_tilde_norm = shadow.nu_tilde.max_norm();

  if (options.keep_step_diagnostics) {
    res.step_nu_x.reserve(steps.size());
    for (const auto& st : steps) {
      res.step_nu_x.push_back(
          system.parameter_forcing(orbit.at(st.segment, st.n - 1), gamma).transpose() *
          shadow.nu.at(st.segment, st.n));
    }
    res.step_divergence = std::move(div);
    res.step_psi = std::move(psi);
  }
  return res;
}

// ---------------------------------------------------------------------------

MeanEstimate orbit_average(const DynamicalSystem& system, const Vector& gamma, int segments,
                           int steps_per_segment, int spin_up_steps, std::uint64_t seed,
                           std::uint64_t noise_seed, int bootstrap_samples) {
  if (segments < 2 || steps_per_segment < 1) throw std::invalid_argument("orbit too short");
  std::mt19937_64 state_rng(derive_seed(seed, 0));
  NoiseSource noise(derive_seed(noise_seed, 1), system.noise_dim(), system.noise_amplitude());
  Phase x = spin_up(system, system.random_phase(state_rng), spin_up_steps, gamma, &noise);

  std::vector<double> seg_mean(segments);
  const bool noisy = system.noise_dim() > 0;
  for (int s = 0; s < segments; ++s) {
    double acc = 0.0;
    for (int n = 0; n < steps_per_segment; ++n) {
      if (noisy) {
        const Vector u = noise.next();
        x = system.step(x, gamma, std::span<const double>(u.data(), u.size()));
      } else {
        x = system.step(x, gamma);
      }
      acc += system.objective(x);
    }
    if (!std::isfinite(acc)) throw NumericalError("non-finite objective in orbit average");
    seg_mean[s] = acc / steps_per_segment;
  }

  MeanEstimate est;
  est.mean = std::accumulate(seg_mean.begin(), seg_mean.end(), 0.0) / segments;

  std::mt19937_64 boot_rng(derive_seed(seed, 3));
  std::uniform_int_distribution<int> pick(0, segments - 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int b = 0; b < bootstrap_samples; ++b) {
    double acc = 0.0;
    for (int s = 0; s < segments; ++s) acc += seg_mean[pick(boot_rng)];
    const double m = acc / segments;
    sum += m;
    sum_sq += m * m;
  }
  if (bootstrap_samples > 1) {
    const double mean_b = sum / bootstrap_samples;
    est.se = std::sqrt(std::max(0.0, (sum_sq - bootstrap_samples * mean_b * mean_b) /
                                         (bootstrap_samples - 1)));
  }
  return est;
}

FdEstimate finite_difference_oracle(const DynamicalSystem& system, const Vector& gamma_center,
                                    const FdOptions& options, const Matrix& directions) {
  if (!(options.delta > 0.0)) throw std::invalid_argument("finite-difference delta must be > 0");
  if (options.repeats < 1) throw std::invalid_argument("finite-difference repeats must be >= 1");
  const Matrix dirs =
      directions.size() == 0 ? Matrix::Identity(system.num_params(), system.num_params())
                             : directions;
  if (dirs.rows() != system.num_params()) throw std::invalid_argument("direction size mismatch");
  const int ndir = static_cast<int>(dirs.cols());
  const int reps = options.repeats;

  // One task per (direction, repeat, sign).
  const int tasks = ndir * reps * 2;
  std::vector<MeanEstimate> est(tasks);
  parallel_for(tasks, [&](int t) {
    const int sign_slot = t % 2;
    const int r = (t / 2) % reps;
    const int j = t / (2 * reps);
    const double sign = sign_slot == 0 ? 1.0 : -1.0;
    const Vector g = gamma_center + sign * options.delta * dirs.col(j);
    const std::uint64_t base = derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(r));
    std::uint64_t seed = base;
    if (options.noise == NoisePolicy::fresh) {
      seed = derive_seed(base, 10 + 2 * static_cast<std::uint64_t>(j) + sign_slot);
    }
    est[t] = orbit_average(system, g, options.segments, options.steps_per_segment, options.spin_up,
                           seed, seed, options.bootstrap_samples);
  });

  FdEstimate out;
  out.slope = Vector::Zero(ndir);
  out.se = Vector::Zero(ndir);
  for (int j = 0; j < ndir; ++j) {
    double var = 0.0;
    for (int r = 0; r < reps; ++r) {
      const MeanEstimate& plus = est[(j * reps + r) * 2];
      const MeanEstimate& minus = est[(j * reps + r) * 2 + 1];
      out.slope[j] += (plus.mean - minus.mean) / (2.0 * options.delta);
      var += (plus.se * plus.se + minus.se * minus.se) / (4.0 * options.delta * options.delta);
    }
    out.slope[j] /= reps;
    out.se[j] = std::sqrt(var) / reps;
  }
  return out;
}

}  // namespace linresp
