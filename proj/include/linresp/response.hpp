#pragma once

#include "linresp/adjoint.hpp"
#include "linresp/orbit.hpp"
#include "linresp/shadowing.hpp"
#include "linresp/system.hpp"
#include "linresp/tangent.hpp"

#include <optional>
#include <span>
#include <vector>

namespace linresp {

/// Segments [first, last) whose steps n = 1..N enter the averages.
struct AveragingRange {
  int first;
  int last;

  static AveragingRange from(const RunConfig& config) {
    return {config.buffer_segments, config.segments - config.buffer_segments};
  }
};

/// The averaged steps in order: for each segment in range, n = 1..N.
std::vector<StepIndex> included_steps(const Orbit& orbit, AveragingRange range);

/// Mean of Phi over the included steps.
double orbit_mean_phi(const Orbit& orbit, AveragingRange range);

/// SC_j = mean over included steps of nu(a, n) . X(a, n)[:, j], where
/// X(a, n) = df/dgamma evaluated at x_{a, n-1}.
Vector shadowing_contribution(const CovectorField& nu, const Orbit& orbit,
                              const DynamicalSystem& system, const Vector& gamma,
                              AveragingRange range);

/// Unstable divergence per included step (same order as included_steps):
///   nu~(a, n) . X(a, n) + sum_i mixed_hessian(x_{a,n-1}; eps_i(a, n), e_i(a, n-1)).
std::vector<Vector> unstable_divergence(const CovectorField& nu_tilde, const AdjointData& adjoint,
                                        const TangentData& tangent, const Orbit& orbit,
                                        const DynamicalSystem& system, const Vector& gamma,
                                        AveragingRange range);

/// psi_k = sum_{m=-W}^{W} (phi[k+m] - rho) for each flat index k in `steps`.
/// Throws std::out_of_range if a window leaves the stored orbit.
std::vector<double> windowed_psi(std::span<const double> phi, int window, double rho,
                                 std::span<const int> steps);

/// UC_j = mean over steps of psi_k * divergence_k[j].
Vector unstable_contribution(std::span<const double> psi, std::span<const Vector> divergence);

/// derivative = SC - UC.
inline Vector linear_response(const Vector& sc, const Vector& uc) { return sc - uc; }

struct ResponseOptions {
  /// Replaces the orbit mean of Phi inside psi when set.
  std::optional<double> external_rho;
  /// Keep per-step nu.X, divergence and psi in the result.
  bool keep_step_diagnostics = false;
  TangentInit tangent_init = TangentInit::random;
};

struct ResponseResult {
  Vector sc;
  Vector uc;
  Vector derivative;
  double rho_phi = 0.0;

  double max_duality_error = 0.0;
  double continuity_nu = 0.0;
  double continuity_nu_tilde = 0.0;
  double max_nu_norm = 0.0;
  double max_nu_tilde_norm = 0.0;

  std::vector<Vector> step_nu_x;
  std::vector<Vector> step_divergence;
  std::vector<double> step_psi;

  RunConfig config;
  Vector gamma;
};

/// Full pipeline: orbit, tangent sweep, adjoint sweep, shadowing solve,
/// shadowing and unstable contributions.
ResponseResult compute_response(const DynamicalSystem& system, const RunConfig& config,
                                const ResponseOptions& options = {});

// ---------------------------------------------------------------------------
// Finite-difference validation

enum class NoisePolicy {
  fresh,  ///< independent noise (and initial state) for every evaluation
  fixed,  ///< one realization shared by gamma + delta and gamma - delta
};

struct FdOptions {
  double delta = 0.01;
  int segments = 10000;
  int steps_per_segment = 20;
  int spin_up = 1000;
  int repeats = 1;
  std::uint64_t seed = 0;
  NoisePolicy noise = NoisePolicy::fresh;
  int bootstrap_samples = 200;
};

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;  ///< segment-block bootstrap standard error
};

/// Long-orbit average of the system objective at `gamma`, streamed without
/// storing states. Segment means feed a block bootstrap.
MeanEstimate orbit_average(const DynamicalSystem& system, const Vector& gamma, int segments,
                           int steps_per_segment, int spin_up, std::uint64_t seed,
                           std::uint64_t noise_seed, int bootstrap_samples);

struct FdEstimate {
  Vector slope;
  Vector se;
};

/// Central differences (rho(g + delta v) - rho(g - delta v)) / (2 delta) along
/// each column v of `directions` (identity when empty), averaged over repeats.
/// delta must be positive.
FdEstimate finite_difference_oracle(const DynamicalSystem& system, const Vector& gamma_center,
                                    const FdOptions& options, const Matrix& directions = {});

}  // namespace linresp
