#pragma once

#include "linresp/system.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

namespace linresp {

enum class SolverKind { projection, least_squares };

/// Everything that determines one response computation.
struct RunConfig {
  std::string system = "solenoid21";
  SystemOptions system_options;
  int steps_per_segment = 20;  ///< N
  int segments = 200;          ///< A
  int window = 10;             ///< W, half-width of the psi window
  int spin_up = 1000;          ///< steps discarded before step (0,0)
  int buffer_segments = 2;     ///< segments excluded from averages at each end
  std::uint64_t seed = 0;
  /// When set, noise is drawn from this seed instead of `seed`, so that runs at
  /// different gamma share one noise realization.
  std::optional<std::uint64_t> noise_seed;
  SolverKind solver = SolverKind::projection;
  int moment_stride = 1;
  std::optional<Vector> gamma;  ///< empty means the system default

  /// Throws std::invalid_argument when N < 2, A < 2, W < 0, spin_up < 0, ...
  void validate() const;
};

/// Source of the additive noise U; one per orbit.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, int draws_per_step, double amplitude);

  int draws_per_step() const { return draws_; }
  /// Fills the next realization. Empty when the system is deterministic.
  Vector next();

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> dist_;
  int draws_;
};

/// Index of a step inside a segmented orbit: x_{segment, n}, 0 <= n <= N.
struct StepIndex {
  int segment;
  int n;
};

/// A spun-up orbit split into A segments of N steps.
///
/// States are stored once in a flat array:
///   [ W pre-buffer | x_{0,0} ... x_{A-1,N} | W post-buffer ].
/// x_{a,N} and x_{a+1,0} are the same stored element.
class Orbit {
 public:
  Orbit(int steps_per_segment, int segments, int window)
      : n_(steps_per_segment), a_(segments), w_(window) {}

  int steps_per_segment() const { return n_; }
  int segments() const { return a_; }
  int window() const { return w_; }

  /// Flat index of x_{segment, n}.
  int index(int segment, int n) const { return w_ + segment * n_ + n; }
  int index(StepIndex s) const { return index(s.segment, s.n); }

  const Phase& at(int segment, int n) const { return states[index(segment, n)]; }
  double phi_at(int segment, int n) const { return phi[index(segment, n)]; }

  /// Number of distinct stored states: A N + 1 + 2W.
  int size() const { return static_cast<int>(states.size()); }

  std::vector<Phase> states;
  std::vector<double> phi;
  /// noise[k] moved states[k] to states[k+1]; empty for deterministic systems.
  std::vector<Vector> noise;

 private:
  int n_;
  int a_;
  int w_;
};

/// Iterates f `steps` times, drawing noise from `noise` when given.
/// Throws NumericalError naming the step at which a non-finite state appears.
Phase spin_up(const DynamicalSystem& system, const Phase& x0, int steps, const Vector& gamma,
              NoiseSource* noise = nullptr);

/// Generates the orbit for `config`: random start, spin-up, then the
/// buffered segments. Deterministic given (config.seed, config.noise_seed).
/// Phi is recorded at every stored state using `objective`.
Orbit generate_orbit(const DynamicalSystem& system, const RunConfig& config, const Vector& gamma,
                     const Objective& objective);
Orbit generate_orbit(const DynamicalSystem& system, const RunConfig& config, const Vector& gamma);

/// Seeds derived from the run seed for the independent random streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Debug dump: one CSV row per stored state (index, segment, n, phi, x...).
void write_orbit_csv(const Orbit& orbit, std::ostream& out);

}  // namespace linresp
