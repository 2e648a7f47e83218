#include "linresp/orbit.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace linresp {

void RunConfig::validate() const {
  if (steps_per_segment < 2) throw std::invalid_argument("steps per segment N must be >= 2");
  if (segments < 2) throw std::invalid_argument("number of segments A must be >= 2");
  if (window < 0) throw std::invalid_argument("window W must be >= 0");
  if (spin_up < 0) throw std::invalid_argument("spin-up must be >= 0");
  if (buffer_segments < 0) throw std::invalid_argument("buffer segments must be >= 0");
  if (2 * buffer_segments >= segments)
    throw std::invalid_argument("buffer segments leave nothing to average");
  if (moment_stride < 1) throw std::invalid_argument("moment stride must be >= 1");
}

NoiseSource::NoiseSource(std::uint64_t seed, int draws_per_step, double amplitude)
    : rng_(seed), dist_(-amplitude, amplitude), draws_(draws_per_step) {}

Vector NoiseSource::next() {
  Vector u(draws_);
  for (int i = 0; i < draws_; ++i) u[i] = dist_(rng_);
  return u;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

Phase advance(const DynamicalSystem& system, const Phase& x, const Vector& gamma,
              NoiseSource* noise, Vector* drawn, long step_index) {
  Phase y;
  if (noise != nullptr && noise->draws_per_step() > 0) {
    Vector u = noise->next();
    y = system.step(x, gamma, std::span<const double>(u.data(), u.size()));
    if (drawn != nullptr) *drawn = std::move(u);
  } else {
    y = system.step(x, gamma);
  }
  if (!y.allFinite()) {
    throw NumericalError("non-finite state produced at step " + std::to_string(step_index) +
                         " of system " + system.id());
  }
  return y;
}

}  // namespace

Phase spin_up(const DynamicalSystem& system, const Phase& x0, int steps, const Vector& gamma,
              NoiseSource* noise) {
  if (steps < 0) throw std::invalid_argument("spin-up step count must be >= 0");
  Phase x = x0;
  for (int k = 0; k < steps; ++k) x = advance(system, x, gamma, noise, nullptr, k);
  return x;
}

Orbit generate_orbit(const DynamicalSystem& system, const RunConfig& config, const Vector& gamma) {
  return generate_orbit(system, config, gamma, Objective::of(system));
}

Orbit generate_orbit(const DynamicalSystem& system, const RunConfig& config, const Vector& gamma,
                     const Objective& objective) {
  config.validate();
  std::mt19937_64 state_rng(derive_seed(config.seed, 0));
  const std::uint64_t noise_seed = derive_seed(config.noise_seed.value_or(config.seed), 1);
  NoiseSource noise(noise_seed, system.noise_dim(), system.noise_amplitude());

  Orbit orbit(config.steps_per_segment, config.segments, config.window);
  const int total = config.segments * config.steps_per_segment + 1 + 2 * config.window;

  Phase x = spin_up(system, system.random_phase(state_rng), config.spin_up, gamma, &noise);

  orbit.states.reserve(total);
  orbit.phi.reserve(total);
  const bool noisy = system.noise_dim() > 0;
  if (noisy) orbit.noise.reserve(total - 1);

  orbit.states.push_back(x);
  for (int k = 1; k < total; ++k) {
    Vector drawn;
    x = advance(system, x, gamma, &noise, noisy ? &drawn : nullptr,
                static_cast<long>(config.spin_up) + k - 1);
    if (noisy) orbit.noise.push_back(std::move(drawn));
    orbit.states.push_back(x);
  }
  for (const auto& s : orbit.states) orbit.phi.push_back(objective.value(s));
  return orbit;
}

void write_orbit_csv(const Orbit& orbit, std::ostream& out) {
  out << "index,segment,n,phi";
  const int m = orbit.states.empty() ? 0 : static_cast<int>(orbit.states.front().size());
  for (int i = 0; i < m; ++i) out << ",x" << (i + 1);
  out << '\n' << std::setprecision(17);
  for (int k = 0; k < orbit.size(); ++k) {
    const int rel = k - orbit.window();
    int seg = -1;
    int n = -1;
    if (rel >= 0 && rel <= orbit.segments() * orbit.steps_per_segment()) {
      seg = std::min(rel / orbit.steps_per_segment(), orbit.segments() - 1);
      n = rel - seg * orbit.steps_per_segment();
    }
    out << k << ',' << seg << ',' << n << ',' << orbit.phi[k];
    for (int i = 0; i < m; ++i) out << ',' << orbit.states[k][i];
    out << '\n';
  }
}

}  // namespace linresp
