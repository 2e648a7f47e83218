#pragma once

#include "linresp/orbit.hpp"
#include "linresp/system.hpp"

#include <random>
#include <vector>

namespace linresp {

struct QrFactors {
  Matrix q;  ///< M x u, orthonormal columns
  Matrix r;  ///< u x u, upper triangular with positive diagonal
};

/// Thin QR of an M x u basis with the positive-diagonal sign convention.
/// Throws NumericalError if some |R_ii| < 1e-13 * ||e_end||.
QrFactors qr_interface(const Matrix& e_end);

enum class TangentInit {
  random,      ///< Gaussian columns from the run's generator, orthonormalized
  coordinate,  ///< the first u coordinate directions
};

/// Homogeneous tangent solutions along a segmented orbit.
///
/// e(a, n) for n = 0..N is the M x u basis inside segment a. Interface
/// factors are indexed by interface number: e(a-1, N) = q(a) r(a) and
/// e(a, 0) = q(a) for a = 1..A. q(0) is the orthonormalized initial basis
/// and r(0) the identity.
class TangentData {
 public:
  TangentData(int steps_per_segment, int segments)
      : n_(steps_per_segment), a_(segments) {
    e_.resize(static_cast<std::size_t>(segments) * (steps_per_segment + 1));
    q_.resize(segments + 1);
    r_.resize(segments + 1);
  }

  int steps_per_segment() const { return n_; }
  int segments() const { return a_; }

  const Matrix& e(int segment, int n) const { return e_[slot(segment, n)]; }
  Matrix& e(int segment, int n) { return e_[slot(segment, n)]; }
  const Matrix& q(int interface) const { return q_[interface]; }
  const Matrix& r(int interface) const { return r_[interface]; }
  Matrix& q(int interface) { return q_[interface]; }
  Matrix& r(int interface) { return r_[interface]; }

 private:
  std::size_t slot(int segment, int n) const {
    return static_cast<std::size_t>(segment) * (n_ + 1) + n;
  }

  int n_;
  int a_;
  std::vector<Matrix> e_;
  std::vector<Matrix> q_;
  std::vector<Matrix> r_;
};

/// Forward sweep: pushes u tangent vectors through every segment and
/// re-orthonormalizes at each interface. For u = 0 all bases are M x 0.
TangentData run_tangent(const Orbit& orbit, const DynamicalSystem& system, const Vector& gamma,
                        std::mt19937_64& rng, TangentInit init = TangentInit::random);

}  // namespace linresp
