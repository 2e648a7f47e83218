#include "catch_amalgamated.hpp"

#include "linresp/adjoint.hpp"
#include "linresp/systems.hpp"
#include "test_util.hpp"

using namespace linresp;
using namespace testutil;

namespace {

struct Sweep {
  Orbit orbit;
  TangentData tangent;
  AdjointData adjoint;
};

Sweep sweep(const DynamicalSystem& sys, const Vector& g, int n, int a, std::uint64_t seed,
            const Objective& obj) {
  RunConfig c;
  c.system = sys.id();
  c.steps_per_segment = n;
  c.segments = a;
  c.window = 0;
  c.buffer_segments = 0;
  c.seed = seed;
  Orbit o = generate_orbit(sys, c, g, obj);
  std::mt19937_64 rng(seed + 1);
  TangentData t = run_tangent(o, sys, g, rng);
  AdjointData d = run_adjoint(o, t, sys, g, obj);
  return {std::move(o), std::move(t), std::move(d)};
}

}  // namespace

TEST_CASE("terminal epsilon") {
  std::mt19937_64 rng(1);
  const Matrix q = Eigen::HouseholderQR<Matrix>(randn(rng, 5, 5)).householderQ() *
                   Matrix::Identity(5, 2);

  CHECK((terminal_epsilon(q, Matrix::Identity(2, 2)) - q).norm() < 1e-15);

  const Matrix eps = terminal_epsilon(q, Matrix(Vector{{2.0, 3.0}}.asDiagonal()));
  CHECK((eps.col(0) - q.col(0) / 2.0).norm() < 1e-15);
  CHECK((eps.col(1) - q.col(1) / 3.0).norm() < 1e-15);

  for (int t = 0; t < 20; ++t) {
    const Matrix qq = Eigen::HouseholderQR<Matrix>(randn(rng, 9, 9)).householderQ() *
                      Matrix::Identity(9, 4);
    Matrix r = randn(rng, 4, 4).triangularView<Eigen::Upper>();
    r.diagonal() = r.diagonal().cwiseAbs().array() + 0.5;
    const Matrix e = terminal_epsilon(qq, r);
    CHECK((e.transpose() * (qq * r) - Matrix::Identity(4, 4)).norm() < 1e-12);
  }

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = 1e-14;
  CHECK_THROWS_AS(terminal_epsilon(q, bad), NumericalError);
}

TEST_CASE("omega vanishes without curvature") {
  std::mt19937_64 rng(2);
  AffineSaddle aff;
  CHECK(compute_omega(aff, randn(rng, 2, 1), randn(rng, 2, 1), randn(rng, 2), Vector::Zero(1))
            .isZero(0.0));
  auto tent = make_system("tent");
  CHECK(compute_omega(*tent, Matrix::Constant(1, 1, 0.7), Matrix::Constant(1, 1, 1.3),
                      Phase::Constant(1, 0.3), Vector::Zero(1))[0] == 0.0);
}

TEST_CASE("omega matches differences of the adjoint Jacobian") {
  auto sys = make_system("solenoid21");
  const Vector g = sys->default_gamma();
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Phase x = spin_up(*sys, sys->random_phase(rng), 50, g);
    const Matrix eps = randn(rng, 21, 20);
    const Matrix e = randn(rng, 21, 20);
    Vector fd = Vector::Zero(21);
    const double h = 1e-5;
    for (int i = 0; i < 20; ++i) {
      fd += (sys->jacobian_adjoint_apply(x + h * e.col(i), g, eps.col(i)) -
             sys->jacobian_adjoint_apply(x - h * e.col(i), g, eps.col(i))) /
            (2 * h);
    }
    CHECK(rel_err(compute_omega(*sys, eps, e, x, g), fd) < 1e-4);
  }
}

TEST_CASE("zero sources on an affine system") {
  AffineSaddle aff;
  const Sweep s = sweep(aff, Vector::Zero(1), 5, 4, 1, Objective::zero(2));
  for (int a = 0; a < 4; ++a) {
    CHECK(s.adjoint.b()[a].isZero(0.0));
    CHECK(s.adjoint.b_tilde()[a].isZero(0.0));
    for (int n = 0; n <= 5; ++n) {
      CHECK(s.adjoint.nu_prime(a, n).isZero(0.0));
      CHECK(s.adjoint.nu_tilde_prime(a, n).isZero(0.0));
    }
  }
}

TEST_CASE("single segment unrolls by hand") {
  auto sys = make_system("solenoid3");
  const Vector g = sys->default_gamma();
  std::mt19937_64 rng(4);
  Orbit o(3, 1, 0);
  Phase x = spin_up(*sys, sys->random_phase(rng), 100, g);
  for (int k = 0; k <= 3; ++k) {
    o.states.push_back(x);
    o.phi.push_back(sys->objective(x));
    x = sys->step(x, g);
  }
  const Objective obj = Objective::of(*sys);
  const TangentData t = run_tangent(o, *sys, g, rng);
  const AdjointData d = run_adjoint(o, t, *sys, g, obj);

  // nu'_{0,n} = sum_{m=n}^{N-1} (J_{m-1}...J_n)^T dPhi_m with dense Jacobians.
  auto jt = [&](int k) { return Matrix(dense_jacobian(*sys, o.at(0, k), g).transpose()); };
  const Vector dphi0 = sys->objective_gradient(o.at(0, 0));
  const Vector dphi1 = sys->objective_gradient(o.at(0, 1));
  const Vector dphi2 = sys->objective_gradient(o.at(0, 2));
  CHECK(d.nu_prime(0, 3).isZero(0.0));
  CHECK(rel_err(d.nu_prime(0, 2), dphi2) < 1e-14);
  CHECK(rel_err(d.nu_prime(0, 1), Vector(dphi1 + jt(1) * dphi2)) < 1e-13);
  CHECK(rel_err(d.nu_prime(0, 0), Vector(dphi0 + jt(0) * dphi1 + jt(0) * jt(1) * dphi2)) < 1e-13);

  // eps pulled back by the transposed Jacobians from Q_A R_A^{-T}.
  const Matrix eps3 = terminal_epsilon(t.q(1), t.r(1));
  CHECK(rel_err(d.eps(0, 0), Matrix(jt(0) * jt(1) * jt(2) * eps3)) < 1e-13);
  CHECK_THROWS_AS(d.omega(0, 3), std::out_of_range);
  CHECK_NOTHROW(d.omega(0, 2));
}

TEST_CASE("adjoint invariants on the 21-dimensional solenoid") {
  auto sys = make_system("solenoid21");
  const Vector g = sys->default_gamma();
  const int n = 20;
  const int a = 20;
  const Sweep s = sweep(*sys, g, n, a, 6, Objective::of(*sys));
  const AdjointData& d = s.adjoint;
  const TangentData& t = s.tangent;

  double dual = 0.0;
  for (int k = 0; k < a; ++k) {
    for (int m = 0; m <= n; ++m) {
      const Matrix gram = d.eps(k, m).transpose() * t.e(k, m) - Matrix::Identity(20, 20);
      dual = std::max(dual, gram.cwiseAbs().rowwise().sum().maxCoeff());
    }
  }
  CHECK(dual < 1e-9);
  CHECK(d.max_duality_error == Catch::Approx(dual).epsilon(1e-6));

  for (int k = 1; k < a; ++k) {
    const Matrix& eps0 = d.eps(k, 0);
    const Matrix& eps_prev = d.eps(k - 1, n);
    // Duality right after the interface.
    CHECK((eps_prev.transpose() * t.e(k - 1, n) - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() <
          1e-10);
    const Vector& v_prev = d.nu_prime(k - 1, n);
    const Vector& vt_prev = d.nu_tilde_prime(k - 1, n);
    // Orthogonality of the carried-over inhomogeneous part.
    CHECK((eps0.transpose() * v_prev).norm() <= 1e-9 * eps0.norm() * (v_prev.norm() + 1.0));
    CHECK((eps0.transpose() * vt_prev).norm() <= 1e-9 * eps0.norm() * (vt_prev.norm() + 1.0));
    // Both sides of the interface describe the same affine space.
    for (const auto& [here, there] :
         {std::pair{d.nu_prime(k, 0), v_prev}, std::pair{d.nu_tilde_prime(k, 0), vt_prev}}) {
      const Vector jump = here - there;
      const Vector coef = eps_prev.colPivHouseholderQr().solve(jump);
      CHECK((eps_prev * coef - jump).norm() <= 1e-9 * std::max(jump.norm(), 1.0));
    }
  }

  for (int k = 0; k < a; ++k) {
    const Matrix& c = d.c()[k];
    CHECK((c - c.transpose()).norm() <= 1e-12 * c.norm());
    CHECK(Eigen::LLT<Matrix>(c).info() == Eigen::Success);
  }

  // Pullback recursion inside a segment.
  const Objective obj = Objective::of(*sys);
  for (int m = 1; m <= n; ++m) {
    const Phase& xp = s.orbit.at(5, m - 1);
    const Vector expect =
        sys->jacobian_adjoint_apply(xp, g, d.nu_tilde_prime(5, m)) + d.omega(5, m - 1);
    CHECK(rel_err(d.nu_tilde_prime(5, m - 1), expect) < 1e-14);
    CHECK(rel_err(d.omega(5, m - 1),
                  compute_omega(*sys, d.eps(5, m), t.e(5, m - 1), xp, g)) < 1e-14);
  }
}

TEST_CASE("moment stride samples n = N, N - s, ...") {
  auto sys = make_system("solenoid3");
  const Vector g = sys->default_gamma();
  RunConfig c;
  c.system = "solenoid3";
  c.steps_per_segment = 6;
  c.segments = 4;
  c.window = 0;
  c.buffer_segments = 0;
  const Objective obj = Objective::of(*sys);
  const Orbit o = generate_orbit(*sys, c, g, obj);
  std::mt19937_64 rng(1);
  const TangentData t = run_tangent(o, *sys, g, rng);
  AdjointOptions opt;
  opt.moment_stride = 4;
  const AdjointData d = run_adjoint(o, t, *sys, g, obj, opt);
  const Matrix expect = d.eps(2, 6).transpose() * d.eps(2, 6) + d.eps(2, 2).transpose() * d.eps(2, 2);
  CHECK(rel_err(d.c()[2], expect) < 1e-14);
  const Vector dexp = d.eps(2, 6).transpose() * d.nu_prime(2, 6) +
                      d.eps(2, 2).transpose() * d.nu_prime(2, 2);
  CHECK((d.d()[2] - dexp).norm() <= 1e-14 * (dexp.norm() + 1.0));
}

TEST_CASE("duality drift beyond the threshold aborts") {
  auto sys = make_system("solenoid21");
  const Vector g = sys->default_gamma();
  RunConfig c;
  c.system = "solenoid21";
  c.steps_per_segment = 20;
  c.segments = 3;
  c.window = 0;
  c.buffer_segments = 0;
  const Objective obj = Objective::of(*sys);
  const Orbit o = generate_orbit(*sys, c, g, obj);
  std::mt19937_64 rng(1);
  const TangentData t = run_tangent(o, *sys, g, rng);
  AdjointOptions opt;
  CHECK_NOTHROW(run_adjoint(o, t, *sys, g, obj, opt));
  opt.duality_abort = 1e-300;
  CHECK_THROWS_AS(run_adjoint(o, t, *sys, g, obj, opt), NumericalError);
}
