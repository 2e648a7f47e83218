#include "catch_amalgamated.hpp"

#include "linresp/shadowing.hpp"
#include "linresp/systems.hpp"
#include "test_util.hpp"

using namespace linresp;
using namespace testutil;

namespace {

Matrix random_spd(std::mt19937_64& rng, int u) {
  const Matrix a = randn(rng, u, u);
  return a * a.transpose() + 0.5 * Matrix::Identity(u, u);
}

Matrix random_invertible(std::mt19937_64& rng, int u) {
  Matrix r = randn(rng, u, u);
  r.diagonal().array() += 3.0;
  return r;
}

KktSystem random_kkt(std::mt19937_64& rng, int a, int u) {
  KktSystem k;
  k.c.resize(a);
  k.d.resize(a);
  k.r.resize(a);
  k.b.resize(a);
  for (int s = 0; s < a; ++s) {
    k.c[s] = random_spd(rng, u);
    k.d[s] = randn(rng, u);
    if (s > 0) {
      k.r[s] = random_invertible(rng, u);
      k.b[s] = randn(rng, u);
    }
  }
  return k;
}

// Constraint matrix B with block column k (k = 1..A-1): +I at row k-1, -R_k at row k.
Matrix dense_b(const KktSystem& k) {
  const int a = k.segments();
  const int u = static_cast<int>(k.c[0].rows());
  Matrix b = Matrix::Zero(a * u, (a - 1) * u);
  for (int s = 1; s < a; ++s) {
    b.block((s - 1) * u, (s - 1) * u, u, u) = Matrix::Identity(u, u);
    b.block(s * u, (s - 1) * u, u, u) = -k.r[s];
  }
  return b;
}

// Dense saddle-point solve of  [C B; B^T 0] [a; lambda] = [-d; R^T b].
std::pair<Vector, Vector> dense_kkt(const KktSystem& k) {
  const int a = k.segments();
  const int u = static_cast<int>(k.c[0].rows());
  const int na = a * u;
  const int nl = (a - 1) * u;
  Matrix m = Matrix::Zero(na + nl, na + nl);
  Vector rhs = Vector::Zero(na + nl);
  for (int s = 0; s < a; ++s) {
    m.block(s * u, s * u, u, u) = k.c[s];
    rhs.segment(s * u, u) = -k.d[s];
  }
  const Matrix b = dense_b(k);
  m.topRightCorner(na, nl) = b;
  m.bottomLeftCorner(nl, na) = b.transpose();
  for (int s = 1; s < a; ++s) rhs.segment(na + (s - 1) * u, u) = k.r[s].transpose() * k.b[s];
  const Vector sol = m.fullPivLu().solve(rhs);
  return {sol.head(na), sol.tail(nl)};
}

}  // namespace

TEST_CASE("projection recursion examples") {
  const std::vector<Matrix> r2 = {Matrix(), Matrix::Identity(2, 2)};
  SECTION("zero data") {
    const std::vector<Vector> b = {Vector::Zero(2), Vector::Zero(2)};
    for (const auto& a : solve_projection(b, r2)) CHECK(a.isZero(0.0));
  }
  SECTION("two segments") {
    const std::vector<Vector> b = {Vector{{1.0, 2.0}}, Vector{{0.0, 1.0}}};
    const auto a = solve_projection(b, r2);
    CHECK(a[0] == Vector{{-1.0, -2.0}});
    CHECK(a[1] == Vector{{-1.0, -3.0}});
  }
  SECTION("one segment") {
    const std::vector<Vector> b = {Vector{{4.0, -5.0}}};
    const std::vector<Matrix> r = {Matrix()};
    CHECK(solve_projection(b, r)[0] == Vector{{-4.0, 5.0}});
  }
  SECTION("continuity relation") {
    std::mt19937_64 rng(1);
    std::vector<Vector> b;
    std::vector<Matrix> r = {Matrix()};
    for (int s = 0; s < 6; ++s) b.push_back(randn(rng, 3));
    for (int s = 1; s < 6; ++s) {
      Matrix rs = randn(rng, 3, 3).triangularView<Eigen::Upper>();
      rs.diagonal() = rs.diagonal().cwiseAbs().array() + 0.5;
      r.push_back(rs);
    }
    const auto a = solve_projection(b, r);
    for (int s = 1; s < 6; ++s) {
      CHECK((a[s - 1] - r[s].transpose() * (a[s] + b[s])).norm() < 1e-12 * (a[s - 1].norm() + 1));
    }
  }
}

TEST_CASE("least squares two-segment example") {
  const Vector w{{0.3, -1.2}};
  KktSystem k;
  k.c = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  k.d = {Vector::Zero(2), Vector::Zero(2)};
  k.r = {Matrix(), Matrix::Identity(2, 2)};
  k.b = {Vector(), w};
  const LeastSquaresSolution s = solve_least_squares(k);
  CHECK((s.lambda[1] + w / 2).norm() < 1e-15);
  CHECK((s.a[0] - w / 2).norm() < 1e-15);
  CHECK((s.a[1] + w / 2).norm() < 1e-15);

  k.b[1] = Vector::Zero(2);
  const LeastSquaresSolution z = solve_least_squares(k);
  CHECK(z.a[0].isZero(0.0));
  CHECK(z.a[1].isZero(0.0));
  CHECK(z.lambda[1].isZero(0.0));
}

TEST_CASE("least squares agrees with a dense KKT solve") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> seg(2, 10), dim(1, 4);
  for (int t = 0; t < 50; ++t) {
    const int a = seg(rng);
    const int u = dim(rng);
    const KktSystem k = random_kkt(rng, a, u);
    const LeastSquaresSolution s = solve_least_squares(k);
    const auto [a_ref, l_ref] = dense_kkt(k);
    Vector a_got(a * u), l_got((a - 1) * u);
    for (int i = 0; i < a; ++i) a_got.segment(i * u, u) = s.a[i];
    for (int i = 1; i < a; ++i) l_got.segment((i - 1) * u, u) = s.lambda[i];
    CHECK(rel_err(a_got, a_ref) < 1e-8);
    CHECK(rel_err(l_got, l_ref) < 1e-8);
    // Constraints hold.
    for (int i = 1; i < a; ++i) {
      CHECK((s.a[i - 1] - k.r[i].transpose() * (s.a[i] + k.b[i])).norm() <=
            1e-10 * (s.a[i - 1].norm() + 1.0));
    }
  }
}

TEST_CASE("Schur blocks match the dense product") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const int a = 2 + t % 9;
    const int u = 1 + t % 4;
    const KktSystem k = random_kkt(rng, a, u);
    const SchurBlocks sb = assemble_schur(k);
    Matrix cinv = Matrix::Zero(a * u, a * u);
    for (int s = 0; s < a; ++s) cinv.block(s * u, s * u, u, u) = k.c[s].inverse();
    const Matrix b = dense_b(k);
    const Matrix lambda = b.transpose() * cinv * b;
    Matrix dense_rhs_d(a * u, 1);
    for (int s = 0; s < a; ++s) dense_rhs_d.block(s * u, 0, u, 1) = k.d[s];
    const Matrix rhs = -b.transpose() * cinv * dense_rhs_d;
    for (int i = 1; i < a; ++i) {
      const int r0 = (i - 1) * u;
      CHECK((lambda.block(r0, r0, u, u) - sb.e_blocks[i]).cwiseAbs().maxCoeff() <
            1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff()));
      if (i + 1 < a) {
        CHECK((lambda.block(r0, r0 + u, u, u) + sb.d_blocks[i].transpose()).cwiseAbs().maxCoeff() <
              1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff()));
      }
      const Vector expect = rhs.block(r0, 0, u, 1) - k.r[i].transpose() * k.b[i];
      CHECK((sb.y[i] - expect).norm() < 1e-10 * std::max(1.0, expect.norm()));
    }
    CHECK((lambda - lambda.transpose()).norm() < 1e-10 * lambda.norm());
    CHECK(Eigen::LLT<Matrix>(lambda).info() == Eigen::Success);
  }
}

TEST_CASE("least squares rejects an indefinite moment block") {
  std::mt19937_64 rng(3);
  KktSystem k = random_kkt(rng, 4, 2);
  k.c[2] = -Matrix::Identity(2, 2);
  try {
    solve_least_squares(k);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("reconstruction with zero coefficients is the inhomogeneous part") {
  std::mt19937_64 rng(5);
  const int n = 3, a = 2;
  std::vector<Vector> v;
  std::vector<Matrix> e;
  for (int i = 0; i < a * (n + 1); ++i) {
    v.push_back(randn(rng, 4));
    e.push_back(randn(rng, 4, 2));
  }
  const std::vector<Vector> coef = {Vector::Zero(2), Vector::Zero(2)};
  const CovectorField nu = reconstruct_shadowing(
      n, a, [&](int s, int k) -> const Vector& { return v[s * (n + 1) + k]; },
      [&](int s, int k) -> const Matrix& { return e[s * (n + 1) + k]; }, coef);
  for (int s = 0; s < a; ++s)
    for (int k = 0; k <= n; ++k) CHECK(nu.at(s, k) == v[s * (n + 1) + k]);
}

namespace {

struct Pipeline {
  Orbit orbit;
  TangentData tangent;
  AdjointData adjoint;
};

Pipeline pipeline(const DynamicalSystem& sys, const Vector& g, int n, int a, std::uint64_t seed) {
  RunConfig c;
  c.system = sys.id();
  c.steps_per_segment = n;
  c.segments = a;
  c.window = 0;
  c.buffer_segments = 0;
  c.seed = seed;
  const Objective obj = Objective::of(sys);
  Orbit o = generate_orbit(sys, c, g, obj);
  std::mt19937_64 rng(seed + 100);
  TangentData t = run_tangent(o, sys, g, rng);
  AdjointData d = run_adjoint(o, t, sys, g, obj);
  return {std::move(o), std::move(t), std::move(d)};
}

}  // namespace

TEST_CASE("shadowing covectors on the 21-dimensional solenoid") {
  auto sys = make_system("solenoid21");
  const Vector g = sys->default_gamma();
  const int n = 20, a = 40;
  const Pipeline p = pipeline(*sys, g, n, a, 3);
  for (SolverKind kind : {SolverKind::projection, SolverKind::least_squares}) {
    const ShadowingSolution s = solve_shadowing(p.adjoint, p.tangent, kind);
    CHECK(s.nu.continuity_residual() < 1e-8);
    CHECK(s.nu_tilde.continuity_residual() < 1e-8);
    // nu_n = f^* nu_{n+1} + dPhi_n inside each segment.
    double worst = 0.0;
    for (int k = 0; k < a; ++k) {
      for (int m = 0; m < n; ++m) {
        const Phase& x = p.orbit.at(k, m);
        const Vector r = s.nu.at(k, m) -
                         sys->jacobian_adjoint_apply(x, g, s.nu.at(k, m + 1)) -
                         sys->objective_gradient(x);
        worst = std::max(worst, r.norm());
      }
    }
    CHECK(worst < 1e-10 * s.nu.max_norm());
  }
}

TEST_CASE("shadowing covector stays bounded as the orbit doubles") {
  auto sys = make_system("solenoid21");
  const Vector g = sys->default_gamma();
  const Pipeline p1 = pipeline(*sys, g, 20, 100, 8);
  const Pipeline p2 = pipeline(*sys, g, 20, 200, 8);
  const double m1 = solve_shadowing(p1.adjoint, p1.tangent, SolverKind::projection).nu.max_norm();
  const double m2 = solve_shadowing(p2.adjoint, p2.tangent, SolverKind::projection).nu.max_norm();
  CHECK(std::abs(m2 - m1) < 0.1 * m1);
}

TEST_CASE("stable-linear shadowing covector is the geometric series") {
  auto lin = make_system("stable-linear");
  const int n = 20, a = 10;
  const Pipeline p = pipeline(*lin, Vector::Ones(1), n, a, 1);
  const ShadowingSolution s = solve_shadowing(p.adjoint, p.tangent, SolverKind::projection);
  CHECK(s.a[3].size() == 0);
  for (int k = 0; k < a - 3; ++k)
    for (int m = 0; m <= n; ++m) CHECK(std::abs(s.nu.at(k, m)[0] - 2.0) < 1e-10);
  for (int k = 0; k < a; ++k)
    for (int m = 0; m <= n; ++m) CHECK(s.nu.at(k, m) == p.adjoint.nu_prime(k, m));
}
