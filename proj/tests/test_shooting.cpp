#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pdp/rng.hpp"
#include "pdp/shooting.hpp"

using namespace pdp;

namespace {
ControlTrajectory constant_control(int m, int N, double value) {
  ControlTrajectory u(m, N);
  u.values.setConstant(value);
  return u;
}
}  // namespace

TEST_CASE("zero control keeps the velocity and drifts the position") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 50);
  const StateTrajectory x = simulate(md, grid, constant_control(1, 50, 0.0));
  for (int i = 0; i <= 50; ++i) CHECK(x.values(1, i) == 1.0);
  CHECK(x.values(0, 50) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("full braking approaches the closed-form endpoint") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 1000);
  const StateTrajectory x = simulate(md, grid, constant_control(1, 1000, -1.0));
  CHECK(std::abs(x.values(1, 1000) - 0.0) < 2e-3);
  CHECK(std::abs(x.values(0, 1000) - 0.5) < 2e-3);
}

TEST_CASE("free flying robot stays at a zero-thrust equilibrium") {
  const OcpModel md = make_free_flying_robot();
  const TimeGrid grid(md.t_f, 100);
  const StateTrajectory x = simulate(md, grid, constant_control(2, 100, 0.0));
  CHECK((x.terminal() - md.x0).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("residual values for the study data") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 1000);

  // u = 0: h = (r1, r2) = (1, 1) exactly in the discrete setting too
  const Residual h0 = residual(md, grid, constant_control(1, 1000, 0.0));
  CHECK(std::abs(h0[0] - 1.0) < 2e-3);
  CHECK(std::abs(h0[1] - 1.0) < 2e-3);

  // u = -1: exact limit (1/2, 0); Euler carries +1/(2N) on the first entry
  const Residual h1 = residual(md, grid, constant_control(1, 1000, -1.0));
  CHECK(std::abs(h1[0] - 0.5) < 2e-3);
  CHECK(std::abs(h1[1]) < 2e-3);

  // feasible variant: zero control is already on target
  const OcpModel rest = make_double_integrator(0.0, 0.0, 0.0, 0.0, 2.5);
  const Residual hr = residual(rest, grid, constant_control(1, 1000, 0.0));
  CHECK(hr.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("Euler error halves when the step halves") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  // braking control: exact h1 = 1/2, Euler error is exactly 1/(2N)
  const double e1 =
      std::abs(residual(md, TimeGrid(1.0, 500), constant_control(1, 500, -1.0))[0] - 0.5);
  const double e2 =
      std::abs(residual(md, TimeGrid(1.0, 1000), constant_control(1, 1000, -1.0))[0] - 0.5);
  CHECK(e1 / e2 > 1.7);
  CHECK(e1 / e2 < 2.3);

  // smooth control u = sin(t): exact terminal mismatches
  //   h1 = 2 - sin(1),  h2 = 2 - cos(1)
  const double exact_h0 = 2.0 - std::sin(1.0);
  const double exact_h1 = 2.0 - std::cos(1.0);
  double err[2];
  int idx = 0;
  for (const int N : {500, 1000}) {
    const TimeGrid grid(1.0, N);
    ControlTrajectory u(1, N);
    for (int j = 0; j < N; ++j) u.values(0, j) = std::sin(grid.node(j));
    const Residual h = residual(md, grid, u);
    CHECK(std::abs(h[0] - exact_h0) < 10.0 / N);
    CHECK(std::abs(h[1] - exact_h1) < 10.0 / N);
    err[idx++] = std::abs(h[0] - exact_h0);
  }
  CHECK(err[0] / err[1] > 1.7);
  CHECK(err[0] / err[1] < 2.3);
}

TEST_CASE("residual Jacobian of the double integrator is the known recursion") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const int N = 25;
  const TimeGrid grid(1.0, N);
  const Mat J = residual_jacobian(md, grid, constant_control(1, N, 0.3));
  for (int j = 0; j < N; ++j) {
    CHECK(J(1, j) == doctest::Approx(grid.dt).epsilon(1e-14));
    CHECK(J(0, j) == doctest::Approx(grid.dt * grid.dt * (N - 1 - j)).epsilon(1e-12));
  }
}

TEST_CASE("residual Jacobian matches central differences on both problems") {
  SplitMix64 rng(21);
  for (const auto& md : {make_double_integrator(0, 0, 1, 0, 2.5), make_free_flying_robot()}) {
    const int N = 50;
    const TimeGrid grid(md.t_f, N);
    for (int trial = 0; trial < 3; ++trial) {
      ControlTrajectory u(md.m, N);
      for (int j = 0; j < N; ++j)
        for (int r = 0; r < md.m; ++r)
          u.values(r, j) = rng.uniform(md.bounds.lower[r], md.bounds.upper[r]);
      const Mat J = residual_jacobian(md, grid, u);
      for (int comp = 0; comp < md.n; ++comp) {
        auto f = [&](const Vec& flat) {
          ControlTrajectory uu(md.m, N);
          uu.values = Eigen::Map<const Mat>(flat.data(), md.m, N);
          return residual(md, grid, uu)[comp];
        };
        const Vec flat = Eigen::Map<const Vec>(u.values.data(), u.values.size());
        const Vec fd = oracle::central_difference_gradient(f, flat, 1e-6);
        CHECK((J.row(comp).transpose() - fd).lpNorm<Eigen::Infinity>() < 1e-6);
      }
    }
  }
}

TEST_CASE("adjoint transpose products agree with the assembled Jacobian") {
  const OcpModel md = make_free_flying_robot();
  const int N = 40;
  const TimeGrid grid(md.t_f, N);
  SplitMix64 rng(5);
  ControlTrajectory u(2, N);
  for (int j = 0; j < N; ++j) {
    u.values(0, j) = rng.uniform(-0.8, 0.8);
    u.values(1, j) = rng.uniform(-0.4, 0.4);
  }
  const StateTrajectory xs = simulate(md, grid, u);
  const Mat J = residual_jacobian(md, grid, u);
  const Mat JT = residual_jacobian_transpose(md, grid, u, xs);
  CHECK((JT - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Vec w(6);
  for (int i = 0; i < 6; ++i) w[i] = rng.uniform(-1, 1);
  const Vec prod = residual_jacobian_transpose_product(md, grid, u, xs, w);
  CHECK((prod - J.transpose() * w).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("double integrator residual is affine in the control") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 30);
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    ControlTrajectory u1(1, 30), u2(1, 30), mix(1, 30);
    for (int j = 0; j < 30; ++j) {
      u1.values(0, j) = rng.uniform(-2.5, 2.5);
      u2.values(0, j) = rng.uniform(-2.5, 2.5);
    }
    const double a = rng.uniform(0, 1);
    mix.values = a * u1.values + (1 - a) * u2.values;
    const Vec lhs = residual(md, grid, mix);
    const Vec rhs = a * residual(md, grid, u1) + (1 - a) * residual(md, grid, u2);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("divergent dynamics raise the dedicated error") {
  OcpModel blow = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  blow.dynamics = [](const Vec& x, const Vec&, Vec& out) {
    out[0] = 1e300 * (1.0 + x[0] * x[0]);
    out[1] = 1e300 * (1.0 + x[1] * x[1]);
  };
  const TimeGrid grid(1.0, 10);
  CHECK_THROWS_AS(simulate(blow, grid, ControlTrajectory(1, 10)), SimulationDiverged);
}

TEST_CASE("dimension mismatches are rejected") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 10);
  CHECK_THROWS_AS(simulate(md, grid, ControlTrajectory(1, 9)), std::invalid_argument);
  CHECK_THROWS_AS(simulate(md, grid, ControlTrajectory(2, 10)), std::invalid_argument);
}
