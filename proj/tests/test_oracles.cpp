#include <doctest.h>

#include "oracles.hpp"

using namespace pdp;
using namespace pdp::oracle;

// Paper boundary data: s0 = 0, sf = 0, v0 = 1, vf = 0, a = 2.5.
// Closed form of the continuous optimum, derived by hand from the two
// boundary integrals of the clipped-affine family:
//   c1 = 25/sqrt(3), c2 = -17.5/sqrt(3),
//   junctions at 0.7 -/+ sqrt(3)/10.
TEST_CASE("continuous junction solve reproduces the closed form") {
  const ClippedAffine sol = double_integrator_continuous(0.0, 0.0, 1.0, 0.0, 2.5);
  CHECK(sol.c1 == doctest::Approx(14.433756729740645).epsilon(1e-9));
  CHECK(sol.c2 == doctest::Approx(-10.103629710818451).epsilon(1e-9));
  CHECK(sol.lower_junction() == doctest::Approx(0.5267949192431123).epsilon(1e-9));
  CHECK(sol.upper_junction() == doctest::Approx(0.8732050807568877).epsilon(1e-9));
  CHECK(sol.control(0.0) == -2.5);
  CHECK(sol.control(1.0) == 2.5);
  CHECK(sol.control(0.7) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("continuous solve satisfies the boundary integrals") {
  const ClippedAffine sol = double_integrator_continuous(0.0, 0.0, 1.0, 0.0, 2.5);
  // high-resolution trapezoid check of int u = -1 and int (1-t) u = -1
  const int M = 200000;
  double iv = 0.0, ip = 0.0;
  for (int i = 0; i < M; ++i) {
    const double t0 = static_cast<double>(i) / M, t1 = static_cast<double>(i + 1) / M;
    const double u0 = sol.control(t0), u1 = sol.control(t1);
    iv += 0.5 * (u0 + u1) / M;
    ip += 0.5 * ((1 - t0) * u0 + (1 - t1) * u1) / M;
  }
  CHECK(iv == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(ip == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("discrete junction solve at N=1000 matches frozen values") {
  // frozen from an independent computation of the Euler/rectangle optimum
  const ClippedAffine sol = double_integrator_discrete(0.0, 0.0, 1.0, 0.0, 2.5, 1000);
  CHECK(sol.c1 == doctest::Approx(14.580259374272096).epsilon(1e-7));
  CHECK(sol.c2 == doctest::Approx(-10.19889143230333).epsilon(1e-7));
}

TEST_CASE("discrete constants approach the continuous ones at O(1/N)") {
  const ClippedAffine cont = double_integrator_continuous(0.0, 0.0, 1.0, 0.0, 2.5);
  const ClippedAffine d1 = double_integrator_discrete(0.0, 0.0, 1.0, 0.0, 2.5, 500);
  const ClippedAffine d2 = double_integrator_discrete(0.0, 0.0, 1.0, 0.0, 2.5, 1000);
  const double e1 = std::abs(d1.c1 - cont.c1);
  const double e2 = std::abs(d2.c1 - cont.c1);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("unconstrained boundary data reduces to the affine solution") {
  // with a large bound the clip never engages and u = 6t - 4
  const ClippedAffine sol = double_integrator_continuous(0.0, 0.0, 1.0, 0.0, 50.0);
  CHECK(sol.c1 == doctest::Approx(6.0).epsilon(1e-7));
  CHECK(sol.c2 == doctest::Approx(-4.0).epsilon(1e-7));
}

TEST_CASE("central difference gradient matches an analytic quadratic") {
  const Vec x = (Vec(3) << 1.0, -2.0, 0.5).finished();
  auto f = [](const Vec& v) { return 0.5 * v.squaredNorm() + v[0] * v[1]; };
  const Vec g = central_difference_gradient(f, x, 1e-6);
  CHECK(g[0] == doctest::Approx(x[0] + x[1]).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(x[1] + x[0]).epsilon(1e-8));
  CHECK(g[2] == doctest::Approx(x[2]).epsilon(1e-8));
}
