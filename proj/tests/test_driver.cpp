#include <doctest.h>

#include <cmath>

#include "pdp/driver.hpp"

using namespace pdp;

TEST_CASE("type 1 step size formula") {
  const StepRule r1 = StepRule::type1(0.1, 1.0, 0.5);
  // eta_k = min(0.1, 0.05) = 0.05, beta_k = max(1, 0.13) = 1 -> midpoint 0.525
  CHECK(step_size(r1, 0, 0.08, 0.05) == doctest::Approx(0.525).epsilon(1e-14));
  // whenever ||h||_2 >= eta and ||h||_1 + ||h||_2 <= beta the paper's fixed
  // interval [0.1, 1] applies and the midpoint is 0.55
  CHECK(step_size(r1, 0, 0.4, 0.3) == doctest::Approx(0.55).epsilon(1e-14));
  CHECK(step_size(r1, 3, 0.2, 0.15) == doctest::Approx(0.55).epsilon(1e-14));
}

TEST_CASE("type 2 step size keeps the dual increment in range") {
  const StepRule r2 = StepRule::type2(3.0, 1.0, 0.5);
  // s_k * ||h||_1 = (1-pick) theta + pick beta, independent of h
  for (const double h1 : {0.3, 1.7, 42.0}) {
    const double s = step_size(r2, 0, h1, h1 / 2.0);
    CHECK(s * h1 == doctest::Approx(2.0).epsilon(1e-12));
    // with alpha = 1 the increment (alpha+1) s ||h||_1 = 4, inside [2, 6]
  }
  const StepRule lo = StepRule::type2(3.0, 1.0, 0.0);
  const StepRule hi = StepRule::type2(3.0, 1.0, 1.0);
  CHECK(step_size(lo, 0, 2.0, 1.0) * 2.0 == doctest::Approx(1.0));
  CHECK(step_size(hi, 0, 2.0, 1.0) * 2.0 == doctest::Approx(3.0));
  CHECK_THROWS_AS(step_size(r2, 0, 0.0, 0.0), std::logic_error);
}

TEST_CASE("rule validation") {
  CHECK_THROWS_AS(StepRule::type1(1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(StepRule::type1(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(StepRule::type2(0.0), std::invalid_argument);
  CHECK_THROWS_AS(StepRule::type2(1.0, 2.0), std::invalid_argument);  // theta > beta
  CHECK_THROWS_AS(StepRule::type1(0.1, 1.0, 1.5), std::invalid_argument);
  PdpConfig bad;
  bad.c0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = PdpConfig{};
  bad.eps = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("paper run: type 2 on the double integrator") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 1000);
  PdpConfig cfg;
  cfg.step_rule = StepRule::type2(3.0, 1.0, 0.5);
  cfg.alpha = 1.0;
  cfg.c0 = 1.0;
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(1, 1000));

  CHECK(res.status == PdpStatus::Converged);
  CHECK(res.iterates.size() >= 4);
  CHECK(res.iterates.size() <= 6);
  CHECK(res.iterates.back().h_linf < 1e-6);

  // strictly increasing penalty weights, exact update identity
  for (std::size_t k = 0; k + 1 < res.iterates.size(); ++k) {
    CHECK(res.iterates[k + 1].c > res.iterates[k].c);
    const double expect = res.iterates[k].c + res.iterates[k].s_tilde * res.iterates[k].h_l1;
    CHECK(res.iterates[k + 1].c == expect);
    CHECK(res.iterates[k].s_tilde == 2.0 * res.iterates[k].s);
  }
  // dual values do not decrease (within inner tolerance)
  for (std::size_t k = 0; k + 1 < res.iterates.size(); ++k)
    CHECK(res.iterates[k + 1].q >= res.iterates[k].q - 1e-6);
}

TEST_CASE("feasible start stops immediately") {
  const OcpModel rest = make_double_integrator(0.0, 0.0, 0.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 100);
  PdpConfig cfg;
  const PdpResult res = pdp_run(rest, grid, cfg, ControlTrajectory(1, 100));
  CHECK(res.status == PdpStatus::Converged);
  CHECK(res.iterates.size() == 1);
  CHECK(res.iterates[0].c == cfg.c0);
  CHECK(res.iterates[0].s == 0.0);
  CHECK(dual_value_history(res).size() == 1);
}

TEST_CASE("penalty plateau beyond the exact threshold") {
  // re-solving at 10x the final weight leaves the cost essentially unchanged
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 200);
  PdpConfig cfg;
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(1, 200));
  REQUIRE(res.status == PdpStatus::Converged);
  const double c_final = res.iterates.back().c;
  const InnerResult big = inner_solve(md, grid, 10.0 * c_final, res.final_u, cfg.inner);
  CHECK(std::abs(big.phi_value - res.iterates.back().phi) <
        1e-4 * (1.0 + std::abs(big.phi_value)));
}

TEST_CASE("dual history round trip") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 150);
  PdpConfig cfg;
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(1, 150));
  const auto hist = dual_value_history(res);
  REQUIRE(hist.size() == res.iterates.size());
  for (std::size_t k = 0; k < hist.size(); ++k) {
    CHECK(hist[k].first == res.iterates[k].c);
    CHECK(hist[k].second == res.iterates[k].q);
  }
  PdpResult empty;
  CHECK_THROWS_AS(dual_value_history(empty), std::invalid_argument);
}

TEST_CASE("history retention is opt-in") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 120);
  PdpConfig cfg;
  cfg.keep_history = true;
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(1, 120));
  CHECK(res.control_history.size() == res.iterates.size());
  // first retained iterate is the c0 subproblem solution
  const InnerResult direct = inner_solve(md, grid, cfg.c0, ControlTrajectory(1, 120), cfg.inner);
  CHECK((res.control_history[0].values - direct.u_star.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inner failure surfaces as a status") {
  // starve the inner solver so it cannot reach any tolerance
  const OcpModel md = make_free_flying_robot();
  const TimeGrid grid(md.t_f, 20);
  PdpConfig cfg;
  cfg.inner.max_iter = 1;
  cfg.inner.mu_schedule = {1e-8};
  cfg.inner.restarts = 1;
  cfg.max_outer = 3;
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(2, 20));
  CHECK(res.status == PdpStatus::InnerFailed);
  CHECK(!res.iterates.empty());
  CHECK_FALSE(res.iterates.back().inner_converged);
}

TEST_CASE("max outer cap is respected") {
  const OcpModel md = make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  const TimeGrid grid(1.0, 100);
  PdpConfig cfg;
  cfg.max_outer = 2;  // cannot reach c* in two increments of 4
  const PdpResult res = pdp_run(md, grid, cfg, ControlTrajectory(1, 100));
  CHECK(res.status == PdpStatus::MaxOuterReached);
  CHECK(res.iterates.size() == 2);
}
