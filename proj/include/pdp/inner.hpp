#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pdp/shooting.hpp"

namespace pdp {

/// Settings for one penalized subproblem solve.
struct InnerConfig {
  std::vector<double> mu_schedule = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  double grad_tol = 1e-8;
  int max_iter = 1000;  // per smoothing level
  int memory = 10;
  int restarts = 4;  // multi-starts, used for nonconvex models only
  double perturbation = 0.25;  // multi-start spread, fraction of the box
  bool include_zero_start = false;  // devote one restart to the zero control
  std::uint64_t seed = 1;

  void validate() const;
};

struct InnerResult {
  ControlTrajectory u_star;
  double lagrangian_value = 0.0;  // exact phi + c*||h||_1 at u_star
  double phi_value = 0.0;
  Residual residual;
  bool converged = false;     // scaled KKT residual met the strict tolerance
  bool acceptable = false;    // within 1e3 x strict; usable by the outer loop
  double stationarity = 0.0;  // final scaled KKT residual
  int inner_iterations = 0;
};

/// Huber smoothing of |r| with knee mu: r^2/(2 mu) inside, |r| - mu/2 outside.
inline double huber(double r, double mu) {
  const double a = std::abs(r);
  return a <= mu ? r * r / (2.0 * mu) : a - 0.5 * mu;
}
inline double huber_prime(double r, double mu) {
  if (std::abs(r) <= mu) return r / mu;
  return r > 0.0 ? 1.0 : -1.0;
}

/// Exact penalized value phi(u) + c * ||h(u)||_1.
double lagrangian_value(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u,
                        double c);

/// Discrete cost phi(u) = dt * sum_j f0(u_j).
double discrete_cost(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u);

/// Huber-smoothed Lagrangian and its gradient over the flattened controls
/// (index j*m + r). The smoothed value lies in [exact - n*mu/2, exact].
std::pair<double, Vec> smoothed_lagrangian_and_gradient(const OcpModel& model,
                                                        const TimeGrid& grid,
                                                        const ControlTrajectory& u, double c,
                                                        double mu);

/// Minimize phi(u) + c*||h(u)||_1 over the box by smoothing continuation with
/// projected L-BFGS. Nonconvex models run `restarts` perturbed warm starts and
/// keep the best exact value (ties broken by lower phi, then restart index).
InnerResult inner_solve(const OcpModel& model, const TimeGrid& grid, double c,
                        const ControlTrajectory& warm_start, const InnerConfig& cfg);

}  // namespace pdp
