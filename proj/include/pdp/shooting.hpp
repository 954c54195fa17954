#pragma once

#include "pdp/grid.hpp"
#include "pdp/model.hpp"

namespace pdp {

/// Terminal boundary-condition mismatch h(u), one entry per terminal condition.
using Residual = Vec;

struct SimulationDiverged : std::runtime_error {
  explicit SimulationDiverged(const std::string& what) : std::runtime_error(what) {}
};

/// Forward explicit Euler: x_{i+1} = x_i + dt * f(x_i, u_i), x_0 = model.x0.
StateTrajectory simulate(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u);

/// h(u) = x(t_f; u) - xf for the simulated trajectory.
Residual residual(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u);

/// Exact Jacobian of the discrete residual, n x (m*N), by forward sensitivity
/// propagation S_{i+1} = (I + dt A_i) S_i + dt B_i. Column block j covers the
/// controls of interval j (flattened column-major, index j*m + r).
Mat residual_jacobian(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u);

/// J(u)^T w without materializing the Jacobian (backward adjoint sweep).
/// `states` must come from simulate() with the same (model, grid, u).
/// Result is laid out like the flattened control vector (m*N).
Vec residual_jacobian_transpose_product(const OcpModel& model, const TimeGrid& grid,
                                        const ControlTrajectory& u, const StateTrajectory& states,
                                        const Vec& w);

/// Full J(u)^T, (m*N) x n, from one backward sweep with matrix adjoints.
Mat residual_jacobian_transpose(const OcpModel& model, const TimeGrid& grid,
                                const ControlTrajectory& u, const StateTrajectory& states);

}  // namespace pdp
