#include "pdp/shooting.hpp"

namespace pdp {

namespace {
void check_dims(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u) {
  if (u.m() != model.m || u.N() != grid.N)
    throw std::invalid_argument("control trajectory dimensions do not match model/grid");
}
}  // namespace

StateTrajectory simulate(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u) {
  check_dims(model, grid, u);
  StateTrajectory traj(model.n, grid.N);
  traj.values.col(0) = model.x0;
  Vec f(model.n);
  for (int i = 0; i < grid.N; ++i) {
    model.dynamics(traj.values.col(i), u.values.col(i), f);
    traj.values.col(i + 1) = traj.values.col(i) + grid.dt * f;
    if (!traj.values.col(i + 1).allFinite())
      throw SimulationDiverged("simulate: non-finite state at node " + std::to_string(i + 1));
  }
  return traj;
}

Residual residual(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u) {
  return simulate(model, grid, u).terminal() - model.xf;
}

Mat residual_jacobian(const OcpModel& model, const TimeGrid& grid, const ControlTrajectory& u) {
  check_dims(model, grid, u);
  const StateTrajectory traj = simulate(model, grid, u);
  const int n = model.n, m = model.m, N = grid.N;
  Mat S = Mat::Zero(n, m * N);
  Mat A(n, n), B(n, m);
  for (int i = 0; i < N; ++i) {
    model.dynamics_jac_x(traj.values.col(i), u.values.col(i), A);
    model.dynamics_jac_u(traj.values.col(i), u.values.col(i), B);
    // S <- (I + dt A) S over the already-touched column blocks
    S.leftCols(m * i) += grid.dt * A * S.leftCols(m * i);
    S.middleCols(m * i, m) = grid.dt * B;
  }
  return S;
}

Vec residual_jacobian_transpose_product(const OcpModel& model, const TimeGrid& grid,
                                        const ControlTrajectory& u, const StateTrajectory& states,
                                        const Vec& w) {
  check_dims(model, grid, u);
  if (w.size() != model.n) throw std::invalid_argument("adjoint weight dimension mismatch");
  const int n = model.n, m = model.m, N = grid.N;
  Vec g(m * N);
  Vec p = w;
  Mat A(n, n), B(n, m);
  for (int i = N - 1; i >= 0; --i) {
    model.dynamics_jac_x(states.values.col(i), u.values.col(i), A);
    model.dynamics_jac_u(states.values.col(i), u.values.col(i), B);
    g.segment(m * i, m) = grid.dt * B.transpose() * p;
    p += grid.dt * A.transpose() * p;
  }
  return g;
}

Mat residual_jacobian_transpose(const OcpModel& model, const TimeGrid& grid,
                                const ControlTrajectory& u, const StateTrajectory& states) {
  check_dims(model, grid, u);
  const int n = model.n, m = model.m, N = grid.N;
  Mat JT(static_cast<Eigen::Index>(m) * N, n);
  Mat P = Mat::Identity(n, n);
  Mat A(n, n), B(n, m);
  for (int i = N - 1; i >= 0; --i) {
    model.dynamics_jac_x(states.values.col(i), u.values.col(i), A);
    model.dynamics_jac_u(states.values.col(i), u.values.col(i), B);
    JT.middleRows(static_cast<Eigen::Index>(m) * i, m) = grid.dt * B.transpose() * P;
    P += grid.dt * A.transpose() * P;
  }
  return JT;
}

}  // namespace pdp
