#include "pdp/certificate.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace pdp {

double clip_law(double psi, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("clip_law: bound must be positive");
  return std::clamp(-psi, -bound, bound);
}

Vec hamiltonian_profile(const ControlTrajectory& u, const StateTrajectory& states,
                        const Mat& adjoints, const OcpModel& model, const TimeGrid& grid) {
  if (states.N() != grid.N || u.N() != grid.N || adjoints.cols() != grid.N + 1)
    throw std::invalid_argument("hamiltonian_profile: dimension mismatch");
  Vec H(grid.N + 1), f(model.n);
  for (int i = 0; i <= grid.N; ++i) {
    const int j = std::min(i, grid.N - 1);
    model.dynamics(states.values.col(i), u.values.col(j), f);
    H[i] = model.cost_integrand(u.values.col(j)) + adjoints.col(i).dot(f);
  }
  return H;
}

namespace {

void fill_hamiltonian_range(Certificate& cert, const ControlTrajectory& u,
                            const StateTrajectory& states, const OcpModel& model,
                            const TimeGrid& grid) {
  const Vec H = hamiltonian_profile(u, states, cert.adjoints, model, grid);
  cert.hamiltonian_min = H.minCoeff();
  cert.hamiltonian_max = H.maxCoeff();
}

}  // namespace

Certificate certify_double_integrator(const ControlTrajectory& u, const TimeGrid& grid,
                                      const OcpModel& model) {
  if (model.tag != "double_integrator")
    throw std::invalid_argument("certify_double_integrator: wrong model");
  const double a = model.bounds.upper[0];
  const double tol_arc = 1e-3 * a;
  const int N = grid.N;

  std::vector<int> interior;
  for (int j = 0; j < N; ++j)
    if (std::abs(u.values(0, j)) < a - tol_arc) interior.push_back(j);
  if (interior.size() < 2)
    throw std::runtime_error("certify_double_integrator: fewer than two interior-arc nodes");

  // least squares u_j = c1 t_j + c2 on the interior arc
  Mat A(interior.size(), 2);
  Vec b(interior.size());
  for (std::size_t r = 0; r < interior.size(); ++r) {
    A(r, 0) = grid.node(interior[r]);
    A(r, 1) = 1.0;
    b[r] = u.values(0, interior[r]);
  }
  const Vec coef = A.colPivHouseholderQr().solve(b);
  const double c1 = coef[0], c2 = coef[1];

  Certificate cert;
  cert.constant_names = {"c1", "c2"};
  cert.fitted_constants = coef;
  cert.fit_residual_rms = std::sqrt((A * coef - b).squaredNorm() / static_cast<double>(b.size()));

  cert.adjoints = Mat(2, N + 1);
  cert.switching = Mat(1, N);
  for (int i = 0; i <= N; ++i) {
    cert.adjoints(0, i) = c1;
    cert.adjoints(1, i) = -c1 * grid.node(i) - c2;
  }
  double viol = 0.0;
  for (int j = 0; j < N; ++j) {
    cert.switching(0, j) = cert.adjoints(1, j);
    viol = std::max(viol, std::abs(u.values(0, j) - clip_law(cert.switching(0, j), a)));
  }
  cert.max_clip_violation = viol;
  cert.inconclusive = cert.fit_residual_rms > 1e-2 * a;

  fill_hamiltonian_range(cert, u, simulate(model, grid, u), model, grid);
  return cert;
}

namespace {

/// Adjoints of the free-flying robot for constants
/// theta = (c1, c2, c4, c5, lambda3_0, lambda6_0), given the (x, u) pair.
/// lambda_3 and lambda_6 are integrated by forward Euler on the grid.
Mat ffr_adjoints(const Vec& theta, const ControlTrajectory& u, const StateTrajectory& states,
                 const TimeGrid& grid) {
  const int N = grid.N;
  const double c1 = theta[0], c2 = theta[1], c4 = theta[2], c5 = theta[3];
  Mat lam(6, N + 1);
  lam(2, 0) = theta[4];
  lam(5, 0) = theta[5];
  for (int i = 0; i <= N; ++i) {
    const double t = grid.node(i);
    lam(0, i) = c1;
    lam(1, i) = c2;
    lam(3, i) = -c1 * t + c4;
    lam(4, i) = -c2 * t + c5;
    if (i < N) {
      const double x3 = states.values(2, i);
      const double thrust = u.values(0, i) + u.values(1, i);
      const double dl3 = lam(3, i) * thrust * std::sin(x3) - lam(4, i) * thrust * std::cos(x3);
      lam(2, i + 1) = lam(2, i) + grid.dt * dl3;
      lam(5, i + 1) = lam(5, i) - grid.dt * lam(2, i);
    }
  }
  return lam;
}

Mat ffr_switching(const Mat& lam, const StateTrajectory& states, const TimeGrid& grid) {
  const int N = grid.N;
  Mat psi(2, N);
  for (int j = 0; j < N; ++j) {
    const double x3 = states.values(2, j);
    const double base = lam(3, j) * std::cos(x3) + lam(4, j) * std::sin(x3);
    psi(0, j) = 0.5 * (base + 0.2 * lam(5, j));
    psi(1, j) = 0.5 * (base - 0.2 * lam(5, j));
  }
  return psi;
}

}  // namespace

Certificate certify_free_flying_robot(const ControlTrajectory& u, const TimeGrid& grid,
                                      const OcpModel& model) {
  if (model.tag != "free_flying_robot")
    throw std::invalid_argument("certify_free_flying_robot: wrong model");
  const int N = grid.N;
  const StateTrajectory states = simulate(model, grid, u);

  std::vector<std::pair<int, int>> interior;  // (channel, interval)
  for (int r = 0; r < 2; ++r) {
    const double bound = model.bounds.upper[r];
    for (int j = 0; j < N; ++j)
      if (std::abs(u.values(r, j)) < bound - 1e-3 * bound) interior.emplace_back(r, j);
  }

  Certificate cert;
  cert.constant_names = {"c1", "c2", "c4", "c5", "lambda3_0", "lambda6_0"};

  // psi is linear in theta: assemble the interior-arc design matrix from the
  // six unit responses and solve u_interior + Phi theta = 0 in least squares.
  Mat Phi(interior.size(), 6);
  Vec rhs(interior.size());
  for (int e = 0; e < 6; ++e) {
    const Mat psi_e = ffr_switching(ffr_adjoints(Vec::Unit(6, e), u, states, grid), states, grid);
    for (std::size_t row = 0; row < interior.size(); ++row)
      Phi(row, e) = psi_e(interior[row].first, interior[row].second);
  }
  for (std::size_t row = 0; row < interior.size(); ++row)
    rhs[row] = -u.values(interior[row].first, interior[row].second);

  Vec theta = Vec::Zero(6);
  if (interior.size() >= 6) theta = Phi.colPivHouseholderQr().solve(rhs);

  cert.fitted_constants = theta;
  cert.adjoints = ffr_adjoints(theta, u, states, grid);
  cert.switching = ffr_switching(cert.adjoints, states, grid);
  cert.fit_residual_rms =
      interior.empty()
          ? 0.0
          : std::sqrt((Phi * theta - rhs).squaredNorm() / static_cast<double>(interior.size()));

  double viol = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < N; ++j)
      viol = std::max(viol, std::abs(u.values(r, j) -
                                     clip_law(cert.switching(r, j), model.bounds.upper[r])));
  cert.max_clip_violation = viol;
  cert.inconclusive = cert.fit_residual_rms > 0.05 * model.bounds.upper.maxCoeff();

  fill_hamiltonian_range(cert, u, states, model, grid);
  return cert;
}

}  // namespace pdp
