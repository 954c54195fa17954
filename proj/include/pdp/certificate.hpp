#pragma once

#include <string>
#include <vector>

#include "pdp/shooting.hpp"

namespace pdp {

/// First-order optimality evidence for a computed control: reconstructed
/// adjoints, switching functions, and the worst deviation from the clipped
/// control law.
struct Certificate {
  Mat adjoints;   // n x (N+1), lambda_p(t_i)
  Mat switching;  // m x N, psi_r(t_j)
  double max_clip_violation = 0.0;
  double hamiltonian_min = 0.0;
  double hamiltonian_max = 0.0;
  std::vector<std::string> constant_names;
  Vec fitted_constants;
  double fit_residual_rms = 0.0;  // over interior-arc nodes
  bool inconclusive = false;
};

/// Saturated control law: -psi clamped to [-bound, bound].
double clip_law(double psi, double bound);

/// Nodewise Hamiltonian values with the normal multiplier set to 1. The
/// terminal node reuses the last control interval's value.
Vec hamiltonian_profile(const ControlTrajectory& u, const StateTrajectory& states,
                        const Mat& adjoints, const OcpModel& model, const TimeGrid& grid);

/// Double integrator: fit u_j = c1 t_j + c2 on interior-arc nodes (where the
/// law gives u = -lambda_2), rebuild lambda_2 = -c1 t - c2, and measure the
/// clip-law violation. Throws when fewer than two interior nodes exist.
Certificate certify_double_integrator(const ControlTrajectory& u, const TimeGrid& grid,
                                      const OcpModel& model);

/// Free-flying robot: the maximum principle forces lambda_1 = c1, lambda_2 = c2,
/// lambda_4 = -c1 t + c4, lambda_5 = -c2 t + c5, with lambda_3, lambda_6 solving
/// linear ODEs driven by the computed (x, u). The switching values are linear in
/// the six constants (c1, c2, c4, c5, lambda_3(0), lambda_6(0)), so the
/// interior-arc consistency fit is solved exactly as a least-squares problem.
/// A large fit residual sets the inconclusive flag instead of throwing.
Certificate certify_free_flying_robot(const ControlTrajectory& u, const TimeGrid& grid,
                                      const OcpModel& model);

}  // namespace pdp
