#pragma once

#include <vector>

#include "pdp/inner.hpp"

namespace pdp {

/// Step-size interval [eta_k, beta_k] for the dual update. Type1 takes
/// eta_k = min(eta, ||h||_2), beta_k = max(beta, ||h||_1 + ||h||_2); Type2
/// takes eta_k = theta_k/||h||_1, beta_k = beta/||h||_1. `pick` selects
/// s_k = (1-pick)*eta_k + pick*beta_k.
struct StepRule {
  enum class Kind { Type1, Type2 };
  Kind kind = Kind::Type2;
  double eta = 0.1;   // Type1 floor
  double beta = 3.0;  // Type1 cap seed / Type2 numerator cap
  std::vector<double> theta_schedule;  // Type2; empty means theta_k = 1
  double pick = 0.5;

  static StepRule type1(double eta, double beta, double pick = 0.5);
  static StepRule type2(double beta, double theta = 1.0, double pick = 0.5);

  double theta(int k) const;
  void validate() const;
};

struct PdpConfig {
  double c0 = 1.0;
  double alpha = 1.0;  // constant alpha_k
  double eps = 1e-6;   // feasibility tolerance on ||h||_inf
  int max_outer = 100;
  StepRule step_rule;
  InnerConfig inner;
  bool keep_history = false;  // retain per-iteration controls

  void validate() const;
};

enum class PdpStatus { Converged, MaxOuterReached, InnerFailed };

struct PdpIterate {
  int k = 0;
  double c = 0.0;
  double s = 0.0;        // 0 when no dual update was taken (stopping iterate)
  double s_tilde = 0.0;
  double q = 0.0;        // exact Lagrangian value at u_k
  double phi = 0.0;
  double h_l1 = 0.0;
  double h_l2 = 0.0;
  double h_linf = 0.0;
  bool inner_converged = true;
};

struct PdpResult {
  PdpStatus status = PdpStatus::MaxOuterReached;
  std::vector<PdpIterate> iterates;
  ControlTrajectory final_u;
  StateTrajectory final_states;
  std::vector<ControlTrajectory> control_history;  // filled when keep_history
};

/// s_k for the given rule and residual norms (h_l1, h_l2). Type2 requires
/// h_l1 > 0; the caller stops on feasibility before stepping.
double step_size(const StepRule& rule, int k, double h_l1, double h_l2);

/// Outer loop: solve the subproblem at c_k (warm started), stop when
/// ||h(u_k)||_inf < eps, otherwise c_{k+1} = c_k + (alpha_k + 1) s_k ||h(u_k)||_1.
PdpResult pdp_run(const OcpModel& model, const TimeGrid& grid, const PdpConfig& cfg,
                  const ControlTrajectory& u_init);

/// (c_k, q_k) pairs in iteration order.
std::vector<std::pair<double, double>> dual_value_history(const PdpResult& result);

}  // namespace pdp
