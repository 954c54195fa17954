#pragma once

#include <cstdint>

#include "pdp/driver.hpp"

namespace pdp {

struct SweepPoint {
  double c = 0.0;
  double q = 0.0;
  double phi = 0.0;
  double h_l1 = 0.0;
  bool inner_converged = true;
  ControlTrajectory u;
};

/// Evaluate the dual function over an increasing penalty grid, warm-starting
/// each solve from the previous minimizer. Inner failures are recorded and
/// the sweep continues.
std::vector<SweepPoint> dual_sweep(const OcpModel& model, const TimeGrid& grid,
                                   const std::vector<double>& c_values, const InnerConfig& inner);

struct NSweepEntry {
  int N = 0;
  bool converged = false;
  int outer_iterations = 0;
  double dist_to_reference = 0.0;  // sup norm after nearest-node resampling
  Vec dist_per_channel;
  ControlTrajectory u;
};

struct NSweepReport {
  int reference_N = 0;
  std::vector<NSweepEntry> entries;  // all but the reference grid
  ControlTrajectory reference_u;
};

/// Run PDP per grid size and report sup-norm distances of each solution to
/// the largest-N solution under nearest-node resampling.
NSweepReport n_sweep(const OcpModel& model, const std::vector<int>& N_values,
                     const PdpConfig& cfg);

struct RunRecord {
  int run_index = 0;
  bool converged = false;
  int outer_iterations = 0;
  double phi = 0.0;
  double h_linf = 0.0;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::vector<RunRecord> runs;
  double success_rate = 0.0;       // percent
  double mean_time_success = 0.0;  // seconds, over converged runs
  double mean_time_all = 0.0;
};

/// Repeated PDP runs from uniform random control initializations drawn with a
/// counter-based generator (seed, run index). Runs may execute on `threads`
/// workers; records are ordered by run index regardless of scheduling.
ExperimentReport success_rate_study(const OcpModel& model, const TimeGrid& grid, int runs,
                                    std::uint64_t seed, double init_lo, double init_hi,
                                    const PdpConfig& cfg, int threads = 1);

struct BaselineConfig {
  double c_big = 100.0;  // single fixed penalty weight
  InnerConfig inner;
  double eps = 1e-6;
  std::uint64_t seed = 1;
  double init_lo = -0.4, init_hi = 0.4;  // states and controls
};

struct BaselineRecord {
  bool converged = false;
  double phi = 0.0;
  double dyn_residual_inf = 0.0;
  double seconds = 0.0;
  long unknown_count = 0;  // n(N+1) + mN
  int iterations = 0;
};

/// Full-transcription comparison solve: all node states and controls are
/// unknowns, dynamics and boundary conditions are l1-penalized equality
/// residuals, solved once at c_big with the same smoothing machinery.
BaselineRecord baseline_full_transcription(const OcpModel& model, const TimeGrid& grid,
                                           const BaselineConfig& cfg);

/// Per-iteration controls of a PDP run. Requires keep_history in PdpConfig.
std::vector<ControlTrajectory> iterate_dump(const PdpResult& result);

/// Uniform random control trajectory from the counter-based stream.
ControlTrajectory random_control(int m, int N, std::uint64_t seed, double lo, double hi);

}  // namespace pdp
