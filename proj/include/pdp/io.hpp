#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pdp/certificate.hpp"
#include "pdp/experiments.hpp"

namespace pdp {

/// 17-significant-digit decimal formatting; round-trips doubles bit-exactly.
std::string format_double(double v);

/// FNV-1a hash of a canonical config string, as 16 hex digits.
std::string config_hash(const std::string& canonical);

/// Declarative run configuration consumed by the CLI. Unknown keys are
/// rejected on load; numeric constraints are revalidated by the wrapped
/// config types when the run is assembled.
struct RunConfig {
  std::string model = "double_integrator";
  double s0 = 0.0, sf = 0.0, v0 = 1.0, vf = 0.0, a = 2.5;  // double-integrator data
  int N = 1000;
  int step_rule = 2;
  double eta = 0.1;
  std::optional<double> beta;   // default depends on rule and model
  std::optional<double> alpha;  // likewise
  double theta = 1.0;
  double pick = 0.5;
  double c0 = 1.0;
  double eps = 1e-6;
  int max_outer = 100;
  std::vector<double> mu_schedule;  // empty: inner default
  double grad_tol = 1e-8;
  int max_iter = 1000;
  int memory = 10;
  int restarts = 4;
  std::uint64_t seed = 1;
  bool keep_history = false;
  std::string out;
  int threads = 1;
  // experiment selection
  std::string kind;  // success_rate | n_sweep | dual_sweep | iterate_dump | baseline
  int runs = 20;
  std::vector<double> c_values;
  std::vector<int> N_values;
  double init_lo = -0.4, init_hi = 0.4;
  double baseline_c = 100.0;

  static RunConfig from_json_file(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text);
  std::string canonical_json() const;

  OcpModel make_model() const;
  StepRule make_step_rule() const;
  PdpConfig make_pdp_config() const;
  InnerConfig make_inner_config() const;
};

struct ControlCsv {
  double t_f = 0.0;
  int N = 0;
  ControlTrajectory u;
};

void write_control_csv(const std::filesystem::path& path, const TimeGrid& grid,
                       const ControlTrajectory& u);
ControlCsv read_control_csv(const std::filesystem::path& path);

void write_state_csv(const std::filesystem::path& path, const TimeGrid& grid,
                     const StateTrajectory& x);
void write_history_csv(const std::filesystem::path& path, const PdpResult& result);
void write_dual_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& sweep);
void write_certificate_json(const std::filesystem::path& path, const Certificate& cert);
void write_summary_json(const std::filesystem::path& path, const RunConfig& cfg,
                        const PdpResult& result, bool q_is_upper_bound);

/// Register a written file in <dir>/manifest.json together with the config
/// hash and seed that produced it.
void manifest_add(const std::filesystem::path& dir, const std::string& filename,
                  const std::string& cfg_hash, std::uint64_t seed);

}  // namespace pdp
