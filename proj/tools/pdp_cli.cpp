#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pdp/io.hpp"
#include "pdp/rng.hpp"

namespace {

using namespace pdp;

std::filesystem::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PDP_OUT_DIR"); env && *env) return env;
  return "pdp_out";
}

std::vector<double> parse_c_range(const std::string& text) {
  // "lo:hi:step" or comma-separated list
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 1;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0))
      throw std::invalid_argument("bad c range '" + text + "', expected lo:hi:step");
    for (double c = lo; c <= hi + 1e-12 * std::max(1.0, std::abs(hi)); c += step)
      out.push_back(c);
    return out;
  }
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

struct FlagSet {
  std::string config_path;
  std::string model, out, kind, c_spec, u_path, n_list;
  int N = -1, step_rule = -1, runs = -1, threads = -1, max_outer = -1;
  double c0 = NAN, eps = NAN, eta = NAN, beta = NAN, theta = NAN, pick = NAN, alpha = NAN;
  double baseline_c = NAN;
  long long seed = -1;
  bool keep_history = false;
};

void add_common_flags(CLI::App* cmd, FlagSet& fl) {
  cmd->add_option("--config", fl.config_path, "JSON config file; flags override its values");
  cmd->add_option("--model", fl.model, "model tag: double_integrator | free_flying_robot");
  cmd->add_option("--N", fl.N, "number of subintervals");
  cmd->add_option("--step-rule", fl.step_rule, "dual step-size rule: 1 | 2");
  cmd->add_option("--c0", fl.c0, "initial penalty weight");
  cmd->add_option("--eps", fl.eps, "feasibility tolerance on ||h||_inf");
  cmd->add_option("--eta", fl.eta, "type-1 step floor");
  cmd->add_option("--beta", fl.beta, "step rule beta");
  cmd->add_option("--theta", fl.theta, "type-2 theta");
  cmd->add_option("--pick", fl.pick, "step pick fraction in [0,1]");
  cmd->add_option("--alpha", fl.alpha, "dual relaxation alpha_k");
  cmd->add_option("--max-outer", fl.max_outer, "outer iteration cap");
  cmd->add_option("--seed", fl.seed, "random seed");
  cmd->add_option("--threads", fl.threads, "worker cap for experiments");
  cmd->add_option("--out", fl.out, "output directory (or PDP_OUT_DIR)");
  cmd->add_flag("--keep-history", fl.keep_history, "retain per-iteration controls");
}

RunConfig merge(const FlagSet& fl) {
  RunConfig cfg;
  if (!fl.config_path.empty()) cfg = RunConfig::from_json_file(fl.config_path);
  else cfg.model.clear();
  if (!fl.model.empty()) cfg.model = fl.model;
  if (fl.N > 0) cfg.N = fl.N;
  if (fl.step_rule > 0) cfg.step_rule = fl.step_rule;
  if (!std::isnan(fl.c0)) cfg.c0 = fl.c0;
  if (!std::isnan(fl.eps)) cfg.eps = fl.eps;
  if (!std::isnan(fl.eta)) cfg.eta = fl.eta;
  if (!std::isnan(fl.beta)) cfg.beta = fl.beta;
  if (!std::isnan(fl.theta)) cfg.theta = fl.theta;
  if (!std::isnan(fl.pick)) cfg.pick = fl.pick;
  if (!std::isnan(fl.alpha)) cfg.alpha = fl.alpha;
  if (!std::isnan(fl.baseline_c)) cfg.baseline_c = fl.baseline_c;
  if (fl.max_outer > 0) cfg.max_outer = fl.max_outer;
  if (fl.seed >= 0) cfg.seed = static_cast<std::uint64_t>(fl.seed);
  if (fl.threads > 0) cfg.threads = fl.threads;
  if (fl.runs > 0) cfg.runs = fl.runs;
  if (!fl.out.empty()) cfg.out = fl.out;
  if (!fl.kind.empty()) cfg.kind = fl.kind;
  if (fl.keep_history) cfg.keep_history = true;
  if (!fl.c_spec.empty()) cfg.c_values = parse_c_range(fl.c_spec);
  if (!fl.n_list.empty()) {
    cfg.N_values.clear();
    std::stringstream ss(fl.n_list);
    std::string cell;
    while (std::getline(ss, cell, ',')) cfg.N_values.push_back(std::stoi(cell));
  }
  if (cfg.model.empty())
    throw std::invalid_argument("missing model tag: pass --model or provide it in --config");
  return cfg;
}

int run_solve(const FlagSet& fl) {
  RunConfig cfg = merge(fl);
  const OcpModel model = cfg.make_model();
  const TimeGrid grid(model.t_f, cfg.N);
  const PdpConfig pc = cfg.make_pdp_config();
  const PdpResult res = pdp_run(model, grid, pc, ControlTrajectory(model.m, grid.N));

  const auto dir = resolve_out_dir(cfg.out);
  const auto hash = config_hash(cfg.canonical_json());
  write_control_csv(dir / "u.csv", grid, res.final_u);
  write_state_csv(dir / "x.csv", grid, res.final_states);
  write_history_csv(dir / "history.csv", res);
  write_summary_json(dir / "summary.json", cfg, res, !model.convex);
  for (const char* f : {"u.csv", "x.csv", "history.csv", "summary.json"})
    manifest_add(dir, f, hash, cfg.seed);
  if (cfg.keep_history) {
    std::ofstream os(dir / "iterates.csv");
    os << "k,t";
    for (int r = 0; r < model.m; ++r) os << ",u" << (r + 1);
    os << "\n";
    for (std::size_t k = 0; k < res.control_history.size(); ++k)
      for (int j = 0; j < grid.N; ++j) {
        os << k << "," << format_double(grid.node(j));
        for (int r = 0; r < model.m; ++r)
          os << "," << format_double(res.control_history[k].values(r, j));
        os << "\n";
      }
    manifest_add(dir, "iterates.csv", hash, cfg.seed);
  }

  std::cout << "status=" << (res.status == PdpStatus::Converged        ? "converged"
                             : res.status == PdpStatus::MaxOuterReached ? "max_outer_reached"
                                                                        : "inner_failed")
            << " outer_iterations=" << res.iterates.size() << " out=" << dir.string() << "\n";
  switch (res.status) {
    case PdpStatus::Converged: return 0;
    case PdpStatus::MaxOuterReached: return 2;
    case PdpStatus::InnerFailed: return 3;
  }
  return 2;
}

int run_sweep(const FlagSet& fl) {
  RunConfig cfg = merge(fl);
  if (cfg.c_values.empty()) throw std::invalid_argument("sweep: provide --c lo:hi:step");
  const OcpModel model = cfg.make_model();
  const TimeGrid grid(model.t_f, cfg.N);
  const auto sweep = dual_sweep(model, grid, cfg.c_values, cfg.make_inner_config());
  const auto dir = resolve_out_dir(cfg.out);
  write_dual_csv(dir / "dual.csv", sweep);
  manifest_add(dir, "dual.csv", config_hash(cfg.canonical_json()), cfg.seed);
  std::cout << "points=" << sweep.size() << " out=" << dir.string() << "\n";
  return 0;
}

int run_certify(const FlagSet& fl) {
  RunConfig cfg = merge(fl);
  if (fl.u_path.empty()) throw std::invalid_argument("certify: provide --u <u.csv>");
  const OcpModel model = cfg.make_model();
  const ControlCsv file = read_control_csv(fl.u_path);
  if (file.u.m() != model.m)
    throw std::invalid_argument("certify: control dimension in file does not match model");
  if (std::abs(file.t_f - model.t_f) > 1e-6 * model.t_f)
    throw std::invalid_argument("certify: file horizon does not match model t_f");
  const TimeGrid grid(model.t_f, file.N);
  const Certificate cert = model.tag == "double_integrator"
                               ? certify_double_integrator(file.u, grid, model)
                               : certify_free_flying_robot(file.u, grid, model);
  const auto dir = resolve_out_dir(cfg.out);
  write_certificate_json(dir / "certificate.json", cert);
  manifest_add(dir, "certificate.json", config_hash(cfg.canonical_json()), cfg.seed);
  std::cout << "max_clip_violation=" << format_double(cert.max_clip_violation)
            << " inconclusive=" << (cert.inconclusive ? 1 : 0) << " out=" << dir.string() << "\n";
  return 0;
}

void write_runs_csv(std::ofstream& os, const std::string& method, int N,
                    const std::vector<RunRecord>& runs) {
  for (const auto& rec : runs)
    os << N << "," << method << "," << rec.run_index << "," << (rec.converged ? 1 : 0) << ","
       << rec.outer_iterations << "," << format_double(rec.phi) << ","
       << format_double(rec.h_linf) << "," << format_double(rec.seconds) << "\n";
}

int run_experiment(const FlagSet& fl) {
  RunConfig cfg = merge(fl);
  if (cfg.kind.empty()) throw std::invalid_argument("experiment: provide --kind");
  const OcpModel model = cfg.make_model();
  const auto dir = resolve_out_dir(cfg.out);
  const auto hash = config_hash(cfg.canonical_json());

  if (cfg.kind == "dual_sweep") return run_sweep(fl);

  if (cfg.kind == "success_rate") {
    std::vector<int> Ns = cfg.N_values.empty() ? std::vector<int>{cfg.N} : cfg.N_values;
    std::filesystem::create_directories(dir);
    std::ofstream report(dir / "report.csv");
    report << "N,success_rate_pdp1,success_rate_pdp2,success_rate_baseline,"
              "mean_time_pdp1,mean_time_pdp2,mean_time_baseline_all,mean_time_baseline_success\n";
    std::ofstream runs_os(dir / "runs.csv");
    runs_os << "N,method,run,converged,outer_iterations,phi,h_linf,seconds\n";
    for (int N : Ns) {
      const TimeGrid grid(model.t_f, N);
      RunConfig c1 = cfg;
      c1.step_rule = 1;
      RunConfig c2 = cfg;
      c2.step_rule = 2;
      const auto rep1 = success_rate_study(model, grid, cfg.runs, cfg.seed, cfg.init_lo,
                                           cfg.init_hi, c1.make_pdp_config(), cfg.threads);
      const auto rep2 = success_rate_study(model, grid, cfg.runs, cfg.seed, cfg.init_lo,
                                           cfg.init_hi, c2.make_pdp_config(), cfg.threads);
      int bl_success = 0;
      double bl_time_all = 0.0, bl_time_success = 0.0;
      std::vector<RunRecord> bl_runs;
      for (int i = 0; i < cfg.runs; ++i) {
        BaselineConfig bc;
        bc.c_big = cfg.baseline_c;
        bc.inner = cfg.make_inner_config();
        bc.eps = cfg.eps;
        bc.seed = derive_seed(cfg.seed, 0xb000 + static_cast<std::uint64_t>(i));
        bc.init_lo = cfg.init_lo;
        bc.init_hi = cfg.init_hi;
        const BaselineRecord rec = baseline_full_transcription(model, grid, bc);
        RunRecord rr;
        rr.run_index = i;
        rr.converged = rec.converged;
        rr.outer_iterations = 1;
        rr.phi = rec.phi;
        rr.h_linf = rec.dyn_residual_inf;
        rr.seconds = rec.seconds;
        bl_runs.push_back(rr);
        bl_time_all += rec.seconds;
        if (rec.converged) {
          ++bl_success;
          bl_time_success += rec.seconds;
        }
      }
      const double bl_rate = 100.0 * bl_success / cfg.runs;
      report << N << "," << format_double(rep1.success_rate) << ","
             << format_double(rep2.success_rate) << "," << format_double(bl_rate) << ","
             << format_double(rep1.mean_time_all) << "," << format_double(rep2.mean_time_all)
             << "," << format_double(bl_time_all / cfg.runs) << ","
             << format_double(bl_success > 0 ? bl_time_success / bl_success : 0.0) << "\n";
      write_runs_csv(runs_os, "pdp1", N, rep1.runs);
      write_runs_csv(runs_os, "pdp2", N, rep2.runs);
      write_runs_csv(runs_os, "baseline", N, bl_runs);
    }
    manifest_add(dir, "report.csv", hash, cfg.seed);
    manifest_add(dir, "runs.csv", hash, cfg.seed);
    std::cout << "out=" << dir.string() << "\n";
    return 0;
  }

  if (cfg.kind == "n_sweep") {
    if (cfg.N_values.empty()) throw std::invalid_argument("n_sweep: provide --N-list");
    const auto rep = n_sweep(model, cfg.N_values, cfg.make_pdp_config());
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "nsweep.csv");
    os << "N,converged,outer_iterations,dist_total";
    for (int r = 0; r < model.m; ++r) os << ",dist_u" << (r + 1);
    os << "\n";
    for (const auto& e : rep.entries) {
      os << e.N << "," << (e.converged ? 1 : 0) << "," << e.outer_iterations << ","
         << format_double(e.dist_to_reference);
      for (int r = 0; r < model.m; ++r) os << "," << format_double(e.dist_per_channel[r]);
      os << "\n";
    }
    manifest_add(dir, "nsweep.csv", hash, cfg.seed);
    std::cout << "reference_N=" << rep.reference_N << " out=" << dir.string() << "\n";
    return 0;
  }

  if (cfg.kind == "baseline") {
    const TimeGrid grid(model.t_f, cfg.N);
    BaselineConfig bc;
    bc.c_big = cfg.baseline_c;
    bc.inner = cfg.make_inner_config();
    bc.eps = cfg.eps;
    bc.seed = cfg.seed;
    bc.init_lo = cfg.init_lo;
    bc.init_hi = cfg.init_hi;
    const BaselineRecord rec = baseline_full_transcription(model, grid, bc);
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "baseline.csv");
    os << "converged,phi,dyn_residual_inf,seconds,unknown_count,iterations\n";
    os << (rec.converged ? 1 : 0) << "," << format_double(rec.phi) << ","
       << format_double(rec.dyn_residual_inf) << "," << format_double(rec.seconds) << ","
       << rec.unknown_count << "," << rec.iterations << "\n";
    manifest_add(dir, "baseline.csv", hash, cfg.seed);
    std::cout << "converged=" << rec.converged << " out=" << dir.string() << "\n";
    return 0;
  }

  if (cfg.kind == "iterate_dump") {
    FlagSet fl2 = fl;
    fl2.keep_history = true;
    return run_solve(fl2);
  }

  throw std::invalid_argument("experiment: unknown kind '" + cfg.kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual penalty solver for control-constrained optimal control"};
  app.require_subcommand(1);

  FlagSet fl;
  auto* solve = app.add_subcommand("solve", "run the PDP algorithm on one problem");
  add_common_flags(solve, fl);

  auto* sweep = app.add_subcommand("sweep", "evaluate the dual function over a penalty grid");
  add_common_flags(sweep, fl);
  sweep->add_option("--c", fl.c_spec, "penalty grid, lo:hi:step or comma list");

  auto* certify = app.add_subcommand("certify", "check first-order optimality of a control file");
  add_common_flags(certify, fl);
  certify->add_option("--u", fl.u_path, "control CSV produced by solve");

  auto* experiment = app.add_subcommand("experiment", "run a study");
  add_common_flags(experiment, fl);
  experiment->add_option("--kind", fl.kind,
                         "success_rate | n_sweep | dual_sweep | baseline | iterate_dump");
  experiment->add_option("--runs", fl.runs, "runs per study");
  experiment->add_option("--c", fl.c_spec, "penalty grid for dual_sweep");
  experiment->add_option("--N-list", fl.n_list, "comma-separated grid sizes");
  experiment->add_option("--baseline-c", fl.baseline_c, "penalty weight for the baseline solve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return run_solve(fl);
    if (sweep->parsed()) return run_sweep(fl);
    if (certify->parsed()) return run_certify(fl);
    if (experiment->parsed()) return run_experiment(fl);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run '" << argv[0] << " --help' for usage\n";
    return 1;
  }
  return 1;
}
