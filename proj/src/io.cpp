#include "pdp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pdp {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void ensure_parent(const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::ofstream open_out(const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["model"] = c.model;
  j["s0"] = c.s0;
  j["sf"] = c.sf;
  j["v0"] = c.v0;
  j["vf"] = c.vf;
  j["a"] = c.a;
  j["N"] = c.N;
  j["step_rule"] = c.step_rule;
  j["eta"] = c.eta;
  if (c.beta) j["beta"] = *c.beta;
  if (c.alpha) j["alpha"] = *c.alpha;
  j["theta"] = c.theta;
  j["pick"] = c.pick;
  j["c0"] = c.c0;
  j["eps"] = c.eps;
  j["max_outer"] = c.max_outer;
  if (!c.mu_schedule.empty()) j["mu_schedule"] = c.mu_schedule;
  j["grad_tol"] = c.grad_tol;
  j["max_iter"] = c.max_iter;
  j["memory"] = c.memory;
  j["restarts"] = c.restarts;
  j["seed"] = c.seed;
  j["keep_history"] = c.keep_history;
  j["out"] = c.out;
  j["threads"] = c.threads;
  j["kind"] = c.kind;
  j["runs"] = c.runs;
  if (!c.c_values.empty()) j["c_values"] = c.c_values;
  if (!c.N_values.empty()) j["N_values"] = c.N_values;
  j["init_lo"] = c.init_lo;
  j["init_hi"] = c.init_hi;
  j["baseline_c"] = c.baseline_c;
  return j;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  RunConfig c;
  for (const auto& [key, val] : j.items()) {
    if (key == "model") c.model = val.get<std::string>();
    else if (key == "s0") c.s0 = val.get<double>();
    else if (key == "sf") c.sf = val.get<double>();
    else if (key == "v0") c.v0 = val.get<double>();
    else if (key == "vf") c.vf = val.get<double>();
    else if (key == "a") c.a = val.get<double>();
    else if (key == "N") c.N = val.get<int>();
    else if (key == "step_rule") c.step_rule = val.get<int>();
    else if (key == "eta") c.eta = val.get<double>();
    else if (key == "beta") c.beta = val.get<double>();
    else if (key == "alpha") c.alpha = val.get<double>();
    else if (key == "theta") c.theta = val.get<double>();
    else if (key == "pick") c.pick = val.get<double>();
    else if (key == "c0") c.c0 = val.get<double>();
    else if (key == "eps") c.eps = val.get<double>();
    else if (key == "max_outer") c.max_outer = val.get<int>();
    else if (key == "mu_schedule") c.mu_schedule = val.get<std::vector<double>>();
    else if (key == "grad_tol") c.grad_tol = val.get<double>();
    else if (key == "max_iter") c.max_iter = val.get<int>();
    else if (key == "memory") c.memory = val.get<int>();
    else if (key == "restarts") c.restarts = val.get<int>();
    else if (key == "seed") c.seed = val.get<std::uint64_t>();
    else if (key == "keep_history") c.keep_history = val.get<bool>();
    else if (key == "out") c.out = val.get<std::string>();
    else if (key == "threads") c.threads = val.get<int>();
    else if (key == "kind") c.kind = val.get<std::string>();
    else if (key == "runs") c.runs = val.get<int>();
    else if (key == "c_values") c.c_values = val.get<std::vector<double>>();
    else if (key == "N_values") c.N_values = val.get<std::vector<int>>();
    else if (key == "init_lo") c.init_lo = val.get<double>();
    else if (key == "init_hi") c.init_hi = val.get<double>();
    else if (key == "baseline_c") c.baseline_c = val.get<double>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::canonical_json() const { return run_config_to_json(*this).dump(); }

OcpModel RunConfig::make_model() const {
  if (model == "double_integrator") return make_double_integrator(s0, sf, v0, vf, a);
  if (model == "free_flying_robot") return make_free_flying_robot();
  throw std::invalid_argument("config: unknown model '" + model + "'");
}

StepRule RunConfig::make_step_rule() const {
  const bool ffr = model == "free_flying_robot";
  if (step_rule == 1) return StepRule::type1(eta, beta.value_or(1.0), pick);
  if (step_rule == 2) return StepRule::type2(beta.value_or(ffr ? 2.0 : 3.0), theta, pick);
  throw std::invalid_argument("config: step_rule must be 1 or 2");
}

InnerConfig RunConfig::make_inner_config() const {
  InnerConfig ic;
  if (!mu_schedule.empty()) ic.mu_schedule = mu_schedule;
  ic.grad_tol = grad_tol;
  ic.max_iter = max_iter;
  ic.memory = memory;
  ic.restarts = restarts;
  ic.seed = seed;
  ic.validate();
  return ic;
}

PdpConfig RunConfig::make_pdp_config() const {
  const bool ffr = model == "free_flying_robot";
  PdpConfig pc;
  pc.c0 = c0;
  pc.alpha = alpha.value_or(step_rule == 1 && ffr ? 0.4 : 1.0);
  pc.eps = eps;
  pc.max_outer = max_outer;
  pc.step_rule = make_step_rule();
  pc.inner = make_inner_config();
  pc.keep_history = keep_history;
  pc.validate();
  return pc;
}

void write_control_csv(const std::filesystem::path& path, const TimeGrid& grid,
                       const ControlTrajectory& u) {
  auto os = open_out(path);
  os << "t";
  for (int r = 0; r < u.m(); ++r) os << ",u" << (r + 1);
  os << "\n";
  for (int j = 0; j < u.N(); ++j) {
    os << format_double(grid.node(j));
    for (int r = 0; r < u.m(); ++r) os << "," << format_double(u.values(r, j));
    os << "\n";
  }
}

ControlCsv read_control_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open control csv: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ":1: empty file");
  int m = 0;
  {
    std::stringstream hs(line);
    std::string col;
    bool first = true;
    while (std::getline(hs, col, ',')) {
      if (first) {
        if (col != "t") throw std::runtime_error(path.string() + ":1: first column must be 't'");
        first = false;
      } else {
        ++m;
      }
    }
    if (m < 1) throw std::runtime_error(path.string() + ":1: no control columns");
  }
  std::vector<double> ts;
  std::vector<std::vector<double>> vals;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": not a number: '" + cell + "'");
      }
    }
    if (static_cast<int>(row.size()) != m + 1)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(m + 1) + " columns");
    ts.push_back(row[0]);
    vals.emplace_back(row.begin() + 1, row.end());
  }
  const int N = static_cast<int>(ts.size());
  if (N < 2) throw std::runtime_error(path.string() + ": need at least 2 rows");
  const double dt = ts[1] - ts[0];
  if (!(dt > 0.0)) throw std::runtime_error(path.string() + ": time column must increase");
  for (int j = 0; j < N; ++j)
    if (std::abs(ts[j] - j * dt) > 1e-9 * std::max(1.0, std::abs(ts[j])))
      throw std::runtime_error(path.string() + ":" + std::to_string(j + 2) +
                               ": non-uniform time grid");
  ControlCsv out;
  out.N = N;
  out.t_f = dt * N;
  out.u = ControlTrajectory(m, N);
  for (int j = 0; j < N; ++j)
    for (int r = 0; r < m; ++r) out.u.values(r, j) = vals[j][r];
  return out;
}

void write_state_csv(const std::filesystem::path& path, const TimeGrid& grid,
                     const StateTrajectory& x) {
  auto os = open_out(path);
  os << "t";
  for (int p = 0; p < x.n(); ++p) os << ",x" << (p + 1);
  os << "\n";
  for (int i = 0; i <= x.N(); ++i) {
    os << format_double(grid.node(i));
    for (int p = 0; p < x.n(); ++p) os << "," << format_double(x.values(p, i));
    os << "\n";
  }
}

void write_history_csv(const std::filesystem::path& path, const PdpResult& result) {
  auto os = open_out(path);
  os << "k,c,s,s_tilde,q,phi,h_l1,h_l2,h_linf\n";
  for (const auto& it : result.iterates) {
    os << it.k << "," << format_double(it.c) << "," << format_double(it.s) << ","
       << format_double(it.s_tilde) << "," << format_double(it.q) << "," << format_double(it.phi)
       << "," << format_double(it.h_l1) << "," << format_double(it.h_l2) << ","
       << format_double(it.h_linf) << "\n";
  }
}

void write_dual_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& sweep) {
  auto os = open_out(path);
  os << "c,q,phi,h_l1,inner_converged\n";
  for (const auto& pt : sweep) {
    os << format_double(pt.c) << "," << format_double(pt.q) << "," << format_double(pt.phi) << ","
       << format_double(pt.h_l1) << "," << (pt.inner_converged ? 1 : 0) << "\n";
  }
}

void write_certificate_json(const std::filesystem::path& path, const Certificate& cert) {
  json j;
  auto matrix_to_json = [](const Mat& mtx) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < mtx.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index col = 0; col < mtx.cols(); ++col) row.push_back(mtx(r, col));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["adjoints"] = matrix_to_json(cert.adjoints);
  j["switching"] = matrix_to_json(cert.switching);
  j["max_clip_violation"] = cert.max_clip_violation;
  j["hamiltonian_min"] = cert.hamiltonian_min;
  j["hamiltonian_max"] = cert.hamiltonian_max;
  json consts;
  for (std::size_t i = 0; i < cert.constant_names.size(); ++i)
    consts[cert.constant_names[i]] = cert.fitted_constants[static_cast<Eigen::Index>(i)];
  j["fitted_constants"] = std::move(consts);
  j["fit_residual_rms"] = cert.fit_residual_rms;
  j["inconclusive"] = cert.inconclusive;
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

void write_summary_json(const std::filesystem::path& path, const RunConfig& cfg,
                        const PdpResult& result, bool q_is_upper_bound) {
  json j;
  switch (result.status) {
    case PdpStatus::Converged: j["status"] = "converged"; break;
    case PdpStatus::MaxOuterReached: j["status"] = "max_outer_reached"; break;
    case PdpStatus::InnerFailed: j["status"] = "inner_failed"; break;
  }
  j["outer_iterations"] = result.iterates.size();
  if (!result.iterates.empty()) {
    const auto& last = result.iterates.back();
    j["c_final"] = last.c;
    j["q_final"] = last.q;
    j["phi_final"] = last.phi;
    j["h_l1"] = last.h_l1;
    j["h_l2"] = last.h_l2;
    j["h_linf"] = last.h_linf;
  }
  j["q_is_upper_bound"] = q_is_upper_bound;
  j["config"] = json::parse(cfg.canonical_json());
  j["config_hash"] = config_hash(cfg.canonical_json());
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

void manifest_add(const std::filesystem::path& dir, const std::string& filename,
                  const std::string& cfg_hash, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "manifest.json";
  json j;
  if (std::filesystem::exists(path)) {
    std::ifstream is(path);
    try {
      is >> j;
    } catch (const std::exception&) {
      j = json::object();
    }
  }
  if (!j.contains("code_version")) j["code_version"] = "pdp 0.1.0";
  json& entries = j["entries"];
  if (!entries.is_object()) entries = json::object();
  entries[filename] = {{"config_hash", cfg_hash}, {"seed", seed}};
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

}  // namespace pdp
