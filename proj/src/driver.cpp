#include "pdp/driver.hpp"

#include <algorithm>
#include <limits>

#include "pdp/rng.hpp"

namespace pdp {

StepRule StepRule::type1(double eta, double beta, double pick) {
  StepRule r;
  r.kind = Kind::Type1;
  r.eta = eta;
  r.beta = beta;
  r.pick = pick;
  r.validate();
  return r;
}

StepRule StepRule::type2(double beta, double theta, double pick) {
  StepRule r;
  r.kind = Kind::Type2;
  r.beta = beta;
  r.theta_schedule = {theta};
  r.pick = pick;
  r.validate();
  return r;
}

double StepRule::theta(int k) const {
  if (theta_schedule.empty()) return 1.0;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k), theta_schedule.size() - 1);
  return theta_schedule[idx];
}

void StepRule::validate() const {
  if (!(pick >= 0.0 && pick <= 1.0)) throw std::invalid_argument("StepRule: pick must be in [0,1]");
  if (kind == Kind::Type1) {
    if (!(eta > 0.0 && beta > eta))
      throw std::invalid_argument("StepRule type 1 requires 0 < eta < beta");
  } else {
    if (!(beta > 0.0)) throw std::invalid_argument("StepRule type 2 requires beta > 0");
    for (double th : theta_schedule)
      if (!(th > 0.0 && th <= beta))
        throw std::invalid_argument("StepRule type 2 requires 0 < theta_k <= beta");
  }
}

void PdpConfig::validate() const {
  if (!(c0 > 0.0)) throw std::invalid_argument("PdpConfig: c0 must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("PdpConfig: alpha must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("PdpConfig: eps must be positive");
  if (max_outer < 1) throw std::invalid_argument("PdpConfig: max_outer must be >= 1");
  step_rule.validate();
  inner.validate();
}

double step_size(const StepRule& rule, int k, double h_l1, double h_l2) {
  double eta_k, beta_k;
  if (rule.kind == StepRule::Kind::Type1) {
    eta_k = std::min(rule.eta, h_l2);
    beta_k = std::max(rule.beta, h_l1 + h_l2);
  } else {
    if (!(h_l1 > 0.0))
      throw std::logic_error("step_size type 2: ||h||_1 is zero; caller must stop on feasibility");
    eta_k = rule.theta(k) / h_l1;
    beta_k = rule.beta / h_l1;
  }
  return (1.0 - rule.pick) * eta_k + rule.pick * beta_k;
}

PdpResult pdp_run(const OcpModel& model, const TimeGrid& grid, const PdpConfig& cfg,
                  const ControlTrajectory& u_init) {
  cfg.validate();
  PdpResult res;
  ControlTrajectory u = project_box(u_init, model.bounds);
  double c = cfg.c0;
  double c_escalate = 32.0 * std::max(1.0, cfg.c0);

  for (int k = 0; k < cfg.max_outer; ++k) {
    // multi-starts help the cold first subproblem; the warm chain afterwards
    // is the continuation itself, and near-optimal warm starts need few
    // Newton iterations, so per-level effort is capped there as well
    InnerConfig inner_cfg = cfg.inner;
    if (k > 0) {
      inner_cfg.restarts = 1;
      inner_cfg.max_iter = std::min(inner_cfg.max_iter, 60);
    }
    // still far from feasible while c has grown well past the usual exact
    // threshold: the chain is likely tracking an infeasible stationary point,
    // so spend fresh multi-starts (plus the zero control) to escape instead
    // of sharpening further
    if (k > 0 && c >= c_escalate &&
        (!res.iterates.empty() && res.iterates.back().h_linf > 1e3 * cfg.eps)) {
      c_escalate = std::max(1.2 * c_escalate, c + 1.0);
      inner_cfg = cfg.inner;
      inner_cfg.restarts = 2 * cfg.inner.restarts;
      inner_cfg.perturbation = 2.0;  // effectively fresh draws over the box
      inner_cfg.include_zero_start = true;
      inner_cfg.seed = derive_seed(cfg.inner.seed, 0xe5cULL + static_cast<std::uint64_t>(k));
    }
    InnerResult ir = inner_solve(model, grid, c, u, inner_cfg);
    if (!ir.acceptable) {
      InnerConfig retry = cfg.inner;
      retry.restarts = 2 * cfg.inner.restarts;
      retry.seed = derive_seed(cfg.inner.seed, 0x5e7aULL + static_cast<std::uint64_t>(k));
      InnerResult again = inner_solve(model, grid, c, u, retry);
      if (again.converged || (again.acceptable && !ir.acceptable) ||
          (again.acceptable == ir.acceptable && again.stationarity < ir.stationarity))
        ir = std::move(again);
    }
    u = ir.u_star;

    PdpIterate it;
    it.k = k;
    it.c = c;
    it.q = ir.lagrangian_value;
    it.phi = ir.phi_value;
    it.h_l1 = norm1(ir.residual);
    it.h_l2 = norm2(ir.residual);
    it.h_linf = norm_inf(ir.residual);
    it.inner_converged = ir.converged;
    if (cfg.keep_history) res.control_history.push_back(u);

    if (!ir.acceptable) {
      res.iterates.push_back(it);
      res.status = PdpStatus::InnerFailed;
      res.final_u = u;
      res.final_states = simulate(model, grid, u);
      return res;
    }
    if (it.h_linf < cfg.eps) {
      res.iterates.push_back(it);
      res.status = PdpStatus::Converged;
      res.final_u = u;
      res.final_states = simulate(model, grid, u);
      return res;
    }


    it.s = step_size(cfg.step_rule, k, it.h_l1, it.h_l2);
    it.s_tilde = (cfg.alpha + 1.0) * it.s;
    res.iterates.push_back(it);
    c += it.s_tilde * it.h_l1;
  }

  res.status = PdpStatus::MaxOuterReached;
  res.final_u = u;
  res.final_states = simulate(model, grid, u);
  return res;
}

std::vector<std::pair<double, double>> dual_value_history(const PdpResult& result) {
  if (result.iterates.empty()) throw std::invalid_argument("dual_value_history: empty result");
  std::vector<std::pair<double, double>> out;
  out.reserve(result.iterates.size());
  for (const auto& it : result.iterates) out.emplace_back(it.c, it.q);
  return out;
}

}  // namespace pdp
