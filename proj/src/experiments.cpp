#include "pdp/experiments.hpp"

#include <Eigen/Sparse>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "pdp/rng.hpp"

namespace pdp {

namespace {
double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

ControlTrajectory random_control(int m, int N, std::uint64_t seed, double lo, double hi) {
  SplitMix64 rng(seed);
  ControlTrajectory u(m, N);
  for (int j = 0; j < N; ++j)
    for (int r = 0; r < m; ++r) u.values(r, j) = rng.uniform(lo, hi);
  return u;
}

std::vector<SweepPoint> dual_sweep(const OcpModel& model, const TimeGrid& grid,
                                   const std::vector<double>& c_values, const InnerConfig& inner) {
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    if (c_values[i] < 0.0) throw std::invalid_argument("dual_sweep: c values must be >= 0");
    if (i > 0 && !(c_values[i] > c_values[i - 1]))
      throw std::invalid_argument("dual_sweep: c values must be strictly increasing");
  }
  std::vector<SweepPoint> out;
  out.reserve(c_values.size());
  ControlTrajectory warm(model.m, grid.N);
  InnerConfig point_cfg = inner;
  for (double c : c_values) {
    if (!out.empty()) point_cfg.restarts = 1;
    InnerResult ir = inner_solve(model, grid, c, warm, point_cfg);
    SweepPoint pt;
    pt.c = c;
    pt.q = ir.lagrangian_value;
    pt.phi = ir.phi_value;
    pt.h_l1 = norm1(ir.residual);
    pt.inner_converged = ir.converged;
    pt.u = ir.u_star;
    warm = ir.u_star;
    out.push_back(std::move(pt));
  }
  return out;
}

NSweepReport n_sweep(const OcpModel& model, const std::vector<int>& N_values,
                     const PdpConfig& cfg) {
  if (N_values.size() < 2) throw std::invalid_argument("n_sweep: need at least two grid sizes");
  for (std::size_t i = 0; i + 1 < N_values.size(); ++i)
    if (!(N_values[i] < N_values[i + 1]))
      throw std::invalid_argument("n_sweep: grid sizes must be increasing");

  const int N_ref = N_values.back();
  std::vector<std::pair<int, PdpResult>> results;
  for (int N : N_values) {
    TimeGrid grid(model.t_f, N);
    results.emplace_back(N, pdp_run(model, grid, cfg, ControlTrajectory(model.m, N)));
  }

  NSweepReport rep;
  rep.reference_N = N_ref;
  rep.reference_u = results.back().second.final_u;
  for (std::size_t e = 0; e + 1 < results.size(); ++e) {
    const int N = results[e].first;
    const PdpResult& res = results[e].second;
    NSweepEntry entry;
    entry.N = N;
    entry.converged = res.status == PdpStatus::Converged;
    entry.outer_iterations = static_cast<int>(res.iterates.size());
    entry.u = res.final_u;
    entry.dist_per_channel = Vec::Zero(model.m);
    for (int jref = 0; jref < N_ref; ++jref) {
      const int j = std::min(N - 1, (jref * N) / N_ref);
      for (int r = 0; r < model.m; ++r) {
        const double d = std::abs(res.final_u.values(r, j) - rep.reference_u.values(r, jref));
        entry.dist_per_channel[r] = std::max(entry.dist_per_channel[r], d);
      }
    }
    entry.dist_to_reference = entry.dist_per_channel.maxCoeff();
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

ExperimentReport success_rate_study(const OcpModel& model, const TimeGrid& grid, int runs,
                                    std::uint64_t seed, double init_lo, double init_hi,
                                    const PdpConfig& cfg, int threads) {
  if (runs < 1) throw std::invalid_argument("success_rate_study: runs must be >= 1");
  threads = std::max(1, threads);

  ExperimentReport rep;
  rep.runs.resize(runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= runs) return;
      const auto t0 = std::chrono::steady_clock::now();
      PdpConfig run_cfg = cfg;
      run_cfg.inner.seed = derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(i));
      const ControlTrajectory u0 = random_control(
          model.m, grid.N, derive_seed(seed, static_cast<std::uint64_t>(i)), init_lo, init_hi);
      const PdpResult res = pdp_run(model, grid, run_cfg, u0);
      RunRecord& rec = rep.runs[i];
      rec.run_index = i;
      rec.converged = res.status == PdpStatus::Converged;
      rec.outer_iterations = static_cast<int>(res.iterates.size());
      rec.phi = res.iterates.empty() ? 0.0 : res.iterates.back().phi;
      rec.h_linf = res.iterates.empty() ? 0.0 : res.iterates.back().h_linf;
      rec.seconds = elapsed_seconds(t0);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int successes = 0;
  double time_all = 0.0, time_success = 0.0;
  for (const auto& rec : rep.runs) {
    time_all += rec.seconds;
    if (rec.converged) {
      ++successes;
      time_success += rec.seconds;
    }
  }
  rep.success_rate = 100.0 * static_cast<double>(successes) / static_cast<double>(runs);
  rep.mean_time_all = time_all / static_cast<double>(runs);
  rep.mean_time_success = successes > 0 ? time_success / static_cast<double>(successes) : 0.0;
  return rep;
}

namespace {

/// Unknown layout for the full transcription: node states first (node-major),
/// then interval controls.
struct TranscriptionLayout {
  int n, m, N;
  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(n) * (N + 1) + static_cast<Eigen::Index>(m) * N;
  }
  Eigen::Index state(int i) const { return static_cast<Eigen::Index>(n) * i; }
  Eigen::Index control(int j) const {
    return static_cast<Eigen::Index>(n) * (N + 1) + static_cast<Eigen::Index>(m) * j;
  }
};

struct TranscriptionEval {
  Vec r;  // all equality residuals: init (n), dynamics (n*N), terminal (n)
  double phi = 0.0;
  double smoothed = 0.0;
  double exact = 0.0;
};

TranscriptionEval eval_transcription(const OcpModel& model, const TimeGrid& grid,
                                     const TranscriptionLayout& lay, double c, const Vec& z,
                                     double mu) {
  const int n = lay.n, m = lay.m, N = lay.N;
  TranscriptionEval ev;
  ev.r.resize(static_cast<Eigen::Index>(n) * (N + 2));
  Vec f(n);
  ev.r.head(n) = z.segment(lay.state(0), n) - model.x0;
  for (int i = 0; i < N; ++i) {
    const auto xi = z.segment(lay.state(i), n);
    const auto ui = z.segment(lay.control(i), m);
    model.dynamics(xi, ui, f);
    ev.r.segment(static_cast<Eigen::Index>(n) * (i + 1), n) =
        z.segment(lay.state(i + 1), n) - xi - grid.dt * f;
    ev.phi += model.cost_integrand(ui);
  }
  ev.r.tail(n) = z.segment(lay.state(N), n) - model.xf;
  ev.phi *= grid.dt;
  double pen_smooth = 0.0, pen_exact = 0.0;
  for (Eigen::Index row = 0; row < ev.r.size(); ++row) {
    pen_smooth += huber(ev.r[row], mu);
    pen_exact += std::abs(ev.r[row]);
  }
  ev.smoothed = ev.phi + c * pen_smooth;
  ev.exact = ev.phi + c * pen_exact;
  return ev;
}

Vec transcription_gradient(const OcpModel& model, const TimeGrid& grid,
                           const TranscriptionLayout& lay, double c, const Vec& z, double mu,
                           const TranscriptionEval& ev) {
  const int n = lay.n, m = lay.m, N = lay.N;
  Vec g = Vec::Zero(lay.dim());
  Vec cg(m);
  Mat A(n, n), B(n, m);
  auto w = [&](Eigen::Index row) { return c * huber_prime(ev.r[row], mu); };
  for (int p = 0; p < n; ++p) {
    g[lay.state(0) + p] += w(p);
    g[lay.state(N) + p] += w(static_cast<Eigen::Index>(n) * (N + 1) + p);
  }
  for (int i = 0; i < N; ++i) {
    const auto xi = z.segment(lay.state(i), n);
    const auto ui = z.segment(lay.control(i), m);
    model.dynamics_jac_x(xi, ui, A);
    model.dynamics_jac_u(xi, ui, B);
    Vec wi(n);
    for (int p = 0; p < n; ++p) wi[p] = w(static_cast<Eigen::Index>(n) * (i + 1) + p);
    g.segment(lay.state(i + 1), n) += wi;
    g.segment(lay.state(i), n) -= wi + grid.dt * A.transpose() * wi;
    g.segment(lay.control(i), m) -= grid.dt * B.transpose() * wi;
    model.cost_gradient(ui, cg);
    g.segment(lay.control(i), m) += grid.dt * cg;
  }
  return g;
}

double transcription_residual_inf(const TranscriptionEval& ev) {
  return ev.r.lpNorm<Eigen::Infinity>();
}

/// One row of the residual Jacobian in sparse form.
struct SparseRow {
  Eigen::Index cols[16];
  double vals[16];
  int nnz = 0;
  void add(Eigen::Index c, double v) {
    cols[nnz] = c;
    vals[nnz] = v;
    ++nnz;
  }
};

/// Projected Gauss-Newton for the full transcription: the same smoothing
/// continuation, step acceptance, and active-set refinement as the shooting
/// inner solver, with the block-sparse normal system factorized by LDLT.
/// Rows outside the knee get the IRLS secant weight c/|r| so the system stays
/// positive definite before feasibility is reached.
struct TranscriptionSolveReport {
  Vec z;
  int iterations = 0;
  double final_pg = 0.0;
};

TranscriptionSolveReport transcription_gauss_newton(const OcpModel& model, const TimeGrid& grid,
                                                    const TranscriptionLayout& lay, double c,
                                                    const Vec& lower, const Vec& upper, Vec z0,
                                                    const InnerConfig& cfg) {
  const int n = lay.n, m = lay.m, N = lay.N;
  const Eigen::Index dim = lay.dim();
  TranscriptionSolveReport rep;
  Vec z = z0.cwiseMax(lower).cwiseMin(upper);

  Vec sigma = Vec::Constant(dim, 1e-10);
  {
    Vec hd(m);
    for (int j = 0; j < N; ++j) {
      model.cost_hessian_diag(z.segment(lay.control(j), m), hd);
      for (int kk = 0; kk < m; ++kk)
        sigma[lay.control(j) + kk] += std::max(grid.dt * hd[kk], 0.0);
    }
  }

  std::vector<SparseRow> rows(static_cast<std::size_t>(n) * (N + 2));
  Mat A(n, n), B(n, m);
  auto build_rows = [&](const Vec& zz) {
    for (int p = 0; p < n; ++p) {
      rows[p] = SparseRow{};
      rows[p].add(lay.state(0) + p, 1.0);
      auto& term = rows[static_cast<std::size_t>(n) * (N + 1) + p];
      term = SparseRow{};
      term.add(lay.state(N) + p, 1.0);
    }
    for (int i = 0; i < N; ++i) {
      const auto xi = zz.segment(lay.state(i), n);
      const auto ui = zz.segment(lay.control(i), m);
      model.dynamics_jac_x(xi, ui, A);
      model.dynamics_jac_u(xi, ui, B);
      for (int p = 0; p < n; ++p) {
        auto& row = rows[static_cast<std::size_t>(n) * (i + 1) + p];
        row = SparseRow{};
        row.add(lay.state(i + 1) + p, 1.0);
        for (int kk = 0; kk < n; ++kk) {
          const double v = -(p == kk ? 1.0 : 0.0) - grid.dt * A(p, kk);
          if (v != 0.0) row.add(lay.state(i) + kk, v);
        }
        for (int kk = 0; kk < m; ++kk) {
          const double v = -grid.dt * B(p, kk);
          if (v != 0.0) row.add(lay.control(i) + kk, v);
        }
      }
    }
  };

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  Eigen::SparseMatrix<double> H(dim, dim);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  for (std::size_t level = 0; level < cfg.mu_schedule.size(); ++level) {
    const double mu = cfg.mu_schedule[level];
    const double tol = std::max(cfg.grad_tol, mu);

    TranscriptionEval ev = eval_transcription(model, grid, lay, c, z, mu);
    Vec g = transcription_gradient(model, grid, lay, c, z, mu, ev);

    int stagnant = 0;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
      const double pg = (z - (z - g).cwiseMax(lower).cwiseMin(upper)).lpNorm<Eigen::Infinity>();
      rep.final_pg = pg;
      if (pg <= tol) break;

      build_rows(z);
      std::vector<char> pinned(dim, 0);
      for (Eigen::Index i = 0; i < dim; ++i)
        if ((z[i] <= lower[i] && g[i] > 0.0) || (z[i] >= upper[i] && g[i] < 0.0)) pinned[i] = 1;
      Vec pin_disp = Vec::Zero(dim);
      Vec d(dim);

      for (int refine = 0; refine < 4; ++refine) {
        trips.clear();
        Vec rhs = -g;
        for (Eigen::Index i = 0; i < dim; ++i)
          trips.emplace_back(i, i, sigma[i] + (pinned[i] ? 1.0 : 0.0));
        for (std::size_t row = 0; row < rows.size(); ++row) {
          const double wrow = c / std::max(mu, std::abs(ev.r[static_cast<Eigen::Index>(row)]));
          const auto& sr = rows[row];
          for (int a = 0; a < sr.nnz; ++a) {
            if (pinned[sr.cols[a]]) continue;
            for (int b = 0; b < sr.nnz; ++b) {
              const double contrib = wrow * sr.vals[a] * sr.vals[b];
              if (pinned[sr.cols[b]]) rhs[sr.cols[a]] -= contrib * pin_disp[sr.cols[b]];
              else trips.emplace_back(sr.cols[a], sr.cols[b], contrib);
            }
          }
        }
        H.setFromTriplets(trips.begin(), trips.end());
        ldlt.compute(H);
        if (ldlt.info() != Eigen::Success) {
          d = -g.cwiseQuotient(sigma.cwiseMax(1e-8));
          break;
        }
        for (Eigen::Index i = 0; i < dim; ++i)
          if (pinned[i]) rhs[i] = 0.0;
        d = ldlt.solve(rhs);
        for (Eigen::Index i = 0; i < dim; ++i)
          if (pinned[i]) d[i] = pin_disp[i];
        bool violated = false;
        for (Eigen::Index i = 0; i < dim; ++i) {
          if (pinned[i]) continue;
          const double target = z[i] + d[i];
          if (target < lower[i] || target > upper[i]) {
            pinned[i] = 1;
            pin_disp[i] = std::clamp(target, lower[i], upper[i]) - z[i];
            violated = true;
          }
        }
        if (!violated) break;
      }
      if (d.dot(g) > -1e-14 * d.norm() * g.norm()) {
        d = -g;
        for (Eigen::Index i = 0; i < dim; ++i)
          if ((z[i] <= lower[i] && g[i] > 0.0) || (z[i] >= upper[i] && g[i] < 0.0)) d[i] = 0.0;
      }

      bool accepted = false;
      Vec zc;
      TranscriptionEval cand;
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        zc = (z + t * d).cwiseMax(lower).cwiseMin(upper);
        if ((zc - z).lpNorm<Eigen::Infinity>() == 0.0) break;
        cand = eval_transcription(model, grid, lay, c, zc, mu);
        const double decrease = g.dot(zc - z);
        if (cand.smoothed <= ev.smoothed + 1e-4 * decrease +
                                 4e-16 * (1.0 + std::abs(ev.smoothed))) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      stagnant =
          ev.smoothed - cand.smoothed <= 4e-16 * (1.0 + std::abs(ev.smoothed)) ? stagnant + 1 : 0;

      z = zc;
      ev = cand;
      g = transcription_gradient(model, grid, lay, c, z, mu, ev);
      ++rep.iterations;
      if (stagnant >= 3) break;  // value changes below double resolution
    }
  }
  rep.z = std::move(z);
  return rep;
}

}  // namespace

BaselineRecord baseline_full_transcription(const OcpModel& model, const TimeGrid& grid,
                                           const BaselineConfig& cfg) {
  cfg.inner.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TranscriptionLayout lay{model.n, model.m, grid.N};
  const double inf = std::numeric_limits<double>::infinity();

  Vec lower = Vec::Constant(lay.dim(), -inf);
  Vec upper = Vec::Constant(lay.dim(), inf);
  for (int j = 0; j < grid.N; ++j) {
    lower.segment(lay.control(j), model.m) = model.bounds.lower;
    upper.segment(lay.control(j), model.m) = model.bounds.upper;
  }

  SplitMix64 rng(derive_seed(cfg.seed, 0xba5eULL));
  Vec z0(lay.dim());
  for (Eigen::Index i = 0; i < lay.dim(); ++i) z0[i] = rng.uniform(cfg.init_lo, cfg.init_hi);
  z0 = z0.cwiseMax(lower).cwiseMin(upper);

  const TranscriptionSolveReport rep =
      transcription_gauss_newton(model, grid, lay, cfg.c_big, lower, upper, z0, cfg.inner);

  BaselineRecord rec;
  rec.unknown_count = static_cast<long>(lay.dim());
  rec.iterations = rep.iterations;
  const TranscriptionEval final_ev =
      eval_transcription(model, grid, lay, cfg.c_big, rep.z, cfg.inner.mu_schedule.back());
  rec.dyn_residual_inf = transcription_residual_inf(final_ev);
  rec.converged = rec.dyn_residual_inf < cfg.eps;
  rec.phi = final_ev.phi;
  rec.seconds = elapsed_seconds(t0);
  return rec;
}

std::vector<ControlTrajectory> iterate_dump(const PdpResult& result) {
  if (result.control_history.empty())
    throw std::runtime_error("iterate_dump: control history was not retained (set keep_history)");
  return result.control_history;
}

}  // namespace pdp
