#include "pdp/model.hpp"

#include <cmath>

namespace pdp {

OcpModel make_double_integrator(double s0, double sf, double v0, double vf, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("make_double_integrator: bound a must be positive");
  OcpModel md;
  md.tag = "double_integrator";
  md.n = 2;
  md.m = 1;
  md.t_f = 1.0;
  md.x0 = (Vec(2) << s0, v0).finished();
  md.xf = (Vec(2) << sf, vf).finished();
  md.bounds = BoxBounds::symmetric(Vec::Constant(1, a));
  md.convex = true;
  md.dynamics = [](const Vec& x, const Vec& u, Vec& out) {
    out[0] = x[1];
    out[1] = u[0];
  };
  md.dynamics_jac_x = [](const Vec&, const Vec&, Mat& out) {
    out.setZero();
    out(0, 1) = 1.0;
  };
  md.dynamics_jac_u = [](const Vec&, const Vec&, Mat& out) {
    out.setZero();
    out(1, 0) = 1.0;
  };
  md.cost_integrand = [](const Vec& u) { return 0.5 * u[0] * u[0]; };
  md.cost_gradient = [](const Vec& u, Vec& out) { out[0] = u[0]; };
  md.cost_hessian_diag = [](const Vec&, Vec& out) { out[0] = 1.0; };
  return md;
}

OcpModel make_free_flying_robot() {
  OcpModel md;
  md.tag = "free_flying_robot";
  md.n = 6;
  md.m = 2;
  md.t_f = 12.0;
  md.x0 = (Vec(6) << -10.0, -10.0, M_PI / 2.0, 0.0, 0.0, 0.0).finished();
  md.xf = Vec::Zero(6);
  md.bounds = BoxBounds::symmetric((Vec(2) << 0.8, 0.4).finished());
  md.convex = false;
  md.dynamics = [](const Vec& x, const Vec& u, Vec& out) {
    const double thrust = u[0] + u[1];
    out[0] = x[3];
    out[1] = x[4];
    out[2] = x[5];
    out[3] = thrust * std::cos(x[2]);
    out[4] = thrust * std::sin(x[2]);
    out[5] = 0.2 * (u[0] - u[1]);
  };
  md.dynamics_jac_x = [](const Vec& x, const Vec& u, Mat& out) {
    const double thrust = u[0] + u[1];
    out.setZero();
    out(0, 3) = 1.0;
    out(1, 4) = 1.0;
    out(2, 5) = 1.0;
    out(3, 2) = -thrust * std::sin(x[2]);
    out(4, 2) = thrust * std::cos(x[2]);
  };
  md.dynamics_jac_u = [](const Vec& x, const Vec&, Mat& out) {
    const double c = std::cos(x[2]);
    const double s = std::sin(x[2]);
    out.setZero();
    out(3, 0) = c;
    out(3, 1) = c;
    out(4, 0) = s;
    out(4, 1) = s;
    out(5, 0) = 0.2;
    out(5, 1) = -0.2;
  };
  md.cost_integrand = [](const Vec& u) { return u[0] * u[0] + u[1] * u[1]; };
  md.cost_gradient = [](const Vec& u, Vec& out) {
    out[0] = 2.0 * u[0];
    out[1] = 2.0 * u[1];
  };
  md.cost_hessian_diag = [](const Vec&, Vec& out) {
    out[0] = 2.0;
    out[1] = 2.0;
  };
  return md;
}

OcpModel make_model_by_tag(const std::string& tag) {
  if (tag == "double_integrator") return make_double_integrator(0.0, 0.0, 1.0, 0.0, 2.5);
  if (tag == "free_flying_robot") return make_free_flying_robot();
  throw std::invalid_argument("unknown model tag: " + tag);
}

double dynamics_jacobian_check(const OcpModel& model, const Vec& x, const Vec& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("dynamics_jacobian_check: h must be positive");
  Mat Ax(model.n, model.n), Bu(model.n, model.m);
  model.dynamics_jac_x(x, u, Ax);
  model.dynamics_jac_u(x, u, Bu);

  Vec fp(model.n), fm(model.n);
  double dev = 0.0;
  for (int j = 0; j < model.n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    model.dynamics(xp, u, fp);
    model.dynamics(xm, u, fm);
    dev = std::max(dev, ((fp - fm) / (2.0 * h) - Ax.col(j)).lpNorm<Eigen::Infinity>());
  }
  for (int j = 0; j < model.m; ++j) {
    Vec up = u, um = u;
    up[j] += h;
    um[j] -= h;
    model.dynamics(x, up, fp);
    model.dynamics(x, um, fm);
    dev = std::max(dev, ((fp - fm) / (2.0 * h) - Bu.col(j)).lpNorm<Eigen::Infinity>());
  }
  return dev;
}

}  // namespace pdp
