#pragma once

#include <functional>
#include <string>

#include "pdp/grid.hpp"

namespace pdp {

/// Control problem on [0, t_f]:
///   min integral of cost_integrand(u)  s.t.  x' = f(x,u), x(0) = x0, x(t_f) = xf,
///   u(t) in the box.
/// Dynamics must be affine in u. Callbacks write into caller-provided storage.
struct OcpModel {
  std::string tag;
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  double t_f = 1.0;
  Vec x0, xf;
  BoxBounds bounds;
  bool convex = false;  // true when the penalized inner problem is convex

  // f(x, u) -> out (n)
  std::function<void(const Vec&, const Vec&, Vec&)> dynamics;
  // df/dx at (x, u) -> out (n x n)
  std::function<void(const Vec&, const Vec&, Mat&)> dynamics_jac_x;
  // df/du at (x, u) -> out (n x m)
  std::function<void(const Vec&, const Vec&, Mat&)> dynamics_jac_u;
  // running cost f0(u); includes the model's own constant factor
  std::function<double(const Vec&)> cost_integrand;
  // d f0 / du -> out (m)
  std::function<void(const Vec&, Vec&)> cost_gradient;
  // diagonal of d^2 f0 / du^2 -> out (m); used to precondition inner solves
  std::function<void(const Vec&, Vec&)> cost_hessian_diag;
};

/// Double integrator: x1' = x2, x2' = u, cost u^2/2, |u| <= a,
/// boundary data (s0, v0) -> (sf, vf) over unit time.
OcpModel make_double_integrator(double s0, double sf, double v0, double vf, double a);

/// Free-flying robot: planar rigid body driven by two jets, 12 time units,
/// cost u1^2 + u2^2, |u1| <= 0.8, |u2| <= 0.4, rest-to-rest from
/// (-10, -10, pi/2, 0, 0, 0) to the origin.
OcpModel make_free_flying_robot();

OcpModel make_model_by_tag(const std::string& tag);

/// Max absolute deviation between analytic dynamics Jacobians and central
/// differences with step h, over both the state and control blocks.
double dynamics_jacobian_check(const OcpModel& model, const Vec& x, const Vec& u, double h);

}  // namespace pdp
