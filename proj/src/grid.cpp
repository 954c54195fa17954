#include "pdp/grid.hpp"

namespace pdp {

double norm1(const Vec& v) { return v.lpNorm<1>(); }
double norm2(const Vec& v) { return v.norm(); }
double norm_inf(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

double quadrature_integral(const Vec& samples, const TimeGrid& grid) {
  const auto len = samples.size();
  if (len == grid.N) {
    return grid.dt * samples.sum();
  }
  if (len == grid.N + 1) {
    double s = 0.5 * (samples[0] + samples[len - 1]) + samples.segment(1, len - 2).sum();
    return grid.dt * s;
  }
  throw std::invalid_argument("quadrature_integral: samples length must be N or N+1");
}

ControlTrajectory project_box(const ControlTrajectory& u, const BoxBounds& bounds) {
  if (u.m() != bounds.dim())
    throw std::invalid_argument("project_box: control dimension does not match bounds");
  ControlTrajectory out = u;
  for (int r = 0; r < u.m(); ++r)
    out.values.row(r) = u.values.row(r).cwiseMax(bounds.lower[r]).cwiseMin(bounds.upper[r]);
  return out;
}

}  // namespace pdp
