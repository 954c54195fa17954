#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace pdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform partition of [0, t_f] into N subintervals, dt = t_f / N.
struct TimeGrid {
  double t_f = 1.0;
  int N = 2;
  double dt = 0.5;

  TimeGrid(double t_f_, int N_) : t_f(t_f_), N(N_) {
    if (!(t_f_ > 0.0)) throw std::invalid_argument("TimeGrid: t_f must be positive");
    if (N_ < 2) throw std::invalid_argument("TimeGrid: N must be >= 2");
    dt = t_f / static_cast<double>(N);
  }

  double node(int i) const { return dt * static_cast<double>(i); }
};

/// Piecewise-constant controls: values(r, j) = u_r on [t_j, t_{j+1}), j = 0..N-1.
struct ControlTrajectory {
  Mat values;  // m x N

  ControlTrajectory() = default;
  ControlTrajectory(int m, int N) : values(Mat::Zero(m, N)) {}
  explicit ControlTrajectory(Mat v) : values(std::move(v)) {}

  int m() const { return static_cast<int>(values.rows()); }
  int N() const { return static_cast<int>(values.cols()); }
  bool all_finite() const { return values.allFinite(); }
};

/// Node states: values(p, i) = x_p(t_i), i = 0..N.
struct StateTrajectory {
  Mat values;  // n x (N+1)

  StateTrajectory() = default;
  StateTrajectory(int n, int N) : values(Mat::Zero(n, N + 1)) {}

  int n() const { return static_cast<int>(values.rows()); }
  int N() const { return static_cast<int>(values.cols()) - 1; }
  Vec terminal() const { return values.col(values.cols() - 1); }
};

/// Componentwise control bounds, lower[i] < upper[i].
struct BoxBounds {
  Vec lower, upper;

  BoxBounds() = default;
  BoxBounds(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size())
      throw std::invalid_argument("BoxBounds: dimension mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw std::invalid_argument("BoxBounds: lower must be < upper componentwise");
  }

  /// Symmetric box [-a_i, a_i].
  static BoxBounds symmetric(const Vec& a) { return BoxBounds(-a, a); }

  int dim() const { return static_cast<int>(lower.size()); }
};

double norm1(const Vec& v);
double norm2(const Vec& v);
double norm_inf(const Vec& v);

/// Delta-t weighted sum. Samples of length N use the rectangle rule on control
/// intervals; length N+1 uses the trapezoid rule on nodes.
double quadrature_integral(const Vec& samples, const TimeGrid& grid);

/// Componentwise clamp of each control channel to its bounds. Idempotent.
ControlTrajectory project_box(const ControlTrajectory& u, const BoxBounds& bounds);

}  // namespace pdp
