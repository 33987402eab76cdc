#include "nrl/quadrature.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nrl/linalg.hpp"

namespace nrl {

namespace {

// Backtracking gradient descent on V restricted to one coordinate (the other
// is frozen); returns the minimising value of coordinate `axis`.
double descend_axis(const Target& target, Eigen::VectorXd point, int axis) {
  Eigen::VectorXd grad(2);
  double value = target.potential(point);
  double step = 0.5;
  for (int it = 0; it < 400; ++it) {
    target.gradient(point, grad);
    if (std::abs(grad[axis]) < 1e-12 * std::max(1.0, std::abs(value))) break;
    Eigen::VectorXd trial = point;
    trial[axis] -= step * grad[axis];
    double trial_value = target.potential(trial);
    while (trial_value > value && step > 1e-12) {
      step *= 0.5;
      trial[axis] = point[axis] - step * grad[axis];
      trial_value = target.potential(trial);
    }
    point = trial;
    value = trial_value;
    step *= 1.3;
  }
  return point[axis];
}

// V minimised over the other coordinate with coordinate `axis` pinned at t:
// the effective marginal potential along the valley floor.
double valley_potential(const Target& target, const Eigen::VectorXd& center, int axis,
                        double t) {
  Eigen::VectorXd p = center;
  p[axis] = t;
  const int other = 1 - axis;
  p[other] = descend_axis(target, p, other);
  return target.potential(p);
}

}  // namespace

QuadratureSpec default_quadrature_spec(const Target& target, int grid_per_axis, double tol) {
  QuadratureSpec spec;
  spec.grid_per_axis = grid_per_axis;
  spec.tol = tol;
  if (target.domain().kind == Domain::Kind::torus) {
    if (spec.grid_per_axis <= 0) spec.grid_per_axis = 512;
    return spec;
  }

  // Locate the minimum, then measure the marginal curvature of the valley
  // potential along each axis: 1/sqrt(beta V''/2) is the Gaussian standard
  // deviation matching the quadratic behaviour.
  Eigen::VectorXd center = target.initial_point();
  for (int sweep = 0; sweep < 4; ++sweep) {
    center[1] = descend_axis(target, center, 1);
    center[0] = descend_axis(target, center, 0);
  }

  const double kSpread = 12.0;
  Eigen::VectorXd h(2);
  for (int axis = 0; axis < 2; ++axis) {
    double delta = 1.0;
    double second = 0.0;
    for (int round = 0; round < 2; ++round) {
      const double vc = valley_potential(target, center, axis, center[axis]);
      const double vp = valley_potential(target, center, axis, center[axis] + delta);
      const double vm = valley_potential(target, center, axis, center[axis] - delta);
      second = (vp - 2.0 * vc + vm) / (delta * delta);
      if (!(second > 0.0)) {
        second = 1.0;
        break;
      }
      delta = 0.5 / std::sqrt(0.5 * second * target.beta());
    }
    h[axis] = 1.0 / std::sqrt(0.5 * second * target.beta());
  }
  spec.x_min = center[0] - kSpread * h[0];
  spec.x_max = center[0] + kSpread * h[0];
  spec.y_min = center[1] - kSpread * h[1];
  spec.y_max = center[1] + kSpread * h[1];

  // Extend the y-range to cover the valley floor across the whole x-range
  // (the warped ridge bends far below any fixed-height box).
  const int probes = 64;
  for (int i = 0; i <= probes; ++i) {
    Eigen::VectorXd p = center;
    p[0] = spec.x_min + (spec.x_max - spec.x_min) * i / probes;
    const double y_star = descend_axis(target, p, 1);
    spec.y_min = std::min(spec.y_min, y_star - kSpread * h[1]);
    spec.y_max = std::max(spec.y_max, y_star + kSpread * h[1]);
  }

  // Auto grid: at least three points per marginal standard deviation on each
  // axis, rounded up to a power of two.
  if (spec.grid_per_axis <= 0) {
    const double need_x = (spec.x_max - spec.x_min) / (h[0] / 3.0);
    const double need_y = (spec.y_max - spec.y_min) / (h[1] / 3.0);
    int n = 256;
    while (n < std::max(need_x, need_y) && n < 8192) n *= 2;
    spec.grid_per_axis = n;
  }
  return spec;
}

namespace {

struct GridSums {
  double z = 0.0;       // sum of weights * e^{-beta V}
  double f_int = 0.0;   // sum of weights * f * e^{-beta V}
};

// Tensor trapezoid at resolution n per axis.  Row sums are accumulated
// pairwise so the result does not depend on evaluation order.
GridSums tensor_sums(const Target& target,
                     const std::function<double(const Eigen::VectorXd&)>& f,
                     const QuadratureSpec& spec, int n) {
  const bool torus = target.domain().kind == Domain::Kind::torus;
  const double period = target.domain().period;
  const double x0 = torus ? 0.0 : spec.x_min;
  const double x1 = torus ? period : spec.x_max;
  const double y0 = torus ? 0.0 : spec.y_min;
  const double y1 = torus ? period : spec.y_max;
  const int nx = n;
  const int ny = n;
  // Periodic grids identify the endpoint; closed grids include it.
  const double hx = torus ? (x1 - x0) / nx : (x1 - x0) / (nx - 1);
  const double hy = torus ? (y1 - y0) / ny : (y1 - y0) / (ny - 1);

  std::vector<double> row_z(ny), row_f(ny);
  std::vector<double> col_z(nx), col_f(nx);
  Eigen::VectorXd p(2);
  for (int iy = 0; iy < ny; ++iy) {
    p[1] = y0 + hy * iy;
    const double wy = (!torus && (iy == 0 || iy == ny - 1)) ? 0.5 : 1.0;
    for (int ix = 0; ix < nx; ++ix) {
      p[0] = x0 + hx * ix;
      const double wx = (!torus && (ix == 0 || ix == nx - 1)) ? 0.5 : 1.0;
      const double density = std::exp(-target.beta() * target.potential(p));
      const double w = wx * wy;
      col_z[ix] = w * density;
      col_f[ix] = w * density * f(p);
    }
    row_z[iy] = pairwise_sum(col_z);
    row_f[iy] = pairwise_sum(col_f);
  }
  GridSums sums;
  sums.z = pairwise_sum(row_z) * hx * hy;
  sums.f_int = pairwise_sum(row_f) * hx * hy;
  return sums;
}

void check_2d(const Target& target) {
  if (target.dim() != 2) {
    throw std::invalid_argument("quadrature: only two-dimensional targets supported");
  }
}

}  // namespace

QuadratureResult expectation_2d(const Target& target,
                                const std::function<double(const Eigen::VectorXd&)>& f,
                                const QuadratureSpec& spec) {
  check_2d(target);
  const GridSums coarse = tensor_sums(target, f, spec, spec.grid_per_axis);
  const GridSums fine = tensor_sums(target, f, spec, 2 * spec.grid_per_axis);
  const double ratio_coarse = coarse.f_int / coarse.z;
  const double ratio_fine = fine.f_int / fine.z;

  QuadratureResult result;
  result.value = ratio_fine;
  result.error_estimate = std::abs(ratio_fine - ratio_coarse);
  if (!(result.error_estimate <= spec.tol)) {
    std::ostringstream msg;
    msg << "expectation_2d: not converged at " << 2 * spec.grid_per_axis
        << " points per axis, error estimate " << result.error_estimate << " > tol "
        << spec.tol;
    throw std::runtime_error(msg.str());
  }
  return result;
}

QuadratureResult normalization_2d(const Target& target, const QuadratureSpec& spec) {
  check_2d(target);
  auto one = [](const Eigen::VectorXd&) { return 1.0; };
  const GridSums coarse = tensor_sums(target, one, spec, spec.grid_per_axis);
  const GridSums fine = tensor_sums(target, one, spec, 2 * spec.grid_per_axis);

  QuadratureResult result;
  result.value = fine.z;
  result.error_estimate = std::abs(fine.z - coarse.z);
  if (!(result.error_estimate <= spec.tol * std::max(std::abs(fine.z), 1.0))) {
    std::ostringstream msg;
    msg << "normalization_2d: not converged at " << 2 * spec.grid_per_axis
        << " points per axis, error estimate " << result.error_estimate;
    throw std::runtime_error(msg.str());
  }
  return result;
}

}  // namespace nrl
