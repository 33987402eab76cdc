#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nrl/targets.hpp"

namespace nrl {

// Deterministic reference expectations for two-dimensional targets by tensor
// trapezoid sums on nested grids (n and 2n points per axis).  On a torus the
// rule is the periodic rectangle sum over one period, which converges
// spectrally for smooth potentials; on the plane the box must cover the
// support far enough that the discarded tail mass is negligible against tol
// (the default boxes extend 12 marginal standard deviations).
struct QuadratureSpec {
  int grid_per_axis = 512;
  double x_min = 0.0, x_max = 0.0;  // ignored on a torus (one period is used)
  double y_min = 0.0, y_max = 0.0;
  double tol = 1e-8;
};

// Truncation box for the built-in planar targets, 12 standard deviations per
// marginal direction from the potential's quadratic behaviour.
QuadratureSpec default_quadrature_spec(const Target& target, int grid_per_axis = 0,
                                       double tol = 1e-8);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// E_pi[f] = (sum f e^{-beta V}) / (sum e^{-beta V}) at resolutions n and 2n;
// the error estimate is the difference of the two ratios.  Throws
// std::runtime_error (carrying the achieved error) if the estimate misses
// spec.tol.
QuadratureResult expectation_2d(const Target& target,
                                const std::function<double(const Eigen::VectorXd&)>& f,
                                const QuadratureSpec& spec);

// Normalisation constant Z = int e^{-beta V}; diagnostics only, samplers
// never need it.
QuadratureResult normalization_2d(const Target& target, const QuadratureSpec& spec);

}  // namespace nrl
