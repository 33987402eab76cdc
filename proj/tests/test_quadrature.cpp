#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nrl/quadrature.hpp"
#include "nrl/targets.hpp"

using nrl::QuadratureSpec;
using nrl::Target;

namespace {

Target flat_torus() {
  auto zero_potential = [](const Eigen::VectorXd&) { return 0.0; };
  auto zero_gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g.setZero(x.size()); };
  return Target(nrl::Domain::torus(2, 1.0), 1.0, zero_potential, zero_gradient,
                Eigen::VectorXd::Zero(2));
}

double norm_squared(const Eigen::VectorXd& x) { return x.squaredNorm(); }

}  // namespace

TEST_CASE("standard gaussian moments and normalisation") {
  const Target gauss = nrl::standard_gaussian(2);
  const QuadratureSpec spec = nrl::default_quadrature_spec(gauss, 512, 1e-8);

  const auto moment = nrl::expectation_2d(gauss, norm_squared, spec);
  CHECK(std::abs(moment.value - 2.0) < 1e-8);
  CHECK(moment.error_estimate <= 1e-8);

  const auto z = nrl::normalization_2d(gauss, spec);
  CHECK(std::abs(z.value - 2.0 * std::numbers::pi) < 1e-8);
}

TEST_CASE("warped gaussian matches the change-of-variables closed forms") {
  // With z = x2 + b x1^2 - 100 b the density factorises: x1 ~ N(0, 50) and
  // z ~ N(0, 1/2) independently.  Then
  //   E|x|^2 = E x1^2 + E (z - b(x1^2 - 100))^2
  //          = 50 + 1/2 + b^2 (Var x1^2 + (E x1^2 - 100)^2) = 69.25,
  //   Z = sqrt(100 pi) * sqrt(pi) = 10 pi.
  const double b = 0.05;
  const double expected_moment =
      50.0 + 0.5 + b * b * (2.0 * 50.0 * 50.0 + (50.0 - 100.0) * (50.0 - 100.0));
  CHECK(expected_moment == doctest::Approx(69.25));

  const Target warped = nrl::warped_gaussian(b);
  const QuadratureSpec spec = nrl::default_quadrature_spec(warped, 2048, 1e-6);
  const auto moment = nrl::expectation_2d(warped, norm_squared, spec);
  CHECK(std::abs(moment.value - expected_moment) < 1e-6);

  const auto z = nrl::normalization_2d(warped, spec);
  CHECK(std::abs(z.value - 10.0 * std::numbers::pi) < 1e-6 * 10.0 * std::numbers::pi);
}

TEST_CASE("flat torus has unit mass") {
  const Target flat = flat_torus();
  QuadratureSpec spec;
  spec.grid_per_axis = 64;
  spec.tol = 1e-12;
  const auto z = nrl::normalization_2d(flat, spec);
  CHECK(z.value == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("periodic target: the paper observable converges on the periodic grid") {
  const Target periodic = nrl::periodic_2d(10.0);
  auto f = [](const Eigen::VectorXd& x) {
    const double s = std::sin(4.0 * std::numbers::pi * x[0]);
    const double c = std::cos(4.0 * std::numbers::pi * x[1]);
    return 1.0 + 4.0 * s * s + 4.0 * c * c;
  };
  QuadratureSpec spec;
  spec.grid_per_axis = 1024;
  spec.tol = 1e-8;
  const auto result = nrl::expectation_2d(periodic, f, spec);
  CHECK(result.error_estimate <= 1e-8);

  // Grid-refinement oracle: a much coarser grid already agrees.
  QuadratureSpec coarse = spec;
  coarse.grid_per_axis = 256;
  const auto check = nrl::expectation_2d(periodic, f, coarse);
  CHECK(std::abs(check.value - result.value) < 1e-8);
}

TEST_CASE("trapezoid error contracts by at least 4x when the grid doubles") {
  const Target periodic = nrl::periodic_2d(10.0);
  auto f = [](const Eigen::VectorXd& x) {
    return std::exp(std::sin(2.0 * std::numbers::pi * x[0])) +
           0.5 * std::cos(2.0 * std::numbers::pi * x[1]);
  };
  // Small grids so the error is still far from machine precision.
  QuadratureSpec tiny;
  tiny.grid_per_axis = 6;
  tiny.tol = 1.0;
  QuadratureSpec doubled;
  doubled.grid_per_axis = 12;
  doubled.tol = 1.0;
  QuadratureSpec reference;
  reference.grid_per_axis = 512;
  reference.tol = 1e-8;

  const double truth = nrl::expectation_2d(periodic, f, reference).value;
  const double err_tiny = std::abs(nrl::expectation_2d(periodic, f, tiny).value - truth);
  const double err_doubled = std::abs(nrl::expectation_2d(periodic, f, doubled).value - truth);
  CHECK(err_doubled * 4.0 <= err_tiny);
}

TEST_CASE("unconverged quadrature is refused with the achieved error attached") {
  const Target warped = nrl::warped_gaussian(0.05);
  QuadratureSpec spec = nrl::default_quadrature_spec(warped, 8, 1e-12);
  CHECK_THROWS_AS(nrl::expectation_2d(warped, norm_squared, spec), std::runtime_error);
  try {
    nrl::expectation_2d(warped, norm_squared, spec);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("error estimate") != std::string::npos);
  }
}

TEST_CASE("quadrature rejects non-planar targets") {
  const Target gauss3 = nrl::standard_gaussian(3);
  QuadratureSpec spec;
  CHECK_THROWS_AS(nrl::expectation_2d(gauss3, norm_squared, spec), std::invalid_argument);
}
