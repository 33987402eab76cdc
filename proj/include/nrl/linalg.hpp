#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace nrl {

// exp(A) by scaling-and-squaring with a norm-controlled Taylor series.
// Relative accuracy is well below 1e-12 for the moderate dimensions
// (d <= 32) used here.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

// Solves A P + P A^T = M via the d^2 x d^2 Kronecker system.  Requires
// spec(A) in the open right half-plane and M symmetric; violations throw
// std::invalid_argument.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m);

// Adaptive Simpson quadrature on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol);

// Pairwise (cascade) summation; order-fixed for deterministic results.
double pairwise_sum(std::span<const double> values);

}  // namespace nrl
