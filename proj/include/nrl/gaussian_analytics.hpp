#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nrl/perturbations.hpp"

namespace nrl {

// Closed-form asymptotic variances for the linear diffusion
// dX = -(I + alpha J) X dt + sqrt(2) dW, whose stationary law is N(0, I),
// and observables f(x) = x.Mx + l.x + k.

struct QuadraticObservable {
  Eigen::MatrixXd m;
  Eigen::VectorXd l;
  double k = 0.0;

  // k = -tr M, which centres f under N(0, I).
  static QuadraticObservable centered(Eigen::MatrixXd m, Eigen::VectorXd l);

  double eval(const Eigen::VectorXd& x) const { return x.dot(m * x) + l.dot(x) + k; }
};

// Quadratic ansatz phi(x) = x.Cx + D.x - tr C solving the Poisson equation
// -L phi = f - pi(f) for the linear diffusion.  The defining equations are
//   sym(A (C + C^T)) = M,  A D = l,  tr C = tr M / 2,  with A = I - alpha J.
struct PoissonSolution {
  Eigen::MatrixXd c;
  Eigen::VectorXd d;
  double constant = 0.0;  // -tr C
};

struct VarianceCurve {
  std::vector<double> alphas;
  std::vector<double> sigma2;
  double limit_inf = 0.0;
  double lower_bound = 0.0;
};

// Solves A P + P A^T = M (see linalg.hpp); re-exported here because the
// quadratic Poisson solution is exactly such a Lyapunov solve.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m);

PoissonSolution poisson_solution(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                 const AntisymmetricMatrix& j, double alpha);

// sigma^2_f(alpha) = 2 tr(C M^T) + 2 l.(I + alpha^2 J^T J)^{-1} l with C from
// poisson_solution.  The linear term is evaluated in the eigenbasis of J^T J,
// which stays stable for very large alpha.
double asymptotic_variance_quadratic(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                     const AntisymmetricMatrix& j, double alpha);

// Independent evaluation path:
//   2 int_0^inf e^{-2s} tr[e^{alpha J s} M e^{-alpha J s} M^T] ds + linear term
// by adaptive quadrature with matrix exponentials.  Used as a cross-check of
// the Lyapunov route; the two agree to ~1e-10 at moderate alpha.
double asymptotic_variance_quadratic_integral(const Eigen::MatrixXd& m,
                                              const Eigen::VectorXd& l,
                                              const AntisymmetricMatrix& j, double alpha);

// lim_{alpha -> inf} sigma^2_f(alpha): exact nullspace projection for the
// linear part plus a large-alpha probe (1e6 and 1e8, consistency to 1e-4
// relative required) for the trace part.  Throws on probe disagreement.
double variance_limit(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                      const AntisymmetricMatrix& j);

// underline sigma^2_f = lambda_desc(M).lambda_asc(M) + 2 |l_N|^2, N = null(J).
double variance_lower_bound(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                            const AntisymmetricMatrix& j);

// The rotationally perturbed 2D standard Gaussian with f(x) = 2 x1^2 has
// sigma^2_f(alpha) = 4 (1 + 1/(1 + alpha^2)); this serves as the simulation
// oracle for the polar-coordinate model.
double polar_example_variance(double alpha);

VarianceCurve make_variance_curve(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                  const AntisymmetricMatrix& j,
                                  const std::vector<double>& alphas);

}  // namespace nrl
