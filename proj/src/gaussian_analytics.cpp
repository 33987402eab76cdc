#include "nrl/gaussian_analytics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nrl/linalg.hpp"

namespace nrl {

QuadraticObservable QuadraticObservable::centered(Eigen::MatrixXd m, Eigen::VectorXd l) {
  const double sym_tol = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw std::invalid_argument("QuadraticObservable: M must be symmetric");
  }
  QuadraticObservable f;
  f.k = -m.trace();
  f.m = std::move(m);
  f.l = std::move(l);
  return f;
}

namespace {

Eigen::MatrixXd drift_matrix(const AntisymmetricMatrix& j, double alpha) {
  const Eigen::Index d = j.matrix().rows();
  return Eigen::MatrixXd::Identity(d, d) - alpha * j.matrix();  // A = (I + alpha J)^T
}

// 2 tr(C M^T) with C the Lyapunov solution; zero when M vanishes.
double trace_part(const Eigen::MatrixXd& m, const AntisymmetricMatrix& j, double alpha) {
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd c = solve_lyapunov(drift_matrix(j, alpha), m);
  return 2.0 * (c * m.transpose()).trace();
}

// 2 l.(I + alpha^2 J^T J)^{-1} l in the singular basis of J.  Singular
// values below 1e-10 of the largest are treated as exact zeros so nullspace
// components survive untouched however large alpha gets.
double linear_part(const Eigen::VectorXd& l, const AntisymmetricMatrix& j, double alpha) {
  if (l.size() == 0 || l.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j.matrix(), Eigen::ComputeFullV);
  const double s_max = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  const Eigen::VectorXd w = svd.matrixV().transpose() * l;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    double sigma = svd.singularValues()[i];
    if (sigma <= 1e-10 * std::max(s_max, 1e-300)) sigma = 0.0;
    sum += w[i] * w[i] / (1.0 + alpha * alpha * sigma * sigma);
  }
  return 2.0 * sum;
}

void check_shapes(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                  const AntisymmetricMatrix& j) {
  const Eigen::Index d = j.matrix().rows();
  if (m.size() != 0 && (m.rows() != d || m.cols() != d)) {
    throw std::invalid_argument("gaussian analytics: M dimension does not match J");
  }
  if (l.size() != 0 && l.size() != d) {
    throw std::invalid_argument("gaussian analytics: l dimension does not match J");
  }
}

// Projection of l onto null(J); singular values below 1e-10 of the largest
// are treated as zero.
Eigen::VectorXd nullspace_projection(const AntisymmetricMatrix& j, const Eigen::VectorXd& l) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j.matrix(), Eigen::ComputeFullV);
  const double s_max = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  Eigen::VectorXd l_null = Eigen::VectorXd::Zero(l.size());
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] <= 1e-10 * std::max(s_max, 1e-300)) {
      const Eigen::VectorXd v = svd.matrixV().col(i);
      l_null += v.dot(l) * v;
    }
  }
  return l_null;
}

}  // namespace

PoissonSolution poisson_solution(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                 const AntisymmetricMatrix& j, double alpha) {
  check_shapes(m, l, j);
  const Eigen::Index d = j.matrix().rows();
  const Eigen::MatrixXd a = drift_matrix(j, alpha);
  PoissonSolution sol;
  sol.c = (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0)
              ? Eigen::MatrixXd::Zero(d, d).eval()
              : solve_lyapunov(a, m);
  sol.d = (l.size() == 0) ? Eigen::VectorXd::Zero(d).eval()
                          : a.partialPivLu().solve(l).eval();
  sol.constant = -sol.c.trace();
  return sol;
}

double asymptotic_variance_quadratic(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                     const AntisymmetricMatrix& j, double alpha) {
  check_shapes(m, l, j);
  return trace_part(m, j, alpha) + linear_part(l, j, alpha);
}

double asymptotic_variance_quadratic_integral(const Eigen::MatrixXd& m,
                                              const Eigen::VectorXd& l,
                                              const AntisymmetricMatrix& j, double alpha) {
  check_shapes(m, l, j);
  const Eigen::Index d = j.matrix().rows();

  double trace_term = 0.0;
  if (m.size() != 0 && m.cwiseAbs().maxCoeff() > 0.0) {
    const double m_frob2 = m.squaredNorm();
    // Truncate where the integrand envelope e^{-2s} ||M||_F^2 drops below 1e-14.
    const double s_max = 0.5 * std::log(std::max(m_frob2, 1.0) * 1e14);
    auto integrand = [&](double s) {
      const Eigen::MatrixXd rot = matrix_exponential(alpha * s * j.matrix());
      return std::exp(-2.0 * s) * (rot * m * rot.transpose() * m.transpose()).trace();
    };
    trace_term = 2.0 * adaptive_simpson(integrand, 0.0, s_max, 1e-12 * std::max(m_frob2, 1.0));
  }

  double linear_term = 0.0;
  if (l.size() != 0 && l.cwiseAbs().maxCoeff() > 0.0) {
    const Eigen::MatrixXd resolvent =
        Eigen::MatrixXd::Identity(d, d) + alpha * alpha * j.matrix().transpose() * j.matrix();
    linear_term = 2.0 * l.dot(resolvent.ldlt().solve(l));
  }
  return trace_term + linear_term;
}

double variance_limit(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                      const AntisymmetricMatrix& j) {
  check_shapes(m, l, j);
  const double probe_low = asymptotic_variance_quadratic(m, l, j, 1e6);
  const double probe_high = asymptotic_variance_quadratic(m, l, j, 1e8);
  // Relative to the alpha = 0 variance, the natural scale of the curve.
  const double scale = (m.size() ? m.squaredNorm() : 0.0) + 2.0 * l.squaredNorm();
  if (std::abs(probe_high - probe_low) > 1e-4 * std::max(scale, 1.0)) {
    std::ostringstream msg;
    msg << "variance_limit: probes did not converge (" << probe_low << " vs " << probe_high
        << ")";
    throw std::runtime_error(msg.str());
  }

  double linear_limit = 0.0;
  if (l.size() != 0 && l.cwiseAbs().maxCoeff() > 0.0) {
    linear_limit = 2.0 * nullspace_projection(j, l).squaredNorm();
  }
  return trace_part(m, j, 1e8) + linear_limit;
}

double variance_lower_bound(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                            const AntisymmetricMatrix& j) {
  check_shapes(m, l, j);
  double dot_sorted = 0.0;
  if (m.size() != 0 && m.cwiseAbs().maxCoeff() > 0.0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd lam = es.eigenvalues();  // ascending
    const Eigen::Index d = lam.size();
    for (Eigen::Index i = 0; i < d; ++i) {
      dot_sorted += lam[i] * lam[d - 1 - i];
    }
  }
  double linear_term = 0.0;
  if (l.size() != 0 && l.cwiseAbs().maxCoeff() > 0.0) {
    linear_term = 2.0 * nullspace_projection(j, l).squaredNorm();
  }
  return dot_sorted + linear_term;
}

double polar_example_variance(double alpha) {
  return 4.0 * (1.0 + 1.0 / (1.0 + alpha * alpha));
}

VarianceCurve make_variance_curve(const Eigen::MatrixXd& m, const Eigen::VectorXd& l,
                                  const AntisymmetricMatrix& j,
                                  const std::vector<double>& alphas) {
  VarianceCurve curve;
  curve.alphas = alphas;
  curve.sigma2.reserve(alphas.size());
  for (double alpha : alphas) {
    curve.sigma2.push_back(asymptotic_variance_quadratic(m, l, j, alpha));
  }
  curve.limit_inf = variance_limit(m, l, j);
  curve.lower_bound = variance_lower_bound(m, l, j);
  return curve;
}

}  // namespace nrl
