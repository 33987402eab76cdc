#include "nrl/linalg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nrl {

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("matrix_exponential: matrix must be square");
  }
  const Eigen::Index d = a.rows();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm

  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  }
  const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);

  // Taylor series; for ||x|| <= 0.25 thirty terms are far past double precision.
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k <= 30; ++k) {
    term = (term * x / static_cast<double>(k)).eval();
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-300) break;
  }
  for (int i = 0; i < squarings; ++i) {
    result = (result * result).eval();
  }
  return result;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d || m.rows() != d || m.cols() != d) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  const double sym_tol = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw std::invalid_argument("solve_lyapunov: M is not symmetric");
  }

  const Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const double spectral_floor = 1e-10 * std::max(1.0, a.norm());
  for (Eigen::Index i = 0; i < d; ++i) {
    if (es.eigenvalues()[i].real() <= spectral_floor) {
      std::ostringstream msg;
      msg << "solve_lyapunov: eigenvalue with non-positive real part "
          << es.eigenvalues()[i].real();
      throw std::invalid_argument(msg.str());
    }
  }

  // vec(A P + P A^T) = (I (x) A + A (x) I) vec(P), column-major vec.
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    k.block(j * d, j * d, d, d) += a;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index c = 0; c < d; ++c) {
        k(j * d + i, c * d + i) += a(j, c);
      }
    }
  }
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(m.data(), d * d);
  const Eigen::VectorXd sol = k.partialPivLu().solve(rhs);
  Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(sol.data(), d, d);
  // Symmetrise away roundoff; the exact solution is symmetric for symmetric M.
  p = 0.5 * (p + p.transpose()).eval();
  return p;
}

namespace {

double simpson_rule(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_rule(fa, flm, fm, m - a);
  const double right = simpson_rule(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson_rule(fa, fm, fb, b - a);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace nrl
