#include "nrl/perturbations.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nrl {

AntisymmetricMatrix::AntisymmetricMatrix(Eigen::MatrixXd j) : j_(std::move(j)) {
  if (j_.rows() != j_.cols()) {
    throw std::invalid_argument("AntisymmetricMatrix: matrix must be square");
  }
  for (Eigen::Index r = 0; r < j_.rows(); ++r) {
    for (Eigen::Index c = 0; c < j_.cols(); ++c) {
      const double sym = j_(r, c) + j_(c, r);
      if (std::abs(sym) > 1e-14) {
        std::ostringstream msg;
        msg << "AntisymmetricMatrix: J(" << r << "," << c << ") + J(" << c << "," << r
            << ") = " << sym << " exceeds 1e-14";
        throw std::invalid_argument(msg.str());
      }
    }
  }
}

AntisymmetricMatrix antisymmetric(const Eigen::MatrixXd& matrix) {
  return AntisymmetricMatrix(matrix);
}

AntisymmetricMatrix rotation_2d() {
  Eigen::MatrixXd j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return AntisymmetricMatrix(std::move(j));
}

AntisymmetricMatrix j_linear_3d() {
  Eigen::MatrixXd j(3, 3);
  j << 0.0, 1.0, 1.0, -1.0, 0.0, 1.0, -1.0, -1.0, 0.0;
  j /= std::sqrt(6.0);
  return AntisymmetricMatrix(std::move(j));
}

AntisymmetricMatrix optimal_linear(const Eigen::VectorXd& l, const Eigen::VectorXd& omega) {
  if (l.size() != omega.size()) {
    throw std::invalid_argument("optimal_linear: l and omega must have equal dimension");
  }
  const double l_norm = l.norm();
  if (!(l_norm > 0.0)) throw std::invalid_argument("optimal_linear: l must be nonzero");
  if (std::abs(omega.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("optimal_linear: omega must be a unit vector");
  }
  if (std::abs(l.dot(omega)) > 1e-12 * l_norm) {
    throw std::invalid_argument("optimal_linear: omega must be orthogonal to l");
  }
  const Eigen::VectorXd l_hat = l / l_norm;
  Eigen::MatrixXd j = (l_hat * omega.transpose() - omega * l_hat.transpose()) / std::sqrt(2.0);
  return AntisymmetricMatrix(std::move(j));
}

AntisymmetricMatrix quasi_optimal_quadratic(const Eigen::MatrixXd& m) {
  const Eigen::Index d = m.rows();
  if (m.cols() != d) throw std::invalid_argument("quasi_optimal_quadratic: M must be square");
  if (d % 2 != 0) throw std::invalid_argument("quasi_optimal_quadratic: dimension must be even");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("quasi_optimal_quadratic: M must be symmetric");
  }
  // Eigenvalues come out ascending; ties keep the solver's vector order.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::MatrixXd& vecs = es.eigenvectors();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < d / 2; ++k) {
    const auto ei = vecs.col(k);
    const auto ej = vecs.col(d - 1 - k);
    j += ei * ej.transpose() - ej * ei.transpose();
  }
  return AntisymmetricMatrix(std::move(j));
}

AntisymmetricMatrix block_circulant_j1(int n_particles) {
  if (n_particles < 3) throw std::invalid_argument("block_circulant_j1: need N >= 3");
  const int n = n_particles;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  auto put_block = [&](int bi, int bj, double v) {
    j(2 * bi, 2 * bj) = v;
    j(2 * bi + 1, 2 * bj + 1) = v;
  };
  for (int b = 0; b + 1 < n; ++b) {
    put_block(b, b + 1, 1.0);
    put_block(b + 1, b, -1.0);
  }
  put_block(0, n - 1, -1.0);
  put_block(n - 1, 0, 1.0);
  return AntisymmetricMatrix(std::move(j));
}

AntisymmetricMatrix dimer_rotation_j2(int n_particles) {
  if (n_particles < 2) throw std::invalid_argument("dimer_rotation_j2: need N >= 2");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n_particles, 2 * n_particles);
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j(2, 0) = -1.0;
  j(3, 1) = -1.0;
  return AntisymmetricMatrix(std::move(j));
}

Perturbation Perturbation::none() {
  Perturbation p;
  p.kind_ = Kind::none;
  return p;
}

Perturbation Perturbation::linear(AntisymmetricMatrix j, double alpha) {
  Perturbation p;
  p.kind_ = Kind::linear_j;
  p.j_ = j.matrix();
  p.alpha_ = alpha;
  return p;
}

Perturbation psi_truncated_flow(const AntisymmetricMatrix& j, Perturbation::ScalarFn psi,
                                const Target& target, double alpha) {
  if (j.dim() != target.dim()) {
    throw std::invalid_argument("psi_truncated_flow: J dimension does not match target");
  }
  Perturbation p;
  p.kind_ = Perturbation::Kind::psi_truncated;
  p.j_ = j.matrix();
  p.psi_ = std::move(psi);
  p.alpha_ = alpha;
  return p;
}

Perturbation matrix_field_flow(Perturbation::MatrixFieldFn j_field,
                               Perturbation::VectorFieldFn div_j, const Target& target,
                               double alpha) {
  if (!j_field || !div_j) {
    throw std::invalid_argument("matrix_field_flow: J(x) and div J(x) are both required");
  }
  (void)target;
  Perturbation p;
  p.kind_ = Perturbation::Kind::matrix_field;
  p.j_field_ = std::move(j_field);
  p.div_j_ = std::move(div_j);
  p.alpha_ = alpha;
  return p;
}

Eigen::VectorXd Perturbation::gamma(const Target& target, const Eigen::VectorXd& x) const {
  switch (kind_) {
    case Kind::none:
      return Eigen::VectorXd::Zero(x.size());
    case Kind::linear_j:
      return -(j_ * target.gradient(x));
    case Kind::psi_truncated:
      return (j_ * target.gradient(x)) * psi_(target.potential(x));
    case Kind::matrix_field: {
      const Eigen::MatrixXd jx = j_field_(x);
      const double asym = (jx + jx.transpose()).cwiseAbs().maxCoeff();
      if (asym > 1e-10 * std::max(1.0, jx.cwiseAbs().maxCoeff())) {
        std::ostringstream msg;
        msg << "matrix_field perturbation: J(x) not antisymmetric at a sampled point "
            << "(max |J + J^T| = " << asym << ")";
        throw std::invalid_argument(msg.str());
      }
      return -target.beta() * (jx * target.gradient(x)) + div_j_(x);
    }
  }
  return Eigen::VectorXd::Zero(x.size());
}

void Perturbation::add_scaled_gamma(const Target& target, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& grad, double potential,
                                    Eigen::VectorXd& out) const {
  switch (kind_) {
    case Kind::none:
      return;
    case Kind::linear_j:
      out.noalias() -= alpha_ * (j_ * grad);
      return;
    case Kind::psi_truncated:
      out.noalias() += (alpha_ * psi_(potential)) * (j_ * grad);
      return;
    case Kind::matrix_field: {
      const Eigen::MatrixXd jx = j_field_(x);
      const double asym = (jx + jx.transpose()).cwiseAbs().maxCoeff();
      if (asym > 1e-10 * std::max(1.0, jx.cwiseAbs().maxCoeff())) {
        std::ostringstream msg;
        msg << "matrix_field perturbation: J(x) not antisymmetric at a sampled point "
            << "(max |J + J^T| = " << asym << ")";
        throw std::invalid_argument(msg.str());
      }
      out.noalias() -= (alpha_ * target.beta()) * (jx * grad);
      out += alpha_ * div_j_(x);
      return;
    }
  }
}

Eigen::VectorXd Drift::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd grad(x.size());
  const double potential = target->potential_and_gradient(x, grad);
  Eigen::VectorXd out(x.size());
  eval(x, grad, potential, out);
  return out;
}

void Drift::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double potential,
                 Eigen::VectorXd& out) const {
  out.noalias() = -target->beta() * grad;
  if (perturbation != nullptr && perturbation->kind() != Perturbation::Kind::none &&
      perturbation->alpha() != 0.0) {
    perturbation->add_scaled_gamma(*target, x, grad, potential, out);
  }
}

DivergenceReport check_divergence_free(const Perturbation& perturbation, const Target& target,
                                       const std::vector<Eigen::VectorXd>& points, double step,
                                       double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("check_divergence_free: step must be > 0");
  constexpr double kDensityFloor = 1e-300;

  DivergenceReport report;
  report.tolerance = tolerance;
  auto flux = [&](const Eigen::VectorXd& y, Eigen::Index component) {
    const double density = std::exp(-target.beta() * target.potential(y));
    return perturbation.gamma(target, y)[component] * density;
  };
  for (const auto& point : points) {
    double divergence = 0.0;
    Eigen::VectorXd y = point;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
      y[i] = point[i] + step;
      const double forward = flux(y, i);
      y[i] = point[i] - step;
      const double backward = flux(y, i);
      y[i] = point[i];
      divergence += (forward - backward) / (2.0 * step);
    }
    const double density = std::exp(-target.beta() * target.potential(point));
    const double normalized = std::abs(divergence) / std::max(density, kDensityFloor);
    if (normalized > report.max_normalized_divergence) {
      report.max_normalized_divergence = normalized;
      report.worst_point = point;
    }
  }
  report.pass = report.max_normalized_divergence <= tolerance;
  return report;
}

}  // namespace nrl
