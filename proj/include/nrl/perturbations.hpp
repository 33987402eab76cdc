#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nrl/targets.hpp"

namespace nrl {

// A d x d matrix J with J^T = -J, verified entrywise at construction.
class AntisymmetricMatrix {
 public:
  explicit AntisymmetricMatrix(Eigen::MatrixXd j);

  const Eigen::MatrixXd& matrix() const { return j_; }
  int dim() const { return static_cast<int>(j_.rows()); }
  double frobenius_norm() const { return j_.norm(); }

 private:
  Eigen::MatrixXd j_;
};

// Named constructors for the antisymmetric matrices used throughout.
AntisymmetricMatrix antisymmetric(const Eigen::MatrixXd& matrix);

// J = [[0, 1], [-1, 0]].
AntisymmetricMatrix rotation_2d();

// J = (1/sqrt(6)) [[0,1,1],[-1,0,1],[-1,-1,0]]; unit Frobenius norm,
// nullspace spanned by (1,-1,1).
AntisymmetricMatrix j_linear_3d();

// J = (l_hat (x) omega - omega (x) l_hat)/sqrt(2) for a unit vector omega
// orthogonal to l; J^T J is half the projector onto span{l, omega}, so the
// asymptotic variance of f(x) = l.x decays like 4|l|^2/(2 + alpha^2).
AntisymmetricMatrix optimal_linear(const Eigen::VectorXd& l, const Eigen::VectorXd& omega);

// Pairs the eigenvectors of M (eigenvalues ascending) as (k, d-k+1) and sets
// J = sum_k e_{i_k} (x) e_{j_k} - e_{j_k} (x) e_{i_k}; J^T J = I.  Requires
// even d and symmetric M.
AntisymmetricMatrix quasi_optimal_quadratic(const Eigen::MatrixXd& m);

// 2N x 2N block-circulant matrix: I2 on the superdiagonal blocks, -I2 on the
// subdiagonal blocks, -I2 top-right, I2 bottom-left.
AntisymmetricMatrix block_circulant_j1(int n_particles);

// 2N x 2N matrix acting as a rotation on the four dimer coordinates only.
AntisymmetricMatrix dimer_rotation_j2(int n_particles);

// A divergence-free drift field gamma for a target pi ~ exp(-beta V),
// together with the strength alpha.  The full sampler drift is
// b(x) = -beta grad V(x) + alpha gamma(x); for the linear kind
// gamma = -J grad V, so b(x) = -(beta I + alpha J) grad V(x).
class Perturbation {
 public:
  enum class Kind { none, linear_j, psi_truncated, matrix_field };

  using ScalarFn = std::function<double(double)>;
  using MatrixFieldFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using VectorFieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  static Perturbation none();
  static Perturbation linear(AntisymmetricMatrix j, double alpha);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const Eigen::MatrixXd& j() const { return j_; }

  // gamma(x); excludes the alpha factor.
  Eigen::VectorXd gamma(const Target& target, const Eigen::VectorXd& x) const;

  // Adds alpha * gamma(x) onto `out`; `grad` = grad V(x) and `potential` =
  // V(x) are the caller's cached evaluations (hot path for the samplers).
  void add_scaled_gamma(const Target& target, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& grad, double potential,
                        Eigen::VectorXd& out) const;

 private:
  friend Perturbation psi_truncated_flow(const AntisymmetricMatrix&, Perturbation::ScalarFn,
                                         const Target&, double);
  friend Perturbation matrix_field_flow(Perturbation::MatrixFieldFn,
                                        Perturbation::VectorFieldFn, const Target&, double);

  Kind kind_ = Kind::none;
  double alpha_ = 0.0;
  Eigen::MatrixXd j_;
  ScalarFn psi_;
  MatrixFieldFn j_field_;
  VectorFieldFn div_j_;
};

// gamma(x) = J grad V(x) psi(V(x)).  Divergence-free with respect to
// exp(-beta V) for any smooth psi >= 0; boundedness of psi(V)|grad V| is the
// caller's modelling responsibility.
Perturbation psi_truncated_flow(const AntisymmetricMatrix& j, Perturbation::ScalarFn psi,
                                const Target& target, double alpha);

// gamma(x) = -J(x) grad(beta V)(x) + div J(x), with (div J)_i = sum_j d_j J_ij.
// Antisymmetry of J(x) is checked at sampled evaluation points.
Perturbation matrix_field_flow(Perturbation::MatrixFieldFn j_field,
                               Perturbation::VectorFieldFn div_j, const Target& target,
                               double alpha);

// Full sampler drift b(x) = -beta grad V(x) + alpha gamma(x).
struct Drift {
  const Target* target = nullptr;
  const Perturbation* perturbation = nullptr;

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  void eval(const Eigen::VectorXd& x, const Eigen::VectorXd& grad, double potential,
            Eigen::VectorXd& out) const;
};

struct DivergenceReport {
  double max_normalized_divergence = 0.0;
  Eigen::VectorXd worst_point;
  double tolerance = 1e-4;
  bool pass = false;
};

// Central-difference check that div(gamma * pi_unnormalized) vanishes at the
// given points, normalised by max(pi, floor) to stay meaningful in the tails.
DivergenceReport check_divergence_free(const Perturbation& perturbation, const Target& target,
                                       const std::vector<Eigen::VectorXd>& points,
                                       double step = 1e-4, double tolerance = 1e-4);

}  // namespace nrl
