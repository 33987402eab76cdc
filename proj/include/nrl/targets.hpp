#pragma once

#include <Eigen/Dense>
#include <functional>

namespace nrl {

struct Domain {
  enum class Kind { euclidean, torus };

  Kind kind = Kind::euclidean;
  int dim = 1;
  double period = 0.0;  // torus only, side length L > 0

  // Reduce torus coordinates to [0, L); identity on Euclidean domains.
  Eigen::VectorXd wrap(const Eigen::VectorXd& x) const;

  // Signed componentwise displacement a - b reduced to [-L/2, L/2).
  Eigen::VectorXd min_image(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  static Domain euclidean(int dim);
  static Domain torus(int dim, double period);
};

// A target distribution pi(x) proportional to exp(-beta V(x)).  The
// normalisation constant is never needed by the samplers.  Immutable after
// construction and safe to share across concurrent chains.
class Target {
 public:
  using PotentialFn = std::function<double(const Eigen::VectorXd&)>;
  using GradientFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
  using FusedFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

  Target() = default;
  Target(Domain domain, double beta, PotentialFn potential, GradientFn gradient,
         Eigen::VectorXd initial_point, FusedFn fused = nullptr);

  const Domain& domain() const { return domain_; }
  double beta() const { return beta_; }
  int dim() const { return domain_.dim; }

  // V(x); torus coordinates are wrapped before evaluation.
  double potential(const Eigen::VectorXd& x) const;

  // grad V(x) written into `out` (resized as needed).
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  // V(x) and grad V(x) in one pass; pair potentials supply a fused
  // evaluator so the samplers pay for one sweep, not two.
  double potential_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad_out) const;

  double log_density_unnormalized(const Eigen::VectorXd& x) const {
    return -beta_ * potential(x);
  }

  const Eigen::VectorXd& initial_point() const { return initial_point_; }

 private:
  Domain domain_;
  double beta_ = 1.0;
  PotentialFn potential_;
  GradientFn gradient_;
  FusedFn fused_;
  Eigen::VectorXd initial_point_;
};

struct DimerParams {
  int n_particles = 16;      // N >= 3: two dimer particles plus solvent
  double box_length = 0.0;   // periodic box side L; must satisfy r0 < L/2
  double epsilon = 1.0;
  double sigma = 1.0;
  double barrier_height = 1.0;  // h
  double well_half_width = 0.5; // w > 0
  double coincidence_floor = 1e-12;

  double cutoff() const;  // r0 = 2^(1/6) sigma
  void validate() const;
};

// V(x) = |x|^2 / 2 with beta = 1; pi = N(0, I).
Target standard_gaussian(int dim);

// V(x) = x1^2/100 + (x2 + b x1^2 - 100 b)^2, beta = 1, on R^2.
Target warped_gaussian(double b);

// V(x) = sin(2 pi x1) cos(2 pi x2) on the unit torus.
Target periodic_2d(double beta);

// Dimer pair bonded by a double-well potential in a WCA solvent on a
// periodic box; dim = 2N.  Near-coincident particles raise std::domain_error.
Target dimer_solvent(const DimerParams& params, double beta = 1.0);

// xi(q) = (|q1 - q2| - r0) / (2w) with the minimum-image distance.
double reaction_coordinate(const Eigen::VectorXd& q, const DimerParams& params);

// Square-lattice start with the dimer pair at distance r0; any
// non-overlapping configuration works, this one is reproducible.
Eigen::VectorXd dimer_initial_configuration(const DimerParams& params);

}  // namespace nrl
