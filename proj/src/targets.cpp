#include "nrl/targets.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nrl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Domain Domain::euclidean(int dim) {
  if (dim < 1) throw std::invalid_argument("Domain: dim must be >= 1");
  return Domain{Kind::euclidean, dim, 0.0};
}

Domain Domain::torus(int dim, double period) {
  if (dim < 1) throw std::invalid_argument("Domain: dim must be >= 1");
  if (!(period > 0.0)) throw std::invalid_argument("Domain: period must be > 0");
  return Domain{Kind::torus, dim, period};
}

Eigen::VectorXd Domain::wrap(const Eigen::VectorXd& x) const {
  if (kind == Kind::euclidean) return x;
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] -= period * std::floor(y[i] / period);
    if (y[i] >= period) y[i] = 0.0;  // guard against floor roundoff at L
  }
  return y;
}

Eigen::VectorXd Domain::min_image(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  Eigen::VectorXd d = a - b;
  if (kind == Kind::euclidean) return d;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d[i] -= period * std::round(d[i] / period);
  }
  return d;
}

Target::Target(Domain domain, double beta, PotentialFn potential, GradientFn gradient,
               Eigen::VectorXd initial_point, FusedFn fused)
    : domain_(domain),
      beta_(beta),
      potential_(std::move(potential)),
      gradient_(std::move(gradient)),
      fused_(std::move(fused)),
      initial_point_(std::move(initial_point)) {
  if (!(beta_ > 0.0)) throw std::invalid_argument("Target: beta must be > 0");
}

double Target::potential(const Eigen::VectorXd& x) const {
  if (domain_.kind == Domain::Kind::torus) return potential_(domain_.wrap(x));
  return potential_(x);
}

void Target::gradient(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  if (domain_.kind == Domain::Kind::torus) {
    gradient_(domain_.wrap(x), out);
  } else {
    gradient_(x, out);
  }
}

Eigen::VectorXd Target::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(domain_.dim);
  gradient(x, out);
  return out;
}

double Target::potential_and_gradient(const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad_out) const {
  if (fused_) {
    if (domain_.kind == Domain::Kind::torus) return fused_(domain_.wrap(x), grad_out);
    return fused_(x, grad_out);
  }
  gradient(x, grad_out);
  return potential(x);
}

Target standard_gaussian(int dim) {
  if (dim < 1) throw std::invalid_argument("standard_gaussian: dim must be >= 1");
  auto potential = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
  auto gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = x; };
  return Target(Domain::euclidean(dim), 1.0, potential, gradient,
                Eigen::VectorXd::Zero(dim));
}

Target warped_gaussian(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("warped_gaussian: b must be > 0");
  auto potential = [b](const Eigen::VectorXd& x) {
    const double z = x[1] + b * x[0] * x[0] - 100.0 * b;
    return x[0] * x[0] / 100.0 + z * z;
  };
  auto gradient = [b](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double z = x[1] + b * x[0] * x[0] - 100.0 * b;
    g.resize(2);
    g[0] = x[0] / 50.0 + 4.0 * b * x[0] * z;
    g[1] = 2.0 * z;
  };
  return Target(Domain::euclidean(2), 1.0, potential, gradient, Eigen::VectorXd::Zero(2));
}

Target periodic_2d(double beta) {
  auto potential = [](const Eigen::VectorXd& x) {
    return std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
  };
  auto gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g[0] = kTwoPi * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    g[1] = -kTwoPi * std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
  };
  return Target(Domain::torus(2, 1.0), beta, potential, gradient, Eigen::VectorXd::Zero(2));
}

double DimerParams::cutoff() const { return std::pow(2.0, 1.0 / 6.0) * sigma; }

void DimerParams::validate() const {
  if (n_particles < 3) throw std::invalid_argument("DimerParams: need N >= 3 particles");
  if (!(epsilon > 0.0)) throw std::invalid_argument("DimerParams: epsilon must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("DimerParams: sigma must be > 0");
  if (!(barrier_height > 0.0)) throw std::invalid_argument("DimerParams: h must be > 0");
  if (!(well_half_width > 0.0)) throw std::invalid_argument("DimerParams: w must be > 0");
  if (!(box_length > 0.0)) throw std::invalid_argument("DimerParams: box_length must be > 0");
  if (!(cutoff() < 0.5 * box_length)) {
    throw std::invalid_argument("DimerParams: need r0 < L/2 for the minimum-image convention");
  }
}

namespace {

// WCA pair potential: Lennard-Jones truncated and shifted to zero at r0.
double wca(double r, const DimerParams& p) {
  if (r > p.cutoff()) return 0.0;
  const double sr2 = p.sigma * p.sigma / (r * r);
  const double sr6 = sr2 * sr2 * sr2;
  return 4.0 * p.epsilon * (sr6 * sr6 - sr6) + p.epsilon;
}

// d/dr of the WCA potential.
double wca_deriv(double r, const DimerParams& p) {
  if (r > p.cutoff()) return 0.0;
  const double sr2 = p.sigma * p.sigma / (r * r);
  const double sr6 = sr2 * sr2 * sr2;
  return -24.0 * p.epsilon * (2.0 * sr6 * sr6 - sr6) / r;
}

// Double-well bond potential with minima at r0 and r0 + 2w, barrier h.
double bond(double r, const DimerParams& p) {
  const double w2 = p.well_half_width * p.well_half_width;
  const double u = r - p.cutoff() - p.well_half_width;
  const double q = 1.0 - u * u / w2;
  return p.barrier_height * q * q;
}

double bond_deriv(double r, const DimerParams& p) {
  const double w2 = p.well_half_width * p.well_half_width;
  const double u = r - p.cutoff() - p.well_half_width;
  const double q = 1.0 - u * u / w2;
  return -4.0 * p.barrier_height * q * u / w2;
}

// Minimum-image distance between particles i and j of a flattened 2D
// configuration; throws below the coincidence floor instead of letting the
// r^-12 core produce non-finite values.
double pair_distance(double box_length, const Eigen::VectorXd& q, int i, int j,
                     double floor_dist, double* dx, double* dy) {
  double ddx = q[2 * i] - q[2 * j];
  double ddy = q[2 * i + 1] - q[2 * j + 1];
  ddx -= box_length * std::round(ddx / box_length);
  ddy -= box_length * std::round(ddy / box_length);
  const double r = std::sqrt(ddx * ddx + ddy * ddy);
  if (r < floor_dist) {
    std::ostringstream msg;
    msg << "dimer_solvent: particles " << i << " and " << j
        << " closer than the coincidence floor (r = " << r << ")";
    throw std::domain_error(msg.str());
  }
  *dx = ddx;
  *dy = ddy;
  return r;
}

}  // namespace

Target dimer_solvent(const DimerParams& params, double beta) {
  params.validate();
  const int n = params.n_particles;
  const double box_l = params.box_length;
  const Domain box = Domain::torus(2 * n, box_l);

  auto potential = [params, n, box_l](const Eigen::VectorXd& q) {
    double dx, dy;
    double v = bond(pair_distance(box_l, q, 0, 1, params.coincidence_floor, &dx, &dy),
                    params);
    for (int i = 0; i < n; ++i) {
      // The dimer pair (0,1) interacts through the bond term only.
      for (int j = (i < 2) ? 2 : i + 1; j < n; ++j) {
        v += wca(pair_distance(box_l, q, i, j, params.coincidence_floor, &dx, &dy), params);
      }
    }
    return v;
  };

  auto fused = [params, n, box_l](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
    g.setZero(2 * n);
    double dx, dy;
    auto add_pair = [&](int i, int j, double dv_dr, double r) {
      const double fx = dv_dr * dx / r;  // (dx, dy) = qi - qj, minimum image
      const double fy = dv_dr * dy / r;
      g[2 * i] += fx;
      g[2 * i + 1] += fy;
      g[2 * j] -= fx;
      g[2 * j + 1] -= fy;
    };
    double v = 0.0;
    {
      const double r = pair_distance(box_l, q, 0, 1, params.coincidence_floor, &dx, &dy);
      v += bond(r, params);
      add_pair(0, 1, bond_deriv(r, params), r);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = (i < 2) ? 2 : i + 1; j < n; ++j) {
        const double r = pair_distance(box_l, q, i, j, params.coincidence_floor, &dx, &dy);
        if (r <= params.cutoff()) {
          v += wca(r, params);
          add_pair(i, j, wca_deriv(r, params), r);
        }
      }
    }
    return v;
  };

  auto gradient = [fused](const Eigen::VectorXd& q, Eigen::VectorXd& g) { fused(q, g); };

  return Target(box, beta, potential, gradient, dimer_initial_configuration(params), fused);
}

double reaction_coordinate(const Eigen::VectorXd& q, const DimerParams& params) {
  if (q.size() != 2 * params.n_particles) {
    throw std::invalid_argument("reaction_coordinate: configuration has wrong dimension");
  }
  double dx = q[0] - q[2];
  double dy = q[1] - q[3];
  dx -= params.box_length * std::round(dx / params.box_length);
  dy -= params.box_length * std::round(dy / params.box_length);
  return (std::sqrt(dx * dx + dy * dy) - params.cutoff()) / (2.0 * params.well_half_width);
}

Eigen::VectorXd dimer_initial_configuration(const DimerParams& params) {
  params.validate();
  const int n = params.n_particles;
  const double l = params.box_length;
  int cells = 1;
  while (cells * cells < n + 1) ++cells;  // one spare site: particle 1 sits off-lattice
  const double a = l / cells;

  Eigen::VectorXd q(2 * n);
  // Dimer at sites (0,0) and (1,0), bond compressed to exactly r0.
  q[0] = 0.5 * a;
  q[1] = 0.5 * a;
  q[2] = q[0] + params.cutoff();
  q[3] = q[1];
  int placed = 2;
  for (int cy = 0; cy < cells && placed < n; ++cy) {
    for (int cx = 0; cx < cells && placed < n; ++cx) {
      if (cy == 0 && (cx == 0 || cx == 1)) continue;  // reserved for the dimer
      q[2 * placed] = (cx + 0.5) * a;
      q[2 * placed + 1] = (cy + 0.5) * a;
      ++placed;
    }
  }
  return q;
}

}  // namespace nrl
