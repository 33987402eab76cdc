#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "nrl/gaussian_analytics.hpp"
#include "nrl/perturbations.hpp"
#include "nrl/rng.hpp"

using nrl::AntisymmetricMatrix;
using nrl::asymptotic_variance_quadratic;
using nrl::asymptotic_variance_quadratic_integral;
using nrl::poisson_solution;
using nrl::PoissonSolution;
using nrl::variance_limit;
using nrl::variance_lower_bound;

namespace {

Eigen::MatrixXd m1_matrix() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m.block<2, 2>(0, 0) << 1.5, -0.5, -0.5, 1.5;
  m.block<2, 2>(2, 2) << 3.5, -0.5, -0.5, 3.5;
  return m;
}

Eigen::VectorXd zero_l(int d) { return Eigen::VectorXd::Zero(d); }

// The displayed 3x3 quadratic form for the linear observables paired with
// the normalized 3D matrix: an independent route to sigma^2.
double sigma2_linear_3d_display(const Eigen::Vector3d& l, double alpha) {
  const double a2 = alpha * alpha;
  Eigen::Matrix3d q;
  q << 6 + a2, -a2, a2, -a2, 6 + a2, -a2, a2, -a2, 6 + a2;
  return 2.0 / (6.0 + 3.0 * a2) * l.dot(q * l);
}

struct RandomInstance {
  Eigen::MatrixXd m;
  Eigen::VectorXd l;
  AntisymmetricMatrix j;
  double alpha;
};

RandomInstance random_instance(nrl::RngStream& rng, int d, double alpha_max) {
  Eigen::MatrixXd a(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
  Eigen::MatrixXd m = 0.5 * (a + a.transpose());
  m /= std::max(1.0, m.norm());

  Eigen::VectorXd l(d);
  for (int i = 0; i < d; ++i) l[i] = rng.normal();

  Eigen::MatrixXd b(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) b(r, c) = rng.normal();
  Eigen::MatrixXd skew = 0.5 * (b - b.transpose());
  skew /= std::max(1.0, skew.norm());

  return RandomInstance{m, l, nrl::antisymmetric(skew), alpha_max * rng.uniform()};
}

}  // namespace

TEST_CASE("poisson solution satisfies its three defining equations") {
  nrl::RngStream rng(21, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + trial % 5;
    const RandomInstance inst = random_instance(rng, d, 10.0);
    const PoissonSolution sol = poisson_solution(inst.m, inst.l, inst.j, inst.alpha);
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(d, d) - inst.alpha * inst.j.matrix();

    const Eigen::MatrixXd quad = a * (sol.c + sol.c.transpose());
    CHECK((0.5 * (quad + quad.transpose()) - inst.m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a * sol.d - inst.l).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(sol.c.trace() - 0.5 * inst.m.trace()) < 1e-10);
    CHECK(sol.constant == doctest::Approx(-sol.c.trace()));
  }
}

TEST_CASE("poisson solution closed forms at alpha = 0 and the 2x2 solve") {
  // alpha = 0: A = I, so C = M/2 and D = l.
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  const PoissonSolution sol =
      poisson_solution(m, zero_l(2), nrl::rotation_2d(), 0.0);
  CHECK((sol.c - 0.5 * m).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(sol.d.norm() == 0.0);

  // alpha = 2 with the planar rotation: A = [[1,-2],[2,1]], D = A^{-1} l.
  const Eigen::Vector2d l(1.0, 0.0);
  const PoissonSolution sol2 =
      poisson_solution(Eigen::MatrixXd::Zero(2, 2), l, nrl::rotation_2d(), 2.0);
  CHECK(sol2.d[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(sol2.d[1] == doctest::Approx(-0.4).epsilon(1e-12));
  Eigen::Matrix2d a;
  a << 1, -2, 2, 1;
  CHECK((a * sol2.d - l).norm() < 1e-12);
}

TEST_CASE("block example: variance 30 at rest, 25 in the strong-drift limit, bound 20") {
  const Eigen::MatrixXd m1 = m1_matrix();
  const AntisymmetricMatrix j = nrl::quasi_optimal_quadratic(m1);

  CHECK(asymptotic_variance_quadratic(m1, zero_l(4), j, 0.0) ==
        doctest::Approx(30.0).epsilon(1e-10));
  CHECK(std::abs(asymptotic_variance_quadratic(m1, zero_l(4), j, 1e6) - 25.0) < 1e-3);
  CHECK(std::abs(variance_limit(m1, zero_l(4), j) - 25.0) < 1e-4);
  CHECK(std::abs(variance_lower_bound(m1, zero_l(4), j) - 20.0) < 1e-10);

  // Whole curve against the closed pair-rotation form 25 + 5/(1 + a^2).
  for (double alpha : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0}) {
    const double expected = 25.0 + 5.0 / (1.0 + alpha * alpha);
    CHECK(asymptotic_variance_quadratic(m1, zero_l(4), j, alpha) ==
          doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("linear observables with the normalized 3D matrix") {
  const AntisymmetricMatrix j = nrl::j_linear_3d();
  const Eigen::Vector3d l1 = Eigen::Vector3d(0, 1, 1) / std::sqrt(2.0);
  const Eigen::Vector3d l2 = Eigen::Vector3d(1, 0, 1) / std::sqrt(2.0);
  const Eigen::Vector3d l3 = Eigen::Vector3d(1, -1, 1) / std::sqrt(3.0);
  const Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(3, 3);

  // alpha = 2, first observable: 12/(6 + 3*4) = 2/3.
  CHECK(asymptotic_variance_quadratic(m0, l1, j, 2.0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // The displayed quadratic form is an independent route.
  for (const auto& l : {l1, l2, l3}) {
    for (double alpha : {0.0, 0.7, 2.0, 9.0}) {
      CHECK(asymptotic_variance_quadratic(m0, l, j, alpha) ==
            doctest::Approx(sigma2_linear_3d_display(l, alpha)).epsilon(1e-10));
    }
  }

  // Large-alpha limits: 0, 4/3 and the flat curve at 2.
  CHECK(std::abs(variance_limit(m0, l1, j) - 0.0) < 1e-6);
  CHECK(std::abs(variance_limit(m0, l2, j) - 4.0 / 3.0) < 1e-6);
  CHECK(std::abs(variance_limit(m0, l3, j) - 2.0) < 1e-6);
  CHECK(asymptotic_variance_quadratic(m0, l3, j, 50.0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("optimal linear perturbation gives 4|l|^2/(2 + alpha^2)") {
  nrl::RngStream rng(31, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 4;
    Eigen::VectorXd l(d);
    for (int i = 0; i < d; ++i) l[i] = rng.normal();
    if (l.norm() < 0.1) continue;
    // Deterministic orthogonal unit vector.
    Eigen::Index k;
    l.cwiseAbs().minCoeff(&k);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[k] = 1.0;
    const Eigen::VectorXd l_hat = l.normalized();
    const Eigen::VectorXd omega = (e - l_hat.dot(e) * l_hat).normalized();
    const AntisymmetricMatrix j = nrl::optimal_linear(l, omega);

    for (double alpha : {0.0, 1.0, 3.0, 10.0, 40.0}) {
      const double expected = 4.0 * l.squaredNorm() / (2.0 + alpha * alpha);
      CHECK(std::abs(asymptotic_variance_quadratic(Eigen::MatrixXd::Zero(d, d), l, j, alpha) -
                     expected) < 1e-10 * std::max(1.0, expected));
    }
  }
}

TEST_CASE("lyapunov and quadrature evaluation paths agree") {
  nrl::RngStream rng(41, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 5;
    const RandomInstance inst = random_instance(rng, d, 10.0);
    const double via_lyapunov =
        asymptotic_variance_quadratic(inst.m, inst.l, inst.j, inst.alpha);
    const double via_integral =
        asymptotic_variance_quadratic_integral(inst.m, inst.l, inst.j, inst.alpha);
    CHECK(std::abs(via_lyapunov - via_integral) < 1e-8 * std::max(1.0, std::abs(via_lyapunov)));
  }
}

TEST_CASE("variance curve properties on random instances") {
  nrl::RngStream rng(51, 0);
  for (int trial = 0; trial < 15; ++trial) {
    const int d = 2 + trial % 5;
    const RandomInstance inst = random_instance(rng, d, 0.0);
    const double at_zero = asymptotic_variance_quadratic(inst.m, inst.l, inst.j, 0.0);

    // sigma^2(0) = ||M||_F^2 + 2 |l|^2
    CHECK(at_zero ==
          doctest::Approx(inst.m.squaredNorm() + 2.0 * inst.l.squaredNorm()).epsilon(1e-10));

    // symmetric in alpha, never above the reversible value, non-increasing
    double previous = at_zero;
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0, 100.0}) {
      const double value = asymptotic_variance_quadratic(inst.m, inst.l, inst.j, alpha);
      const double mirrored = asymptotic_variance_quadratic(inst.m, inst.l, inst.j, -alpha);
      CHECK(std::abs(value - mirrored) < 1e-10 * std::max(1.0, value));
      CHECK(value <= at_zero + 1e-9 * std::max(1.0, at_zero));
      CHECK(value <= previous + 1e-9 * std::max(1.0, previous));
      previous = value;
    }

    const double limit = variance_limit(inst.m, inst.l, inst.j);
    const double bound = variance_lower_bound(inst.m, inst.l, inst.j);
    CHECK(bound <= limit + 1e-6 * std::max(1.0, std::abs(limit)));
    CHECK(limit <= at_zero + 1e-6 * std::max(1.0, at_zero));
  }
}

TEST_CASE("lower bound closed forms") {
  // M = m I: all pairings give m^2 d.
  const double m_scale = 1.7;
  const Eigen::MatrixXd m = m_scale * Eigen::MatrixXd::Identity(4, 4);
  CHECK(variance_lower_bound(m, zero_l(4), nrl::quasi_optimal_quadratic(m)) ==
        doctest::Approx(m_scale * m_scale * 4.0).epsilon(1e-12));

  // l in the nullspace of J: the projection is the identity on it.
  const AntisymmetricMatrix j = nrl::j_linear_3d();
  const Eigen::Vector3d zeta = Eigen::Vector3d(1, -1, 1).normalized();
  CHECK(variance_lower_bound(Eigen::MatrixXd::Zero(3, 3), 2.0 * zeta, j) ==
        doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("identity quadratic form is immune to the perturbation") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  const AntisymmetricMatrix j = nrl::quasi_optimal_quadratic(m);
  const double at_zero = asymptotic_variance_quadratic(m, zero_l(2), j, 0.0);
  CHECK(std::abs(variance_limit(m, zero_l(2), j) - at_zero) < 1e-8);
  CHECK(asymptotic_variance_quadratic(m, zero_l(2), j, 25.0) ==
        doctest::Approx(at_zero).epsilon(1e-10));
}

TEST_CASE("polar-coordinate model closed form") {
  CHECK(nrl::polar_example_variance(0.0) == doctest::Approx(8.0));
  CHECK(nrl::polar_example_variance(1.0) == doctest::Approx(6.0));
  CHECK(nrl::polar_example_variance(1e9) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("centered quadratic observable") {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.0, 0.0, 1.0;
  const auto f = nrl::QuadraticObservable::centered(m, Eigen::Vector2d(0.5, 0.0));
  CHECK(f.k == doctest::Approx(-3.0));
  CHECK(f.eval(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(2.0 + 1.0 + 0.5 - 3.0));

  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(nrl::QuadraticObservable::centered(bad, Eigen::Vector2d::Zero()),
                  std::invalid_argument);
}

TEST_CASE("variance curve bundle") {
  const Eigen::MatrixXd m1 = m1_matrix();
  const AntisymmetricMatrix j = nrl::quasi_optimal_quadratic(m1);
  const nrl::VarianceCurve curve =
      nrl::make_variance_curve(m1, zero_l(4), j, {0.0, 1.0, 10.0});
  REQUIRE(curve.sigma2.size() == 3);
  CHECK(curve.sigma2[0] == doctest::Approx(30.0));
  CHECK(curve.lower_bound == doctest::Approx(20.0));
  CHECK(std::abs(curve.limit_inf - 25.0) < 1e-4);
  CHECK(curve.sigma2[1] > curve.sigma2[2]);
}
