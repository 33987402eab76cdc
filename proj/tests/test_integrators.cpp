#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "nrl/estimators.hpp"
#include "nrl/integrators.hpp"
#include "nrl/linalg.hpp"
#include "nrl/perturbations.hpp"
#include "nrl/rng.hpp"
#include "nrl/targets.hpp"

using nrl::ChainOptions;
using nrl::ChainResult;
using nrl::ChainState;
using nrl::Perturbation;
using nrl::RngStream;
using nrl::Scheme;
using nrl::StepBudget;
using nrl::Target;

namespace {

struct Collector : nrl::Accumulator {
  std::vector<double> values;
  void add(double v) override { values.push_back(v); }
};

ChainResult run_simple(const Target& target, const Perturbation& pert, Scheme scheme,
                       double dt, std::uint64_t steps, std::uint64_t seed,
                       nrl::Accumulator* sink) {
  RngStream rng(seed, 0);
  ChainOptions options;
  options.scheme = scheme;
  options.dt = dt;
  options.n_steps = steps;
  std::vector<nrl::Accumulator*> observers;
  if (sink) observers.push_back(sink);
  auto norm2 = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  return nrl::run_chain(target.initial_point(), options, target, pert, rng, norm2, observers);
}

}  // namespace

TEST_CASE("em step: zero drift and zero noise leave the state in place") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation none = Perturbation::none();
  const nrl::Drift drift{&gauss, &none};
  ChainState state = nrl::make_chain_state(gauss, Eigen::Vector2d(0, 0));
  StepBudget budget;
  const auto outcome =
      nrl::em_step_with_noise(state, drift, 0.01, Eigen::Vector2d(0, 0), budget);
  CHECK(outcome.ok);
  CHECK(state.x.norm() == 0.0);
  CHECK(budget.gradient_evals == 1);
}

TEST_CASE("em step: pure noise move is sqrt(2 dt) xi") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation none = Perturbation::none();
  const nrl::Drift drift{&gauss, &none};
  ChainState state = nrl::make_chain_state(gauss, Eigen::Vector2d(0, 0));
  StepBudget budget;
  nrl::em_step_with_noise(state, drift, 0.01, Eigen::Vector2d(1, 0), budget);
  CHECK(state.x[0] == doctest::Approx(std::sqrt(0.02)).epsilon(1e-15));
  CHECK(state.x[1] == 0.0);
  CHECK(nrl::chain_state_consistent(state, gauss));
}

TEST_CASE("em step wraps torus coordinates") {
  const Target periodic = nrl::periodic_2d(1.0);
  const Perturbation none = Perturbation::none();
  const nrl::Drift drift{&periodic, &none};
  ChainState state = nrl::make_chain_state(periodic, Eigen::Vector2d(0.95, 0.5));
  StepBudget budget;
  // Big forced kick to the right: must wrap into [0, 1).
  nrl::em_step_with_noise(state, drift, 0.01, Eigen::Vector2d(2.0, 0.0), budget);
  CHECK(state.x[0] >= 0.0);
  CHECK(state.x[0] < 1.0);
}

TEST_CASE("em blows up on the warped target with a large step and strong drift") {
  const Target warped = nrl::warped_gaussian(0.05);
  const Perturbation strong = Perturbation::linear(nrl::rotation_2d(), 10.0);
  Collector sink;
  const ChainResult result = run_simple(warped, strong, Scheme::em, 0.5, 20000, 3, &sink);
  CHECK(result.blowup);
  CHECK(result.blowup_step >= 1);
  CHECK(result.steps_done < 20000);
}

TEST_CASE("mala acceptance ratio matches a scalar-density oracle") {
  const Target gauss = nrl::standard_gaussian(1);
  ChainState state = nrl::make_chain_state(gauss, Eigen::VectorXd::Zero(1));
  const double dt = 0.5;
  Eigen::VectorXd xi(1);
  xi << 1.0;

  // Independent route: proposal y = x + dt*(-x) + sqrt(2dt) xi, log r =
  // [-V(y) - (x - y - dt*(-y))^2/(4dt)] - [-V(x) - (y - x - dt*(-x))^2/(4dt)].
  const double x = 0.0;
  const double y = x + dt * (-x) + std::sqrt(2.0 * dt) * 1.0;
  const double log_fwd = -(y - x + dt * x) * (y - x + dt * x) / (4.0 * dt);
  const double log_bwd = -(x - y + dt * y) * (x - y + dt * y) / (4.0 * dt);
  const double expected_log_ratio = (-0.5 * y * y + log_bwd) - (-0.5 * x * x + log_fwd);

  StepBudget budget;
  ChainState accept_state = state;
  auto outcome = nrl::mala_step_with_noise(accept_state, gauss, dt, xi,
                                           expected_log_ratio - 1e-9, nullptr, budget);
  CHECK(outcome.accepted == 1);
  CHECK(accept_state.x[0] == doctest::Approx(y));

  ChainState reject_state = state;
  outcome = nrl::mala_step_with_noise(reject_state, gauss, dt, xi,
                                      expected_log_ratio + 1e-9, nullptr, budget);
  CHECK(outcome.accepted == 0);
  CHECK(reject_state.x[0] == x);
}

TEST_CASE("mala accepts a zero-displacement proposal with probability one") {
  const Target gauss = nrl::standard_gaussian(1);
  ChainState state = nrl::make_chain_state(gauss, Eigen::VectorXd::Ones(1));
  const double dt = 0.3;
  // Noise chosen so the proposal equals the current point.
  Eigen::VectorXd xi(1);
  xi << dt * 1.0 / std::sqrt(2.0 * dt);
  StepBudget budget;
  const auto outcome =
      nrl::mala_step_with_noise(state, gauss, dt, xi, std::log(1.0 - 1e-12), nullptr, budget);
  CHECK(outcome.accepted == 1);
}

TEST_CASE("mala on the 1D gaussian has unit stationary second moment") {
  const Target gauss = nrl::standard_gaussian(1);
  const Perturbation none = Perturbation::none();
  Collector sink;
  const ChainResult result = run_simple(gauss, none, Scheme::mala, 0.5, 200000, 7, &sink);
  CHECK_FALSE(result.blowup);
  const double rate = result.acceptance_rate();
  CHECK(rate > 0.0);
  CHECK(rate < 1.0);
  double mean = 0.0;
  for (double v : sink.values) mean += v;
  mean /= static_cast<double>(sink.values.size());
  CHECK(std::abs(mean - 1.0) < 0.05);  // second moment of N(0,1); wide band
}

TEST_CASE("em at the same step size is visibly biased") {
  // EM stationary variance for dX = -X dt + sqrt(2) dW at dt = 0.5 is
  // 1/(1 - dt/2) = 4/3.
  const Target gauss = nrl::standard_gaussian(1);
  const Perturbation none = Perturbation::none();
  Collector sink;
  run_simple(gauss, none, Scheme::em, 0.5, 200000, 7, &sink);
  double mean = 0.0;
  for (double v : sink.values) mean += v;
  mean /= static_cast<double>(sink.values.size());
  CHECK(mean > 1.2);
  CHECK(std::abs(mean - 4.0 / 3.0) < 0.06);
}

TEST_CASE("rk4: zero field fixes the point, linear field matches the exponential") {
  auto zero_flow = [](const Eigen::VectorXd&, Eigen::VectorXd& dz) { dz.setZero(2); };
  const Eigen::VectorXd fixed = nrl::rk4_flow_step(Eigen::Vector2d(1.0, -2.0), zero_flow, 0.1);
  CHECK((fixed - Eigen::Vector2d(1.0, -2.0)).norm() == 0.0);

  const Eigen::MatrixXd j = nrl::rotation_2d().matrix();
  auto rotation_flow = [&](const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
    dz = j * z;
  };
  // Integrate to time 1 with n steps; global error against exp(J) decays as n^-4.
  const Eigen::VectorXd start = Eigen::Vector2d(1.0, 0.0);
  const Eigen::VectorXd exact = nrl::matrix_exponential(j) * start;
  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    Eigen::VectorXd z = start;
    for (int i = 0; i < n; ++i) z = nrl::rk4_flow_step(z, rotation_flow, 1.0 / n);
    errors.push_back((z - exact).norm());
  }
  CHECK(errors[0] / errors[1] > 12.0);
  CHECK(errors[1] / errors[2] > 12.0);
}

TEST_CASE("rk4 along the level-set flow conserves the potential at fifth order") {
  const Target warped = nrl::warped_gaussian(0.05);
  const Eigen::MatrixXd j = nrl::rotation_2d().matrix();
  auto level_flow = [&](const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
    dz = j * warped.gradient(z);
  };
  const Eigen::Vector2d x0(4.0, 2.0);
  const double v0 = warped.potential(x0);

  std::vector<double> dts, drifts;
  for (double dt : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const Eigen::VectorXd x1 = nrl::rk4_flow_step(x0, level_flow, dt);
    dts.push_back(std::log(dt));
    drifts.push_back(std::log(std::abs(warped.potential(x1) - v0) + 1e-300));
  }
  // Least-squares slope of log|dV| against log dt.
  const auto n = static_cast<double>(dts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    sx += dts[i];
    sy += drifts[i];
    sxx += dts[i] * dts[i];
    sxy += dts[i] * drifts[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope > 4.7);
  CHECK(slope < 5.3);
}

TEST_CASE("strang with alpha = 0 equals two mala half-steps on the same stream") {
  const Target warped = nrl::warped_gaussian(0.05);
  const Perturbation off = Perturbation::linear(nrl::rotation_2d(), 0.0);
  const double dt = 0.05;

  RngStream rng_a(99, 5);
  ChainState strang_state = nrl::make_chain_state(warped, Eigen::Vector2d(0, 0));
  StepBudget budget_a;
  for (int i = 0; i < 200; ++i) {
    nrl::strang_step(strang_state, warped, off, dt, rng_a, budget_a);
  }

  RngStream rng_b(99, 5);
  ChainState mala_state = nrl::make_chain_state(warped, Eigen::Vector2d(0, 0));
  StepBudget budget_b;
  for (int i = 0; i < 400; ++i) {
    nrl::mala_step(mala_state, warped, 0.5 * dt, rng_b, nullptr, budget_b);
  }

  CHECK((strang_state.x - mala_state.x).norm() == 0.0);
}

TEST_CASE("strang displacement scales diffusively for small steps") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation pert = Perturbation::linear(nrl::rotation_2d(), 1.0);
  auto mean_displacement = [&](double dt) {
    RngStream rng(123, 1);
    ChainState state = nrl::make_chain_state(gauss, Eigen::Vector2d(0.5, 0.5));
    StepBudget budget;
    double acc = 0.0;
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
      const Eigen::VectorXd before = state.x;
      nrl::strang_step(state, gauss, pert, dt, rng, budget);
      acc += (state.x - before).norm();
    }
    return acc / reps;
  };
  const double ratio = mean_displacement(0.01) / mean_displacement(0.0025);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("budget accounting: one gradient per em/mala step, six per strang step") {
  const Target warped = nrl::warped_gaussian(0.05);
  const Perturbation pert = Perturbation::linear(nrl::rotation_2d(), 1.0);
  const std::uint64_t n = 500;

  for (Scheme scheme : {Scheme::em, Scheme::mala, Scheme::mala_nonrev_proposal}) {
    const ChainResult r = run_simple(warped, pert, scheme, 0.01, n, 17, nullptr);
    REQUIRE_FALSE(r.blowup);
    CHECK(r.gradient_evals == n);
  }
  const ChainResult r = run_simple(warped, pert, Scheme::strang, 0.01, n, 17, nullptr);
  REQUIRE_FALSE(r.blowup);
  CHECK(r.gradient_evals == 6 * n);
}

TEST_CASE("chains are bit-reproducible for a fixed seed and stream") {
  const Target warped = nrl::warped_gaussian(0.05);
  const Perturbation pert = Perturbation::linear(nrl::rotation_2d(), 5.0);
  Collector a, b;
  run_simple(warped, pert, Scheme::em, 1e-3, 5000, 42, &a);
  run_simple(warped, pert, Scheme::em, 1e-3, 5000, 42, &b);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] == b.values[i]);
  }

  Collector c;
  RngStream other(42, 1);
  ChainOptions options;
  options.scheme = Scheme::em;
  options.dt = 1e-3;
  options.n_steps = 5000;
  std::vector<nrl::Accumulator*> obs{&c};
  nrl::run_chain(warped.initial_point(), options, warped, pert, other,
                 [](const Eigen::VectorXd& x) { return x.squaredNorm(); }, obs);
  CHECK(c.values != a.values);  // different stream, different path
}

TEST_CASE("run_chain with zero steps reports empty statistics") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation none = Perturbation::none();
  Collector sink;
  const ChainResult r = run_simple(gauss, none, Scheme::em, 0.01, 0, 1, &sink);
  CHECK(r.steps_done == 0);
  CHECK(r.gradient_evals == 0);
  CHECK(sink.values.empty());
  CHECK_FALSE(r.blowup);
}

TEST_CASE("run_chain honors burn-in and streams every post-burn-in value") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation none = Perturbation::none();
  RngStream rng(5, 0);
  ChainOptions options;
  options.scheme = Scheme::mala;
  options.dt = 0.1;
  options.n_steps = 1000;
  options.burn_in_steps = 250;
  Collector sink;
  std::vector<nrl::Accumulator*> obs{&sink};
  const ChainResult r =
      nrl::run_chain(gauss.initial_point(), options, gauss, none, rng,
                     [](const Eigen::VectorXd& x) { return x.squaredNorm(); }, obs);
  CHECK(r.steps_done == 1000);
  CHECK(sink.values.size() == 750);
  CHECK(r.proposals == 1000);
  CHECK(r.accepted > 0);
  CHECK(r.accepted < 1000);
}

TEST_CASE("long em chain estimates the gaussian second moment with small bias") {
  const Target gauss = nrl::standard_gaussian(2);
  const Perturbation none = Perturbation::none();
  Collector sink;
  const ChainResult r = run_simple(gauss, none, Scheme::em, 1e-2, 200000, 11, &sink);
  REQUIRE_FALSE(r.blowup);
  double mean = 0.0;
  for (double v : sink.values) mean += v;
  mean /= static_cast<double>(sink.values.size());
  CHECK(std::abs(mean - 2.0) < 0.1);  // pi(|x|^2) = d with O(dt) bias
}

TEST_CASE("cache consistency check detects a stale cache") {
  const Target gauss = nrl::standard_gaussian(2);
  ChainState state = nrl::make_chain_state(gauss, Eigen::Vector2d(1.0, 2.0));
  CHECK(nrl::chain_state_consistent(state, gauss));
  state.potential += 1e-6;
  CHECK_FALSE(nrl::chain_state_consistent(state, gauss));
}
