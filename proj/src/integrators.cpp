#include "nrl/integrators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrl {

std::uint64_t gradient_evals_per_step(Scheme scheme) {
  return scheme == Scheme::strang ? 6 : 1;
}

ChainState make_chain_state(const Target& target, const Eigen::VectorXd& x) {
  ChainState state;
  state.x = target.domain().wrap(x);
  state.grad.resize(x.size());
  state.potential = target.potential_and_gradient(state.x, state.grad);
  return state;
}

bool chain_state_consistent(const ChainState& state, const Target& target, double tol) {
  Eigen::VectorXd grad(state.x.size());
  const double pot = target.potential_and_gradient(state.x, grad);
  if (std::abs(pot - state.potential) > tol * std::max(1.0, std::abs(pot))) return false;
  const double gscale = std::max(1.0, grad.cwiseAbs().maxCoeff());
  return (grad - state.grad).cwiseAbs().maxCoeff() <= tol * gscale;
}

bool blown_up(const Eigen::VectorXd& x) {
  if (!x.allFinite()) return true;
  return x.cwiseAbs().maxCoeff() > 1e12;
}

StepOutcome em_step_with_noise(ChainState& state, const Drift& drift, double dt,
                               const Eigen::VectorXd& xi, StepBudget& budget) {
  const Target& target = *drift.target;
  Eigen::VectorXd b(state.x.size());
  drift.eval(state.x, state.grad, state.potential, b);

  Eigen::VectorXd next = state.x + dt * b + std::sqrt(2.0 * dt) * xi;
  next = target.domain().wrap(next);
  if (blown_up(next)) return StepOutcome{false, 0, 0};

  budget.gradient_evals += 1;
  state.potential = target.potential_and_gradient(next, state.grad);
  state.x = std::move(next);
  return StepOutcome{true, 0, 0};
}

StepOutcome em_step(ChainState& state, const Drift& drift, double dt, RngStream& rng,
                    StepBudget& budget) {
  Eigen::VectorXd xi(state.x.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return em_step_with_noise(state, drift, dt, xi, budget);
}

namespace {

// log q(. -> to) for the Gaussian proposal centred at `mean` with variance
// 2 dt per coordinate, up to the constant that cancels in the acceptance
// ratio.  On a torus the displacement is taken to the nearest image (a
// single image term; valid while dt << L^2).
double log_proposal_density(const Domain& domain, const Eigen::VectorXd& to,
                            const Eigen::VectorXd& mean, double dt) {
  const Eigen::VectorXd disp = domain.min_image(to, mean);
  return -disp.squaredNorm() / (4.0 * dt);
}

}  // namespace

StepOutcome mala_step_with_noise(ChainState& state, const Target& target, double dt,
                                 const Eigen::VectorXd& xi, double log_u,
                                 const Perturbation* perturbation, StepBudget& budget) {
  const Drift drift{&target, perturbation};
  Eigen::VectorXd b(state.x.size());
  drift.eval(state.x, state.grad, state.potential, b);
  const Eigen::VectorXd mean_forward = state.x + dt * b;

  Eigen::VectorXd proposal = mean_forward + std::sqrt(2.0 * dt) * xi;
  proposal = target.domain().wrap(proposal);
  if (!proposal.allFinite()) return StepOutcome{false, 1, 0};

  budget.gradient_evals += 1;
  Eigen::VectorXd grad_prop(state.x.size());
  double pot_prop;
  try {
    pot_prop = target.potential_and_gradient(proposal, grad_prop);
  } catch (const std::domain_error&) {
    return StepOutcome{true, 1, 0};  // zero-density proposal, plain rejection
  }

  Eigen::VectorXd b_prop(state.x.size());
  drift.eval(proposal, grad_prop, pot_prop, b_prop);
  const Eigen::VectorXd mean_backward = proposal + dt * b_prop;

  const double log_ratio =
      -target.beta() * pot_prop +
      log_proposal_density(target.domain(), state.x, mean_backward, dt) +
      target.beta() * state.potential -
      log_proposal_density(target.domain(), proposal, mean_forward, dt);

  StepOutcome outcome{true, 1, 0};
  if (log_u < log_ratio) {
    outcome.accepted = 1;
    state.x = std::move(proposal);
    state.grad = std::move(grad_prop);
    state.potential = pot_prop;
  }
  return outcome;
}

StepOutcome mala_step(ChainState& state, const Target& target, double dt, RngStream& rng,
                      const Perturbation* perturbation, StepBudget& budget) {
  Eigen::VectorXd xi(state.x.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  const double log_u = std::log(rng.uniform());
  return mala_step_with_noise(state, target, dt, xi, log_u, perturbation, budget);
}

Eigen::VectorXd rk4_flow_step(
    const Eigen::VectorXd& x,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& flow, double dt) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd k1(d), k2(d), k3(d), k4(d);
  flow(x, k1);
  flow(x + 0.5 * dt * k1, k2);
  flow(x + 0.5 * dt * k2, k3);
  flow(x + dt * k3, k4);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

StepOutcome strang_step(ChainState& state, const Target& target,
                        const Perturbation& perturbation, double dt, RngStream& rng,
                        StepBudget& budget) {
  std::uint32_t accepted = 0;

  StepOutcome half = mala_step(state, target, 0.5 * dt, rng, nullptr, budget);
  if (!half.ok) return StepOutcome{false, 2, accepted};
  accepted += half.accepted;

  // RK4 stages of dz/dt = alpha gamma(z).  The first stage reuses the cached
  // gradient; stages two to four cost one evaluation each, plus one at the
  // flow endpoint: six per strang step in total with the two halves.
  {
    const Eigen::Index d = state.x.size();
    Eigen::VectorXd k1(d), k2(d), k3(d), k4(d), grad_stage(d), stage(d);
    k1.setZero();
    perturbation.add_scaled_gamma(target, state.x, state.grad, state.potential, k1);

    auto stage_flow = [&](const Eigen::VectorXd& z, Eigen::VectorXd& k) {
      budget.gradient_evals += 1;
      const double pot = target.potential_and_gradient(z, grad_stage);
      k.setZero();
      perturbation.add_scaled_gamma(target, z, grad_stage, pot, k);
    };
    stage = state.x + 0.5 * dt * k1;
    stage_flow(stage, k2);
    stage = state.x + 0.5 * dt * k2;
    stage_flow(stage, k3);
    stage = state.x + dt * k3;
    stage_flow(stage, k4);

    Eigen::VectorXd flowed = state.x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    flowed = target.domain().wrap(flowed);
    if (blown_up(flowed)) return StepOutcome{false, 2, accepted};
    budget.gradient_evals += 1;
    state.potential = target.potential_and_gradient(flowed, state.grad);
    state.x = std::move(flowed);
  }

  half = mala_step(state, target, 0.5 * dt, rng, nullptr, budget);
  if (!half.ok) return StepOutcome{false, 2, accepted};
  accepted += half.accepted;

  return StepOutcome{true, 2, accepted};
}

ChainResult run_chain(const Eigen::VectorXd& initial, const ChainOptions& options,
                      const Target& target, const Perturbation& perturbation,
                      RngStream& rng,
                      const std::function<double(const Eigen::VectorXd&)>& observable,
                      std::span<Accumulator* const> observers) {
  ChainResult result;
  ChainState state = make_chain_state(target, initial);
  const Drift drift{&target, &perturbation};
  StepBudget budget;

  for (std::uint64_t n = 1; n <= options.n_steps; ++n) {
    StepOutcome outcome;
    try {
      switch (options.scheme) {
        case Scheme::em:
          outcome = em_step(state, drift, options.dt, rng, budget);
          break;
        case Scheme::mala:
          outcome = mala_step(state, target, options.dt, rng, nullptr, budget);
          break;
        case Scheme::mala_nonrev_proposal:
          outcome = mala_step(state, target, options.dt, rng, &perturbation, budget);
          break;
        case Scheme::strang:
          outcome = strang_step(state, target, perturbation, options.dt, rng, budget);
          break;
      }
    } catch (const std::domain_error&) {
      outcome.ok = false;  // target evaluation failed along the trajectory
    }
    result.proposals += outcome.proposals;
    result.accepted += outcome.accepted;
    if (!outcome.ok) {
      result.blowup = true;
      result.blowup_step = n;
      break;
    }
    result.steps_done = n;
    if (n > options.burn_in_steps) {
      const double value = observable(state.x);
      for (Accumulator* obs : observers) obs->add(value);
    }
  }
  result.gradient_evals = budget.gradient_evals;
  return result;
}

}  // namespace nrl
