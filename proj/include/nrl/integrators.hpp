#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>

#include "nrl/perturbations.hpp"
#include "nrl/rng.hpp"
#include "nrl/targets.hpp"

namespace nrl {

enum class Scheme { em, mala, mala_nonrev_proposal, strang };

// Gradient evaluations per step: 1 for the one-shot schemes, 6 for the
// splitting step (two MALA halves plus a Runge-Kutta flow, with the
// current-point gradient reused between substeps).
std::uint64_t gradient_evals_per_step(Scheme scheme);

struct StepBudget {
  std::uint64_t gradient_evals = 0;
};

// Current point with cached V(x) and grad V(x).
struct ChainState {
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
  double potential = 0.0;
};

// Evaluates the cache at x; does not count toward the step budget.
ChainState make_chain_state(const Target& target, const Eigen::VectorXd& x);

// Cache matches recomputation (debug/test helper).
bool chain_state_consistent(const ChainState& state, const Target& target,
                            double tol = 1e-12);

// Trajectory left the representable region: non-finite coordinate or
// |x| > 1e12.
bool blown_up(const Eigen::VectorXd& x);

struct StepOutcome {
  bool ok = true;               // false = blowup
  std::uint32_t proposals = 0;  // accept/reject decisions taken this step
  std::uint32_t accepted = 0;
};

// One Euler-Maruyama step x' = x + dt b(x) + sqrt(2 dt) xi.  The
// deterministic kernel taking explicit noise is exposed for tests.
StepOutcome em_step_with_noise(ChainState& state, const Drift& drift, double dt,
                               const Eigen::VectorXd& xi, StepBudget& budget);
StepOutcome em_step(ChainState& state, const Drift& drift, double dt, RngStream& rng,
                    StepBudget& budget);

// One MALA step.  The proposal is the Euler-Maruyama step for the drift
// (including the perturbation when one is supplied); acceptance uses the
// Gaussian density of that exact proposal, in log space.  On a torus the
// proposal is wrapped and the density uses the nearest-image displacement.
StepOutcome mala_step_with_noise(ChainState& state, const Target& target, double dt,
                                 const Eigen::VectorXd& xi, double log_u,
                                 const Perturbation* perturbation, StepBudget& budget);
StepOutcome mala_step(ChainState& state, const Target& target, double dt, RngStream& rng,
                      const Perturbation* perturbation, StepBudget& budget);

// One classical fourth-order Runge-Kutta step for dz/dt = flow(z).
Eigen::VectorXd rk4_flow_step(const Eigen::VectorXd& x,
                              const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& flow,
                              double dt);

// Strang splitting: MALA half-step (reversible drift), RK4 step of the
// alpha-scaled divergence-free flow, MALA half-step.  Consumes exactly six
// gradient evaluations.
StepOutcome strang_step(ChainState& state, const Target& target,
                        const Perturbation& perturbation, double dt, RngStream& rng,
                        StepBudget& budget);

// Streaming sink for observable values along a chain.
class Accumulator {
 public:
  virtual ~Accumulator() = default;
  virtual void add(double value) = 0;
};

struct ChainOptions {
  Scheme scheme = Scheme::em;
  double dt = 1e-3;
  std::uint64_t n_steps = 0;
  std::uint64_t burn_in_steps = 0;  // observers start after this many steps
};

struct ChainResult {
  std::uint64_t steps_done = 0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t gradient_evals = 0;
  bool blowup = false;
  std::uint64_t blowup_step = 0;  // 1-based step at which the trajectory diverged

  bool partial() const { return blowup; }
  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals)
                         : std::numeric_limits<double>::quiet_NaN();
  }
};

// Runs one chain, streaming f(X^(n)) into every observer after each
// post-burn-in step.  A blowup (including a domain error from the target,
// e.g. coincident particles) terminates the chain and marks the result
// partial.
ChainResult run_chain(const Eigen::VectorXd& initial, const ChainOptions& options,
                      const Target& target, const Perturbation& perturbation,
                      RngStream& rng,
                      const std::function<double(const Eigen::VectorXd&)>& observable,
                      std::span<Accumulator* const> observers);

}  // namespace nrl
