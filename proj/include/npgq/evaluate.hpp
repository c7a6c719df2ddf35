#pragma once

#include <optional>
#include <vector>

#include "npgq/mdp.hpp"

namespace npgq {

// Exact policy-evaluation bundle.
//
// Invariants on an accepted solve:
//   * d·P_pi = d within 1e-10 and sum(d) = 1 within 1e-12;
//   * V(zero) = 0 exactly; Poisson residual <= 1e-10 at every state;
//   * Q(s,a) = r(s,a) - J + E_{s'~P(s,a)}[V(s')];
//   * tau(zero) = 0 and tau satisfies the first-step system within 1e-10;
//   * J = E_{s~d}[r(s,pi)] within 1e-10.
struct EvalResult {
  double J = 0.0;
  std::vector<double> d;
  std::vector<double> V;
  std::vector<double> Q;  // Q[s * action_count + a]
  std::vector<double> tau;
  double poisson_residual = 0.0;
  double stationarity_residual = 0.0;

  // Stationary probability mass sitting on truncation-modified states.
  double boundary_mass(const TruncatedMdp& mdp) const;
};

// Solves the stationary, Poisson (with V(zero) = 0), and hitting-time linear
// systems for the chain induced by pi. Throws std::runtime_error if the zero
// state is not reachable from every state under pi (reducible / unstable
// policy on this truncation) or a solve fails its residual target.
EvalResult evaluate_policy(const TruncatedMdp& mdp, const TabularPolicy& pi);

// Expected time to hit `target` from every state; entry at target is 0.
// Throws if target is unreachable from some state.
std::vector<double> hitting_time(const TruncatedMdp& mdp,
                                 const TabularPolicy& pi, StateId target);

struct OptimalResult {
  double J_star = 0.0;
  TabularPolicy pi_star;   // deterministic
  bool converged = true;   // false if the iteration cap was hit
  int iterations = 0;
};

// Howard policy iteration for the average-reward criterion. Ties broken by
// lowest action index; an action is switched only on improvement > 1e-10.
// `init` defaults to the lowest-index reward-greedy map; callers with domain
// knowledge should pass a stabilizing initial map.
OptimalResult optimal_average_reward(
    const TruncatedMdp& mdp,
    const std::optional<std::vector<int>>& init = std::nullopt,
    int max_iterations = 1000);

}  // namespace npgq
