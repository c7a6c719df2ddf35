#pragma once

#include <cstdint>
#include <vector>

namespace npgq {

// An expert-advice instance: T steps, a reward table revealed step by step,
// and a declared upper bound M on the per-step reward spread
// max_a r_k(a) - min_a r_k(a).
struct AdviceInstance {
  int action_count = 0;
  int T = 0;
  std::vector<std::vector<double>> rewards;  // rewards[k][a], k in [0, T)
  double M = 0.0;

  void validate() const;      // M >= true spread, T >= 1, |A| >= 2
  double true_spread() const;
};

struct WeightedMajorityRun {
  // distributions[k] is the action distribution used at step k (before the
  // step-k rewards are revealed); distributions[T] is the final posterior.
  std::vector<std::vector<double>> distributions;
  std::vector<double> expected_reward;  // distributions[k] . rewards[k]
};

// Multiplicative-weights update pi_{k+1}(a) = pi_k(a) beta^{r_k(a)} / Z_k,
// computed in shift-invariant log form.
WeightedMajorityRun weighted_majority_run(const AdviceInstance& instance,
                                          double beta,
                                          const std::vector<double>& pi0);

struct RegretCertificate {
  double regret = 0.0;     // vs the best fixed action, in expectation over pi_k
  double bound = 0.0;      // sqrt(T M ln|A|) + log2(|A|)/2
  double beta_used = 0.0;  // g(sqrt(ln|A| / (T M)))
};

// Runs weighted majority from the uniform prior with the M-matched beta and
// certifies the regret guarantee. Throws std::runtime_error if the measured
// regret exceeds the bound by more than 1e-9 (an implementation bug or a
// mis-declared M). Regret is measured in expectation over the maintained
// distributions; sampled_regret below draws actions instead (demonstration
// only, no certificate).
RegretCertificate regret_certificate(const AdviceInstance& instance);

// Regret of one sampled-action trajectory: actions drawn from pi_k each step.
double sampled_regret(const AdviceInstance& instance, double beta,
                      std::uint64_t seed);

}  // namespace npgq
