#include "npgq/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "npgq/npg.hpp"  // g_rate

namespace npgq {

void AdviceInstance::validate() const {
  if (action_count < 2) throw std::invalid_argument("AdviceInstance: |A| must be >= 2");
  if (T < 1) throw std::invalid_argument("AdviceInstance: T must be >= 1");
  if (static_cast<int>(rewards.size()) != T)
    throw std::invalid_argument("AdviceInstance: reward table has wrong length");
  for (const auto& row : rewards)
    if (static_cast<int>(row.size()) != action_count)
      throw std::invalid_argument("AdviceInstance: reward row has wrong width");
  if (M < true_spread() - 1e-12)
    throw std::invalid_argument("AdviceInstance: declared M below the true spread");
}

double AdviceInstance::true_spread() const {
  double spread = 0.0;
  for (const auto& row : rewards) {
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    spread = std::max(spread, *hi - *lo);
  }
  return spread;
}

WeightedMajorityRun weighted_majority_run(const AdviceInstance& instance,
                                          double beta,
                                          const std::vector<double>& pi0) {
  if (!(beta > 1.0)) throw std::invalid_argument("weighted_majority_run: beta must be > 1");
  if (static_cast<int>(pi0.size()) != instance.action_count)
    throw std::invalid_argument("weighted_majority_run: pi0 has wrong width");
  for (double p : pi0)
    if (!(p > 0.0))
      throw std::invalid_argument("weighted_majority_run: pi0 must be strictly positive");

  const int A = instance.action_count;
  const double log_beta = std::log(beta);

  WeightedMajorityRun run;
  run.distributions.reserve(instance.T + 1);
  run.expected_reward.reserve(instance.T);

  std::vector<double> pi = pi0;
  {
    double sum = 0.0;
    for (double p : pi) sum += p;
    for (double& p : pi) p /= sum;
  }
  std::vector<double> logits(A);
  for (int k = 0; k < instance.T; ++k) {
    run.distributions.push_back(pi);
    const auto& r = instance.rewards[k];
    double er = 0.0;
    for (int a = 0; a < A; ++a) er += pi[a] * r[a];
    run.expected_reward.push_back(er);

    double hi = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      logits[a] = std::log(pi[a]) + r[a] * log_beta;
      hi = std::max(hi, logits[a]);
    }
    double Z = 0.0;
    for (int a = 0; a < A; ++a) {
      pi[a] = std::exp(logits[a] - hi);
      Z += pi[a];
    }
    for (double& p : pi) p /= Z;
  }
  run.distributions.push_back(pi);
  return run;
}

RegretCertificate regret_certificate(const AdviceInstance& instance) {
  instance.validate();
  const int A = instance.action_count;
  const double lnA = std::log(static_cast<double>(A));
  // An all-equal reward table has spread 0; floor keeps beta finite (the
  // update is then a no-op by shift invariance, so the value is immaterial).
  const double M = std::max(instance.M, 1e-12);

  RegretCertificate cert;
  cert.beta_used = g_rate(std::sqrt(lnA / (instance.T * M)));
  cert.bound = std::sqrt(instance.T * instance.M * lnA) +
               std::log2(static_cast<double>(A)) / 2.0;

  const std::vector<double> uniform(A, 1.0 / A);
  const WeightedMajorityRun run =
      weighted_majority_run(instance, cert.beta_used, uniform);

  std::vector<double> totals(A, 0.0);
  for (int k = 0; k < instance.T; ++k)
    for (int a = 0; a < A; ++a) totals[a] += instance.rewards[k][a];
  const int best =
      static_cast<int>(std::max_element(totals.begin(), totals.end()) -
                       totals.begin());

  double alg = 0.0;
  for (double er : run.expected_reward) alg += er;
  cert.regret = totals[best] - alg;

  if (cert.regret > cert.bound + 1e-9)
    throw std::runtime_error("regret_certificate: bound violated");
  return cert;
}

double sampled_regret(const AdviceInstance& instance, double beta,
                      std::uint64_t seed) {
  instance.validate();
  const int A = instance.action_count;
  const std::vector<double> uniform(A, 1.0 / A);
  const WeightedMajorityRun run = weighted_majority_run(instance, beta, uniform);

  std::mt19937_64 gen(seed);
  double realized = 0.0;
  for (int k = 0; k < instance.T; ++k) {
    const double u = static_cast<double>(gen() >> 11) * 0x1p-53;
    double acc = 0.0;
    int chosen = A - 1;
    for (int a = 0; a < A; ++a) {
      acc += run.distributions[k][a];
      if (u < acc) { chosen = a; break; }
    }
    realized += instance.rewards[k][chosen];
  }
  std::vector<double> totals(A, 0.0);
  for (int k = 0; k < instance.T; ++k)
    for (int a = 0; a < A; ++a) totals[a] += instance.rewards[k][a];
  return *std::max_element(totals.begin(), totals.end()) - realized;
}

}  // namespace npgq
