#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "npgq/expert.hpp"
#include "npgq/gsse.hpp"
#include "npgq/mdp.hpp"
#include "npgq/npg.hpp"
#include "oracles.hpp"

using namespace npgq;

TEST_CASE("uniform prior stays uniform under constant rewards") {
  AdviceInstance in;
  in.action_count = 3;
  in.T = 6;
  in.rewards.assign(6, std::vector<double>(3, 4.2));
  in.M = 0.0;
  const auto run = weighted_majority_run(in, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  for (const auto& dist : run.distributions)
    for (double p : dist) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("closed form for two actions with constant (1,0) rewards") {
  AdviceInstance in;
  in.action_count = 2;
  in.T = 10;
  in.rewards.assign(10, {1.0, 0.0});
  in.M = 1.0;
  const auto run = weighted_majority_run(in, 2.0, {0.5, 0.5});
  for (int k = 0; k <= 10; ++k) {
    const double expected = std::pow(2.0, k) / (std::pow(2.0, k) + 1.0);
    CHECK(run.distributions[k][0] == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("adversarial rewards match an independent recursion") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    AdviceInstance in;
    in.action_count = 2 + static_cast<int>(gen() % 3);
    in.T = 1 + static_cast<int>(gen() % 64);
    in.rewards.resize(in.T);
    for (auto& row : in.rewards) {
      row.resize(in.action_count);
      for (auto& r : row) r = oracles::uniform01(gen) - 0.5;
    }
    in.M = in.true_spread();
    const double beta = 1.2 + oracles::uniform01(gen);
    std::vector<double> pi0(in.action_count, 1.0 / in.action_count);
    const auto run = weighted_majority_run(in, beta, pi0);
    const auto oracle = oracles::wm_oracle(in.rewards, beta, pi0);
    for (int k = 0; k <= in.T; ++k)
      for (int a = 0; a < in.action_count; ++a)
        CHECK(std::abs(run.distributions[k][a] - oracle[k][a]) <= 1e-12);
  }
}

TEST_CASE("regret certificate on the hand-computed example") {
  AdviceInstance in;
  in.action_count = 2;
  in.T = 4;
  in.rewards.assign(4, {1.0, 0.0});
  in.M = 1.0;
  const RegretCertificate cert = regret_certificate(in);
  CHECK(cert.bound ==
        doctest::Approx(std::sqrt(4.0 * std::log(2.0)) + 0.5).epsilon(1e-12));
  CHECK(cert.bound == doctest::Approx(2.16510926).epsilon(1e-7));
  CHECK(cert.regret <= cert.bound);
  CHECK(cert.regret > 0.0);
}

TEST_CASE("all-equal rewards have zero regret against a positive bound") {
  AdviceInstance in;
  in.action_count = 4;
  in.T = 12;
  in.rewards.assign(12, std::vector<double>(4, -2.0));
  in.M = 0.0;
  const RegretCertificate cert = regret_certificate(in);
  CHECK(std::abs(cert.regret) <= 1e-12);
  CHECK(cert.bound == doctest::Approx(1.0));  // log2(4)/2
}

TEST_CASE("instance validation") {
  AdviceInstance in;
  in.action_count = 1;
  in.T = 3;
  in.rewards.assign(3, {0.0});
  CHECK_THROWS(in.validate());

  in.action_count = 2;
  in.rewards.assign(3, {1.0, 0.0});
  in.M = 0.5;  // below the true spread
  CHECK_THROWS(in.validate());
  in.M = 1.0;
  CHECK_NOTHROW(in.validate());
}

TEST_CASE("randomized sweep stays within the bound") {
  std::mt19937_64 gen(47);
  static constexpr double kScales[] = {0.1, 0.5, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    AdviceInstance in;
    in.action_count = 2 + static_cast<int>(gen() % 4);
    in.T = 1 + static_cast<int>(gen() % 256);
    in.rewards.resize(in.T);
    const double scale = kScales[gen() % 3];
    const int pattern = static_cast<int>(gen() % 3);
    for (int k = 0; k < in.T; ++k) {
      auto& row = in.rewards[k];
      row.resize(in.action_count);
      for (int a = 0; a < in.action_count; ++a) {
        switch (pattern) {
          case 0: row[a] = scale * oracles::uniform01(gen); break;
          case 1: row[a] = scale * (a == k % in.action_count ? 1.0 : 0.0); break;
          default: row[a] = scale * (oracles::uniform01(gen) - 0.5); break;
        }
      }
    }
    in.M = in.true_spread() * (1.0 + 0.5 * oracles::uniform01(gen));
    CHECK_NOTHROW(regret_certificate(in));  // throws on violation
  }
}

TEST_CASE("sampled-action regret is deterministic per seed") {
  AdviceInstance in;
  in.action_count = 2;
  in.T = 32;
  in.rewards.assign(32, {1.0, 0.0});
  in.M = 1.0;
  const double a = sampled_regret(in, 2.0, 7);
  const double b = sampled_regret(in, 2.0, 7);
  CHECK(a == b);
  CHECK(a >= 0.0);
  CHECK(a <= 32.0);
  // a different seed draws a different trajectory in general
  const double c = sampled_regret(in, 2.0, 8);
  CHECK((c >= 0.0 && c <= 32.0));
}

TEST_CASE("per-state NPG rows replay the weighted-majority recursion") {
  // fixed state s with reward sequence Q_k(s, .): the row updates of the
  // policy iteration and the standalone recursion must coincide step for step
  std::vector<StateLabel> labels{{0}, {1}};
  std::vector<std::vector<std::vector<double>>> kernel(
      2, std::vector<std::vector<double>>(3, std::vector<double>(2, 0.0)));
  std::vector<std::vector<double>> reward(2, std::vector<double>(3, 0.0));
  for (int a = 0; a < 3; ++a) {
    kernel[0][a][1] = 1.0;
    kernel[1][a][0] = 1.0;
  }
  const TruncatedMdp mdp = TruncatedMdp::from_tables(labels, 3, kernel, reward, 0);

  LearningRateSchedule sched;
  sched.T = 1;
  sched.action_count = 3;
  sched.M = {1.0, 1.0};
  sched.beta = {1.37, 2.21};

  std::mt19937_64 gen(53);
  const int steps = 40;
  std::vector<std::vector<double>> Q_seq(steps, std::vector<double>(6));
  for (auto& Q : Q_seq)
    for (auto& q : Q) q = 4.0 * (oracles::uniform01(gen) - 0.5);

  TabularPolicy pi = TabularPolicy::uniform(2, 3);
  std::vector<TabularPolicy> rows{pi};
  for (int k = 0; k < steps; ++k) {
    pi = npg_update(mdp, pi, Q_seq[k], sched);
    rows.push_back(pi);
  }

  for (StateId s = 0; s < 2; ++s) {
    AdviceInstance in;
    in.action_count = 3;
    in.T = steps;
    in.rewards.resize(steps);
    for (int k = 0; k < steps; ++k)
      in.rewards[k] = {Q_seq[k][3 * s], Q_seq[k][3 * s + 1], Q_seq[k][3 * s + 2]};
    in.M = in.true_spread();
    const auto run =
        weighted_majority_run(in, sched.beta[s], {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (int k = 0; k <= steps; ++k)
      for (int a = 0; a < 3; ++a)
        CHECK(std::abs(run.distributions[k][a] - rows[k].prob(s, a)) <= 1e-12);
  }
}
