#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "npgq/evaluate.hpp"
#include "npgq/gsse.hpp"
#include "npgq/mdp.hpp"
#include "oracles.hpp"

using namespace npgq;

namespace {

// 0 -> s1 -> 0 deterministic cycle, r(0)=0, r(s1)=-2; optional second action
// at s1 with reward -1 (same transition).
TruncatedMdp two_state_cycle(bool second_action = false) {
  const int A = second_action ? 2 : 1;
  std::vector<StateLabel> labels{{0}, {1}};
  std::vector<std::vector<std::vector<double>>> kernel(
      2, std::vector<std::vector<double>>(A, std::vector<double>(2, 0.0)));
  std::vector<std::vector<double>> reward(2, std::vector<double>(A, 0.0));
  for (int a = 0; a < A; ++a) {
    kernel[0][a][1] = 1.0;
    kernel[1][a][0] = 1.0;
    reward[0][a] = 0.0;
  }
  reward[1][0] = -2.0;
  if (second_action) reward[1][1] = -1.0;
  return TruncatedMdp::from_tables(labels, A, kernel, reward, 0);
}

GsseModel always_serve_single_queue() {
  GsseModel m;
  m.classes = 1;
  m.options = 1;
  m.arrivals = {Pmf::bernoulli(0.3)};
  m.services = {{Pmf::bernoulli(0.6)}};
  m.finalize();
  return m;
}

}  // namespace

TEST_CASE("two-state cycle builds with c_max 0") {
  const TruncatedMdp mdp = two_state_cycle();
  CHECK(mdp.state_count() == 2);
  CHECK(mdp.c_max == 0.0);
  CHECK(mdp.zero_state == 0);
}

TEST_CASE("single-class truncation enumerates the buffer") {
  const GsseModel model = always_serve_single_queue();
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 10);
  CHECK(mdp.state_count() == 11);
  int flagged = 0;
  for (StateId s = 0; s < mdp.state_count(); ++s)
    if (mdp.boundary[s]) {
      ++flagged;
      CHECK(mdp.states[s] == StateLabel{10});
    }
  CHECK(flagged == 1);
}

TEST_CASE("N-system truncation: 441 states, rows normalized") {
  const GsseModel model = make_preset("nsystem");
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 20);
  CHECK(mdp.state_count() == 441);
  for (StateId s = 0; s < mdp.state_count(); ++s)
    for (int a = 0; a < mdp.action_count; ++a) {
      double sum = 0.0;
      for (const auto& [t, p] : mdp.row(s, a)) sum += p;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("build errors: bad bound, broken rows, unbounded reward") {
  class Broken : public CountableModel {
   public:
    StateLabel zero_state() const override { return {0}; }
    int action_count() const override { return 1; }
    std::vector<std::pair<StateLabel, double>> successors(
        const StateLabel&, int) const override {
      return {{{0}, 0.5}};  // fails to normalize
    }
    double reward(const StateLabel&, int) const override { return 0.0; }
  };
  CHECK_THROWS(build_truncated_mdp(Broken{}, 5));

  class Unbounded : public CountableModel {
   public:
    StateLabel zero_state() const override { return {0}; }
    int action_count() const override { return 1; }
    std::vector<std::pair<StateLabel, double>> successors(
        const StateLabel&, int) const override {
      return {{{0}, 1.0}};
    }
    double reward(const StateLabel&, int) const override {
      return std::numeric_limits<double>::infinity();
    }
  };
  CHECK_THROWS(build_truncated_mdp(Unbounded{}, 5));

  const GsseModel model = always_serve_single_queue();
  CHECK_THROWS(build_truncated_mdp(GsseCountable(model), -1));
}

TEST_CASE("two-state cycle evaluation solved by hand") {
  const TruncatedMdp mdp = two_state_cycle();
  const TabularPolicy pi = TabularPolicy::uniform(2, 1);
  const EvalResult eval = evaluate_policy(mdp, pi);
  CHECK(eval.J == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eval.d[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval.d[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval.V[0] == 0.0);
  CHECK(eval.V[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eval.tau[0] == 0.0);
  CHECK(eval.tau[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stationary distribution matches the power-iteration oracle") {
  const GsseModel model = always_serve_single_queue();
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 50);
  const TabularPolicy pi = TabularPolicy::uniform(mdp.state_count(), 1);
  const EvalResult eval = evaluate_policy(mdp, pi);
  const auto d_oracle = oracles::power_stationary(mdp, pi);
  for (StateId s = 0; s < mdp.state_count(); ++s)
    CHECK(std::abs(eval.d[s] - d_oracle[s]) <= 1e-9);
}

TEST_CASE("performance-difference identity on random pairs") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(gen() % 8);
    const int m = 2 + static_cast<int>(gen() % 3);
    const TruncatedMdp mdp = oracles::random_mdp(n, m, gen);
    const TabularPolicy pa = oracles::random_policy(n, m, gen);
    const TabularPolicy pb = oracles::random_policy(n, m, gen);
    const EvalResult ea = evaluate_policy(mdp, pa);
    const EvalResult eb = evaluate_policy(mdp, pb);
    double expectation = 0.0;
    for (StateId s = 0; s < n; ++s) {
      double q_mix = 0.0;
      for (int a = 0; a < m; ++a)
        q_mix += pa.prob(s, a) * eb.Q[static_cast<std::size_t>(s) * m + a];
      expectation += ea.d[s] * (q_mix - eb.V[s]);
    }
    CHECK(std::abs((ea.J - eb.J) - expectation) <= 1e-8);
  }
}

TEST_CASE("residuals meet their targets") {
  std::mt19937_64 gen(3);
  const TruncatedMdp mdp = oracles::random_mdp(20, 3, gen);
  const TabularPolicy pi = oracles::random_policy(20, 3, gen);
  const EvalResult eval = evaluate_policy(mdp, pi);
  CHECK(eval.poisson_residual <= 1e-10);
  CHECK(eval.stationarity_residual <= 1e-10);
}

TEST_CASE("evaluation is bitwise deterministic") {
  std::mt19937_64 gen(5);
  const TruncatedMdp mdp = oracles::random_mdp(15, 2, gen);
  const TabularPolicy pi = oracles::random_policy(15, 2, gen);
  const EvalResult a = evaluate_policy(mdp, pi);
  const EvalResult b = evaluate_policy(mdp, pi);
  CHECK(std::memcmp(a.V.data(), b.V.data(), a.V.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.d.data(), b.d.data(), a.d.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.Q.data(), b.Q.data(), a.Q.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.tau.data(), b.tau.data(), a.tau.size() * sizeof(double)) == 0);
  CHECK(a.J == b.J);
}

TEST_CASE("reducible chain is rejected") {
  // second action at s1 loops back to s1 forever
  std::vector<StateLabel> labels{{0}, {1}};
  std::vector<std::vector<std::vector<double>>> kernel(
      2, std::vector<std::vector<double>>(2, std::vector<double>(2, 0.0)));
  std::vector<std::vector<double>> reward(2, std::vector<double>(2, -1.0));
  kernel[0][0][1] = 1.0;
  kernel[0][1][1] = 1.0;
  kernel[1][0][0] = 1.0;
  kernel[1][1][1] = 1.0;  // trap
  reward[0][0] = reward[0][1] = 0.0;
  const TruncatedMdp mdp = TruncatedMdp::from_tables(labels, 2, kernel, reward, 0);
  const TabularPolicy trap = TabularPolicy::deterministic({0, 1}, 2);
  CHECK_THROWS_AS(evaluate_policy(mdp, trap), std::runtime_error);
}

TEST_CASE("value function matches the renewal-form Monte-Carlo estimate") {
  const GsseModel model = always_serve_single_queue();
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 30);
  const TabularPolicy pi = TabularPolicy::uniform(mdp.state_count(), 1);
  const EvalResult eval = evaluate_policy(mdp, pi);
  for (StateId s : {StateId{2}, StateId{5}}) {
    const auto mc = oracles::mc_value_renewal(mdp, pi, s, eval.J, 100000, 99);
    CHECK(std::abs(eval.V[s] - mc.mean) <= 3.0 * mc.stderr_);
  }
}

TEST_CASE("optimal policy on the two-state cycle with a better action") {
  const TruncatedMdp mdp = two_state_cycle(true);
  const OptimalResult opt = optimal_average_reward(mdp);
  CHECK(opt.converged);
  CHECK(opt.J_star == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(opt.pi_star.prob(1, 1) == 1.0);
}

TEST_CASE("policy iteration agrees with exhaustive enumeration") {
  GsseModel model = make_preset("single-queue");
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 10);
  const OptimalResult opt =
      optimal_average_reward(mdp, maxweight_policy_map(model, mdp));
  const double J_oracle = oracles::enumerate_optimal_J(mdp);
  CHECK(std::abs(opt.J_star - J_oracle) <= 1e-10);
  // no single-state action swap improves
  const EvalResult eval = evaluate_policy(mdp, opt.pi_star);
  for (StateId s = 0; s < mdp.state_count(); ++s)
    for (int a = 0; a < mdp.action_count; ++a)
      CHECK(eval.Q[static_cast<std::size_t>(s) * mdp.action_count + a] <=
            eval.V[s] + 1e-10);
}

TEST_CASE("identical rewards make every policy optimal") {
  std::vector<StateLabel> labels{{0}, {1}, {2}};
  std::vector<std::vector<std::vector<double>>> kernel(
      3, std::vector<std::vector<double>>(2, std::vector<double>(3, 0.0)));
  std::vector<std::vector<double>> reward(3, std::vector<double>(2, -1.0));
  for (int a = 0; a < 2; ++a) {
    kernel[0][a][1] = 1.0;
    kernel[1][a][2] = a == 0 ? 1.0 : 0.3;
    kernel[1][a][0] = a == 0 ? 0.0 : 0.7;
    kernel[2][a][0] = 1.0;
  }
  const TruncatedMdp mdp = TruncatedMdp::from_tables(labels, 2, kernel, reward, 0);
  const OptimalResult opt = optimal_average_reward(mdp);
  const EvalResult uniform_eval =
      evaluate_policy(mdp, TabularPolicy::uniform(3, 2));
  CHECK(opt.J_star == doctest::Approx(uniform_eval.J).epsilon(1e-10));
}

TEST_CASE("hitting times: hand-solved chains") {
  const TruncatedMdp cycle2 = two_state_cycle();
  const TabularPolicy pi2 = TabularPolicy::uniform(2, 1);
  const auto tau2 = hitting_time(cycle2, pi2, 0);
  CHECK(tau2[0] == 0.0);
  CHECK(tau2[1] == doctest::Approx(1.0).epsilon(1e-12));

  // three-state directed cycle 0 -> 1 -> 2 -> 0
  std::vector<StateLabel> labels{{0}, {1}, {2}};
  std::vector<std::vector<std::vector<double>>> kernel(
      3, std::vector<std::vector<double>>(1, std::vector<double>(3, 0.0)));
  std::vector<std::vector<double>> reward(3, std::vector<double>(1, 0.0));
  kernel[0][0][1] = kernel[1][0][2] = kernel[2][0][0] = 1.0;
  const TruncatedMdp cycle3 =
      TruncatedMdp::from_tables(labels, 1, kernel, reward, 0);
  const TabularPolicy pi3 = TabularPolicy::uniform(3, 1);
  const auto tau_to_0 = hitting_time(cycle3, pi3, 0);
  CHECK(tau_to_0[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tau_to_0[2] == doctest::Approx(1.0).epsilon(1e-12));
  const auto tau_to_1 = hitting_time(cycle3, pi3, 1);
  CHECK(tau_to_1[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tau_to_1[2] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("hitting time matches Monte Carlo on the single queue") {
  const GsseModel model = always_serve_single_queue();
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 30);
  const TabularPolicy pi = TabularPolicy::uniform(mdp.state_count(), 1);
  const auto tau = hitting_time(mdp, pi, mdp.zero_state);
  const auto mc =
      oracles::mc_hitting_time(mdp, pi, 4, mdp.zero_state, 100000, 42);
  CHECK(std::abs(tau[4] - mc.mean) <= 3.0 * mc.stderr_);
}

TEST_CASE("hitting time rejects unreachable targets") {
  std::vector<StateLabel> labels{{0}, {1}};
  std::vector<std::vector<std::vector<double>>> kernel(
      2, std::vector<std::vector<double>>(1, std::vector<double>(2, 0.0)));
  std::vector<std::vector<double>> reward(2, std::vector<double>(1, 0.0));
  kernel[0][0][0] = 1.0;  // self loop: state 1 never reached
  kernel[1][0][0] = 1.0;
  const TruncatedMdp trap = TruncatedMdp::from_tables(labels, 1, kernel, reward, 0);
  const TabularPolicy pi = TabularPolicy::uniform(2, 1);
  CHECK_THROWS(hitting_time(trap, pi, 1));
}

TEST_CASE("a one-state truncation evaluates trivially") {
  const GsseModel model = always_serve_single_queue();
  const TruncatedMdp mdp = build_truncated_mdp(GsseCountable(model), 0);
  CHECK(mdp.state_count() == 1);
  const EvalResult eval = evaluate_policy(mdp, TabularPolicy::uniform(1, 1));
  CHECK(eval.J == 0.0);
  CHECK(eval.d == std::vector<double>{1.0});
  CHECK(eval.tau == std::vector<double>{0.0});
  CHECK(hitting_time(mdp, TabularPolicy::uniform(1, 1), 0) ==
        std::vector<double>{0.0});
}

TEST_CASE("policy validation") {
  TabularPolicy pi = TabularPolicy::uniform(3, 2);
  CHECK(pi.strictly_positive());
  CHECK_NOTHROW(pi.validate());
  pi.probs[0] = 0.7;  // row no longer sums to 1
  CHECK_THROWS(pi.validate());
  const TabularPolicy det = TabularPolicy::deterministic({0, 1, 0}, 2);
  CHECK_FALSE(det.strictly_positive());
  const TabularPolicy soft = TabularPolicy::softened({0, 1, 0}, 2, 0.1);
  CHECK(soft.strictly_positive());
  CHECK(soft.prob(0, 0) == doctest::Approx(0.95));
}
