#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npgq/verify.hpp"

using namespace npgq;

namespace {

ExperimentConfig quick_config(const std::string& model) {
  ExperimentConfig config;
  config.model = model;
  config.T_grid = {16, 64};
  config.seed = 5;
  return config;
}

const CheckRecord* find_check(const VerificationReport& rep,
                              const std::string& name) {
  for (const auto& c : rep.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("tau bound formula evaluates the hand example") {
  // x_z=2, p_z=0.5, c_max=0, y=-1, z=-2 -> 2*1/(0.25*1) + 2 = 10
  CHECK(tau_bound_formula(2.0, 0.5, 0.0, -1.0, -2.0) ==
        doctest::Approx(10.0).epsilon(1e-12));
  // near-singular configuration rejected
  CHECK_THROWS(tau_bound_formula(2.0, 0.5, 0.0, -1.0, -1.0 + 1e-9));
}

TEST_CASE("tau bound check on the single-queue pipeline") {
  const Pipeline pl = build_pipeline(quick_config("single-queue"));
  const CheckRecord rec = check_tau_bound(pl.mdp, pl.pi0, pl.eval0, pl.ledger);
  CHECK(rec.status == CheckStatus::Pass);
  CHECK(rec.margin > 0.0);

  // precondition J_pi >= y fails for a worse policy: fake it via the ledger
  ConstantsLedger lg = pl.ledger;
  lg.J0 = {pl.eval0.J + 0.5, Provenance::Supplied, ""};
  const CheckRecord skip = check_tau_bound(pl.mdp, pl.pi0, pl.eval0, lg);
  CHECK(skip.status == CheckStatus::Skip);

  ConstantsLedger close = pl.ledger;
  close.z = {close.J0.value - 1e-9, Provenance::Supplied, ""};
  const CheckRecord skip2 = check_tau_bound(pl.mdp, pl.pi0, pl.eval0, close);
  CHECK(skip2.status == CheckStatus::Skip);
}

TEST_CASE("rate check handles the already-optimal edge") {
  NpgTrace trace;
  trace.rows.push_back({0, -0.7, 0.0, 0.0, 0.0, 0.0, 0.0});
  trace.rows.push_back({16, -0.7, 0.0, 0.0, 0.0, 0.0, 0.0});
  ConstantsLedger lg;
  lg.action_count = 2;
  lg.c_max = {0.0, Provenance::Supplied, ""};
  lg.J_star = {-0.7, Provenance::Supplied, ""};
  lg.J_star_is_oracle = true;
  lg.c_star = {1.0, Provenance::Supplied, ""};
  const CheckRecord rec = check_convergence_rate(trace, lg);
  CHECK(rec.status == CheckStatus::Pass);  // 0 <= c_star/sqrt(T)

  lg.J_star_is_oracle = false;
  CHECK(check_convergence_rate(trace, lg).status == CheckStatus::Skip);
}

TEST_CASE("full verification passes on the default single-queue config") {
  const VerificationReport rep = run_full_verification(quick_config("single-queue"));
  CHECK(rep.all_pass());
  CHECK(rep.truncation.adequate);
  int skips = 0;
  for (const auto& c : rep.checks) {
    INFO(c.name << " " << c.reason);
    CHECK(c.status != CheckStatus::Fail);
    if (c.status == CheckStatus::Skip) ++skips;
  }
  CHECK(skips == 0);
  CHECK(rep.rate_points.size() == 2);
  CHECK(std::isfinite(rep.c_hat));
}

TEST_CASE("report is deterministic for a fixed config and seed") {
  const ExperimentConfig config = quick_config("single-queue");
  const std::string a = run_full_verification(config).to_json();
  const std::string b = run_full_verification(config).to_json();
  CHECK(a == b);
}

TEST_CASE("seed changes move the randomized checks deterministically") {
  ExperimentConfig config = quick_config("single-queue");
  const std::string a = run_full_verification(config).to_json();
  config.seed = 6;
  const std::string b = run_full_verification(config).to_json();
  CHECK(a != b);
}

TEST_CASE("saturated arrivals fail capacity and skip downstream checks") {
  ExperimentConfig config;
  config.model = "inline";
  GsseModel m;
  m.classes = 1;
  m.options = 1;
  m.arrivals = {Pmf::bernoulli(0.5)};
  m.services = {{Pmf::bernoulli(0.5)}};
  config.inline_model = m;
  config.T_grid = {8};
  const VerificationReport rep = run_full_verification(config);
  CHECK_FALSE(rep.all_pass());
  const CheckRecord* cap = find_check(rep, "capacity-feasible");
  REQUIRE(cap != nullptr);
  CHECK(cap->status == CheckStatus::Fail);
  int skipped = 0;
  for (const auto& c : rep.checks)
    if (c.status == CheckStatus::Skip) {
      ++skipped;
      CHECK_FALSE(c.reason.empty());
    }
  CHECK(skipped == static_cast<int>(rep.checks.size()) - 1);
}

TEST_CASE("ledger fault injection is caught with a witness") {
  ExperimentConfig config = quick_config("single-queue");
  config.ledger_overrides["c2"] = 0.0;  // true value is positive
  const VerificationReport rep = run_full_verification(config);
  CHECK_FALSE(rep.all_pass());
  const CheckRecord* lc = find_check(rep, "ledger-consistency");
  REQUIRE(lc != nullptr);
  CHECK(lc->status == CheckStatus::Fail);
  CHECK(lc->worst_state.find("c2") != std::string::npos);
  // run-based lemma checks are skipped rather than silently run on the
  // tampered chain
  const CheckRecord* range = find_check(rep, "q-range-bound");
  REQUIRE(range != nullptr);
  CHECK(range->status == CheckStatus::Skip);
}

TEST_CASE("z override flows into the ledger") {
  ExperimentConfig config = quick_config("single-queue");
  config.z = -2.5;
  const Pipeline pl = build_pipeline(config);
  CHECK(pl.ledger.z.value == -2.5);
  CHECK(pl.ledger.z.tag == Provenance::Supplied);
  pl.ledger.validate();
}

TEST_CASE("inadequate truncation is reported as inconclusive") {
  ExperimentConfig config = quick_config("nsystem");
  config.truncation = 2;
  config.truncation_cap = 2;  // forbid doubling
  const VerificationReport rep = run_full_verification(config);
  CHECK_FALSE(rep.truncation.adequate);
  const CheckRecord* sandwich = find_check(rep, "value-sandwich");
  REQUIRE(sandwich != nullptr);
  CHECK(sandwich->status == CheckStatus::Skip);
  CHECK(sandwich->reason.find("truncation") != std::string::npos);
  // structural checks still run
  const CheckRecord* drift = find_check(rep, "drift-certificate");
  REQUIRE(drift != nullptr);
  CHECK(drift->status == CheckStatus::Pass);
}

TEST_CASE("adequacy loop doubles the bound until the mass is negligible") {
  ExperimentConfig config = quick_config("single-queue");
  config.truncation = 4;       // far too shallow for the 0.3/0.6 queue
  config.truncation_cap = 320;
  const Pipeline pl = build_pipeline(config);
  CHECK(pl.truncation.adequate);
  CHECK(pl.truncation.bound > 4);
  CHECK(pl.truncation.boundary_mass_initial < 1e-8);
}

TEST_CASE("weighted reward pipeline verifies end to end") {
  ExperimentConfig config = quick_config("nsystem");
  config.reward = "weighted";
  config.weights = {2.0, 1.0};
  config.init = "weighted-maxweight";
  config.T_grid = {8, 16};
  const VerificationReport rep = run_full_verification(config);
  for (const auto& c : rep.checks) {
    INFO(c.name << " margin=" << c.margin << " " << c.reason);
    CHECK(c.status != CheckStatus::Fail);
  }
}

TEST_CASE("alpha-moment reward pipeline verifies end to end") {
  ExperimentConfig config = quick_config("single-queue");
  config.reward = "alpha-moment";
  config.alpha = 2.0;
  config.init = "alpha-maxweight";
  config.T_grid = {8, 16};
  const VerificationReport rep = run_full_verification(config);
  for (const auto& c : rep.checks) {
    INFO(c.name << " margin=" << c.margin << " " << c.reason);
    CHECK(c.status != CheckStatus::Fail);
  }
}

TEST_CASE("init spelling must match the reward kind") {
  ExperimentConfig config = quick_config("single-queue");
  config.init = "alpha-maxweight";  // reward is mean-queue
  CHECK_THROWS_AS(build_pipeline(config), std::invalid_argument);
}

TEST_CASE("every check name appears exactly once") {
  const VerificationReport rep = run_full_verification(quick_config("single-queue"));
  std::vector<std::string> names;
  for (const auto& c : rep.checks) names.push_back(c.name);
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(names.size() == 18);
}
