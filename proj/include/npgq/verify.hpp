#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npgq/config.hpp"
#include "npgq/constants.hpp"
#include "npgq/evaluate.hpp"
#include "npgq/gsse.hpp"
#include "npgq/mdp.hpp"
#include "npgq/npg.hpp"

namespace npgq {

enum class CheckStatus { Pass, Fail, Skip };

std::string to_string(CheckStatus s);

struct CheckRecord {
  std::string name;
  std::string property;  // statement of the inequality being verified
  CheckStatus status = CheckStatus::Skip;
  double margin = 0.0;  // worst remaining slack; >= -slack passes
  double slack = 0.0;
  std::string worst_state;
  int worst_iteration = -1;
  std::string reason;  // skip reason or extra detail

  static CheckRecord pass_fail(std::string name, std::string property,
                               double margin, double slack);
  static CheckRecord skipped(std::string name, std::string property,
                             std::string reason);
};

struct TruncationMetrics {
  int bound = 0;
  int states = 0;
  double boundary_mass_initial = 0.0;
  double boundary_mass_max = 0.0;
  bool adequate = false;
};

struct VerificationReport {
  std::string model;
  std::uint64_t seed = 0;
  TruncationMetrics truncation;
  ConstantsLedger ledger;
  std::vector<CheckRecord> checks;
  // per grid point: (T, measured gap, c_star/sqrt(T))
  std::vector<std::array<double, 3>> rate_points;
  double c_hat = 0.0;  // fitted max_T gap * sqrt(T)

  bool all_pass() const;  // no check failed
  std::string to_json() const;  // deterministic (no timing, fixed order)
};

// Everything the checks need, assembled once per configuration: the truncated
// MDP at an adequate bound, the initial policy, the MaxWeight machinery, and
// the fully derived constants ledger.
struct Pipeline {
  GsseModel model;
  TruncatedMdp mdp;
  std::vector<int> mw_map;     // non-idling MaxWeight option map
  TabularPolicy pi0;           // softened initial policy
  EvalResult eval0;
  ConstantsLedger ledger;
  TruncationMetrics truncation;
  CapacityMargin capacity;
  AssumptionReport assumptions;
  DriftCertificate drift;
  InitialPolicyFit fit;
  bool have_oracle = false;
  double J_star_oracle = 0.0;
};

// Builds the pipeline for a configuration: capacity check, adequacy loop
// (doubling the truncation up to the cap), constant fits, connectedness
// bounds, optional optimal-policy oracle, and the derived chain. Throws on
// an infeasible capacity region or invalid configuration.
Pipeline build_pipeline(const ExperimentConfig& config);

// Hitting-time bound check for one evaluated policy (threshold y = J0).
CheckRecord check_tau_bound(const TruncatedMdp& mdp, const TabularPolicy& pi,
                            const EvalResult& eval,
                            const ConstantsLedger& ledger);

// Rate check for one completed trace: J_star - J_T <= c_star / sqrt(T).
CheckRecord check_convergence_rate(const NpgTrace& trace,
                                   const ConstantsLedger& ledger);

// Runs every check and assembles the report. Deterministic for a fixed
// configuration and seed.
VerificationReport run_full_verification(const ExperimentConfig& config);

}  // namespace npgq
