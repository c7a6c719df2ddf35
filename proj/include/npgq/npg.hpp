#pragma once

#include <functional>
#include <string>
#include <vector>

#include "npgq/constants.hpp"
#include "npgq/evaluate.hpp"
#include "npgq/mdp.hpp"

namespace npgq {

// State-dependent learning rates beta_s = g(sqrt(ln|A| / (T * M_s))) with
// g(z) = 1 + 2z + z^2/ln 2. M_s is floored at 1e-6 so beta_s stays finite
// and > 1.
struct LearningRateSchedule {
  int T = 0;
  int action_count = 0;
  std::vector<double> M;     // per-state reward-range bound
  std::vector<double> beta;  // per-state learning rate, each > 1

  void validate() const;
};

double g_rate(double zeta);  // 1 + 2z + z^2/ln 2

// M_s = c2 * r_hat^2 + c3 * |r_hat| + c4 from the ledger, floored at 1e-6.
// r_hat_max entries must be <= 0 (reduced rewards).
std::vector<double> compute_Ms(const ConstantsLedger& ledger,
                               const std::vector<double>& r_hat_max);

LearningRateSchedule make_schedule(const ConstantsLedger& ledger,
                                   const TruncatedMdp& mdp, int T);

// One multiplicative-weights step per state:
//   pi'(a|s) = pi(a|s) beta_s^{Q(s,a)} / Z_s.
// Computed in log space (shift-invariant per row), so beta^Q never overflows;
// throws std::overflow_error if a row degenerates anyway.
TabularPolicy npg_update(const TruncatedMdp& mdp, const TabularPolicy& pi,
                         const std::vector<double>& Q,
                         const LearningRateSchedule& schedule);

struct NpgTraceRow {
  int k = 0;
  double J = 0.0;
  double gap = 0.0;  // J_star - J_k (NaN when no oracle value is available)
  double min_V = 0.0, max_V = 0.0;  // over non-boundary states
  double poisson_residual = 0.0;
  double wall_ms = 0.0;
};

struct NpgTrace {
  std::vector<NpgTraceRow> rows;
  bool failed = false;
  std::string failure_reason;
  double max_boundary_mass = 0.0;  // worst stationary mass on boundary states

  void to_csv(std::string* out) const;  // header + one row per iteration
};

// Called once per iteration with everything the lemma checks need. pi_next is
// the policy after the update (null on the trailing evaluation-only record).
struct NpgIterationView {
  int k = 0;
  const TruncatedMdp* mdp = nullptr;
  const TabularPolicy* pi = nullptr;
  const EvalResult* eval = nullptr;
  const TabularPolicy* pi_next = nullptr;
  const LearningRateSchedule* schedule = nullptr;
};
using NpgObserver = std::function<void(const NpgIterationView&)>;

// T iterations of evaluate + update. Rows k = 0..T-1 are recorded before each
// update; a final row k = T records the returned policy (so J_T is in the
// trace). T = 0 returns pi0 unchanged with an empty trace. An evaluation
// failure mid-run returns the trace up to the failure, flagged.
std::pair<TabularPolicy, NpgTrace> run_npg(
    const TruncatedMdp& mdp, const TabularPolicy& pi0, int T,
    const ConstantsLedger& ledger, const NpgObserver& observer = nullptr);

}  // namespace npgq
