#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "npgq/evaluate.hpp"
#include "npgq/mdp.hpp"

namespace npgq {

// Finitely-supported distribution over {0..ell}.
struct Pmf {
  std::vector<std::pair<int, double>> atoms;  // sorted by value, probs sum to 1

  double mean() const;
  int max_value() const;
  double p_of(int v) const;   // P(X = v)
  double p_geq(int v) const;  // P(X >= v)
  void validate() const;

  static Pmf bernoulli(double p);
  static Pmf constant(int v);
  static Pmf from_atoms(std::vector<std::pair<int, double>> atoms);
};

enum class RewardKind { MeanQueue, Weighted, AlphaMoment };

// Generalized switch with a static environment: n job classes, m service
// options, bounded i.i.d. arrivals v_i and completions w_i^j. Within a slot
// service is applied to the pre-arrival queue: q' = max(q - w, 0) + v.
struct GsseModel {
  int classes = 0;
  int options = 0;
  int ell = 0;  // global support bound
  std::vector<Pmf> arrivals;               // per class
  std::vector<std::vector<Pmf>> services;  // services[class][option]
  RewardKind reward_kind = RewardKind::MeanQueue;
  std::vector<double> weights;  // per class, Weighted only (all > 0)
  double alpha = 1.0;           // AlphaMoment only (>= 1)

  std::vector<double> lambda;  // recomputed means E[v_i]
  std::vector<double> mu;      // recomputed means mu[i * options + j]

  // Recomputes lambda/mu/ell and checks the non-triviality conditions:
  // P(v_i = 0) > 0, P(v_i > 0) > 0, and for every (i, j):
  // P(v_i > w_i^j) > 0 and P(v_i = w_i^j) > 0.
  void finalize();

  double reward_of(const StateLabel& q) const;
  // Per-class weight used by the matching MaxWeight variant.
  double mw_weight(int cls, int q) const;
};

struct CapacityMargin {
  double epsilon = 0.0;         // maximal slack, > 0
  std::vector<double> gamma;    // mixing distribution over options
};

enum class LyapunovKind { SumOfSquares, WeightedSumOfSquares, AlphaPower };

struct DriftCertificate {
  double c1 = 0.0;  // > 0
  double c2 = 0.0;  // >= 0
  LyapunovKind f_kind = LyapunovKind::SumOfSquares;
  std::vector<double> weights;  // for WeightedSumOfSquares
  double alpha = 1.0;           // for AlphaPower (f = sum q^{alpha+1})
  double max_violation = 0.0;   // over checked states; <= 0 certifies the drift
  StateLabel worst_state;

  double f(const StateLabel& q) const;
};

// Exact one-slot distribution of q' given the chosen service option.
std::vector<std::pair<StateLabel, double>> gsse_transition(
    const GsseModel& model, const StateLabel& q, int option);

// argmax_j sum_i weight_i(q_i) mu_i^j, ties broken by lowest index. The
// weight is q_i, c_i q_i, or q_i^alpha according to the model's reward kind.
int maxweight_action(const GsseModel& model, const StateLabel& q);

// Remaps a non-completing option at a nonzero state to the lowest-index
// option with positive completion probability on a present class.
int non_idling_remap(const GsseModel& model, const StateLabel& q, int option);

// Largest epsilon with (1 + epsilon) lambda_i <= sum_j gamma_j mu_i^j for a
// distribution gamma over options. Solved exactly by vertex enumeration of
// the (gamma, epsilon) polytope. Throws if no positive slack exists.
CapacityMargin capacity_margin(const GsseModel& model);

// Checks E[f(q') - f(q) | q] <= c1 r(q) + c2 at every state with
// sum(q) <= check_radius, exactly. Constants: c1 = 2 eps min_i(lambda_i/c_i),
// c2 = ell^2 n for the (weighted) sum-of-squares function; the alpha-power
// function uses explicit conservative constants derived the same way.
DriftCertificate drift_certificate(
    const GsseModel& model, const std::function<int(const StateLabel&)>& policy,
    int check_radius);

// From a negative-drift certificate: V(s) >= -c3 f(s) - c4 with c3 = 2/c1 and
// c4 the positive part of -min V over the finite high-reward set
// {s : r_max(s) >= -2 c2/c1 - J}. Asserts the bound at every non-boundary
// state; throws on failure.
std::pair<double, double> lyapunov_value_bound(const TruncatedMdp& mdp,
                                               const TabularPolicy& pi,
                                               const DriftCertificate& cert,
                                               const EvalResult& eval);

struct InitialPolicyFit {
  double c0 = 0.0;      // grid value actually used (> 0)
  double c1 = 0.0;      // exact residual deficit
  double c0_raw = 0.0;  // pre-rounding minimal c0
};

// Smallest c0 (rounded up to a fixed log grid), then c1, such that
// V0(s) >= -c0 r_hat_max(s)^2 - c1 at every non-boundary state.
InitialPolicyFit fit_initial_policy_constants(const TruncatedMdp& mdp,
                                              const EvalResult& eval0);

struct ConnectednessBound {
  double z = 0.0;
  double x_z = 0.0;  // 2 * max(1, max total queue among states with r_max >= z)
  double p_z = 0.0;  // product-of-elementary-probabilities lower bound
  std::string method;  // "constructive" | "enumeration"
};

// Constructive bound: drain to the zero state, then build the target back up
// one job at a time, each step priced at its worst-case option probability.
ConnectednessBound connectedness_constants(const TruncatedMdp& mdp,
                                           const GsseModel& model, double z);

// Exact minimization over all deterministic non-idling policies (dynamic
// programming on hitting probabilities). Only for tiny instances: requires
// options^state_count <= 1e6.
ConnectednessBound exact_connectedness_bound(const TruncatedMdp& mdp,
                                             const GsseModel& model, double z,
                                             int x_z);

struct AssumptionReport {
  double c_max = 0.0;
  double R1 = 0.0, R2 = 0.0;
  double margin_1c = 0.0;  // min over (s,a) of R1 r^2 + R2 - (rmax - r); >= 0 holds
  double R3 = 1.0, R4 = 0.0;
  double margin_1d = 0.0;  // min over adjacent pairs of rhat' - (R3 rhat - R4)
  std::vector<std::pair<double, int>> highreward_sizes;  // (z, |S_z|)
  std::vector<ConnectednessBound> connectedness;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Verifies the reward-structure assumptions with the constructive constants
// for the model's reward kind (R1 = R2 = 0; R3/R4 per kind) and computes the
// connectedness bounds on a small grid of thresholds.
AssumptionReport verify_assumptions(const TruncatedMdp& mdp,
                                    const GsseModel& model);

// Wraps a GsseModel as an enumerable countable-state MDP.
class GsseCountable : public CountableModel {
 public:
  explicit GsseCountable(GsseModel model) : model_(std::move(model)) {}
  StateLabel zero_state() const override {
    return StateLabel(model_.classes, 0);
  }
  int action_count() const override { return model_.options; }
  std::vector<std::pair<StateLabel, double>> successors(
      const StateLabel& s, int action) const override {
    return gsse_transition(model_, s, action);
  }
  double reward(const StateLabel& s, int) const override {
    return model_.reward_of(s);
  }
  const GsseModel& model() const { return model_; }

 private:
  GsseModel model_;
};

// Named presets: "single-queue", "nsystem", "switch2x2", "msj".
std::vector<std::string> preset_names();
GsseModel make_preset(const std::string& name);
int preset_default_truncation(const std::string& name);

// Non-idling MaxWeight option map over the truncated states.
std::vector<int> maxweight_policy_map(const GsseModel& model,
                                      const TruncatedMdp& mdp);

}  // namespace npgq
