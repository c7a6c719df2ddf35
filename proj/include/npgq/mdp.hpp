#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace npgq {

// Dense index into the enumeration of a TruncatedMdp. Exactly one state per
// MDP is the distinguished state 0⃗ (zero_state).
using StateId = std::int32_t;

// State labels are small integer vectors (queue-length vectors for the
// queueing models, one-element encodings for toy chains).
using StateLabel = std::vector<int>;

using SparseRow = std::vector<std::pair<StateId, double>>;

// A countable-state MDP described implicitly: enough to enumerate a finite
// truncation around the distinguished state.
class CountableModel {
 public:
  virtual ~CountableModel() = default;
  virtual StateLabel zero_state() const = 0;
  virtual int action_count() const = 0;
  // Exact (untruncated) successor distribution of (s, a).
  virtual std::vector<std::pair<StateLabel, double>> successors(
      const StateLabel& s, int action) const = 0;
  virtual double reward(const StateLabel& s, int action) const = 0;
};

// Finite truncation of a countable-state average-reward MDP.
//
// Invariants (checked by validate()):
//   * every kernel row sums to 1 within 1e-12, entries in [0, 1];
//   * c_max equals the recomputed max of the reward table;
//   * the zero state is a maximum-reward state: r_max(zero_state) == c_max;
//   * boundary[s] marks states whose kernel was modified by the truncation.
struct TruncatedMdp {
  std::vector<StateLabel> states;
  int action_count = 0;
  std::vector<SparseRow> kernel;  // kernel[s * action_count + a], sorted by StateId
  std::vector<double> reward;     // reward[s * action_count + a]
  StateId zero_state = 0;
  double c_max = 0.0;
  std::vector<char> boundary;

  int state_count() const { return static_cast<int>(states.size()); }

  const SparseRow& row(StateId s, int a) const {
    return kernel[static_cast<std::size_t>(s) * action_count + a];
  }
  double r(StateId s, int a) const {
    return reward[static_cast<std::size_t>(s) * action_count + a];
  }
  double r_max(StateId s) const;
  // Reduced reward r_max(s) - c_max (always <= 0).
  double r_hat_max(StateId s) const { return r_max(s) - c_max; }

  StateId index_of(const StateLabel& label) const;  // -1 if absent
  std::string label_str(StateId s) const;

  void validate() const;  // throws std::runtime_error on violation

  // Assemble directly from dense tables (tests, toy chains). kernel entries
  // with probability 0 are dropped; boundary flags default to all-false.
  static TruncatedMdp from_tables(
      const std::vector<StateLabel>& states, int action_count,
      const std::vector<std::vector<std::vector<double>>>& dense_kernel,
      const std::vector<std::vector<double>>& reward, StateId zero_state);
};

// Per-state probability distribution over actions; the object NPG iterates on.
struct TabularPolicy {
  int action_count = 0;
  std::vector<double> probs;  // probs[s * action_count + a]

  int state_count() const {
    return action_count ? static_cast<int>(probs.size()) / action_count : 0;
  }
  std::span<const double> row(StateId s) const {
    return {probs.data() + static_cast<std::size_t>(s) * action_count,
            static_cast<std::size_t>(action_count)};
  }
  std::span<double> row(StateId s) {
    return {probs.data() + static_cast<std::size_t>(s) * action_count,
            static_cast<std::size_t>(action_count)};
  }
  double prob(StateId s, int a) const {
    return probs[static_cast<std::size_t>(s) * action_count + a];
  }

  bool strictly_positive() const;
  void validate() const;  // rows sum to 1 within 1e-12, entries >= 0

  static TabularPolicy uniform(int states, int actions);
  // One-hot rows from a state -> action map.
  static TabularPolicy deterministic(const std::vector<int>& action_map,
                                     int actions);
  // (1 - mix) on the mapped action plus mix spread uniformly; strictly
  // positive for mix > 0.
  static TabularPolicy softened(const std::vector<int>& action_map, int actions,
                                double mix);
};

// Enumerates all states reachable from the model's zero state with every
// label component clipped to [0, bound]. Probability mass that would leave
// the truncation is redirected to the component-wise clipped state; source
// rows that were modified get their boundary flag set.
TruncatedMdp build_truncated_mdp(const CountableModel& model, int bound);

}  // namespace npgq
