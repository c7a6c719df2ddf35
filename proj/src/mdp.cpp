#include "npgq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace npgq {

namespace {
constexpr double kRowSumTol = 1e-12;
}

double TruncatedMdp::r_max(StateId s) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < action_count; ++a) best = std::max(best, r(s, a));
  return best;
}

StateId TruncatedMdp::index_of(const StateLabel& label) const {
  for (StateId s = 0; s < state_count(); ++s)
    if (states[s] == label) return s;
  return -1;
}

std::string TruncatedMdp::label_str(StateId s) const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < states[s].size(); ++i) {
    if (i) os << ',';
    os << states[s][i];
  }
  os << ')';
  return os.str();
}

void TruncatedMdp::validate() const {
  if (states.empty()) throw std::runtime_error("TruncatedMdp: empty state space");
  if (action_count <= 0) throw std::runtime_error("TruncatedMdp: no actions");
  if (zero_state < 0 || zero_state >= state_count())
    throw std::runtime_error("TruncatedMdp: zero_state out of range");
  if (kernel.size() != states.size() * static_cast<std::size_t>(action_count) ||
      reward.size() != kernel.size() || boundary.size() != states.size())
    throw std::runtime_error("TruncatedMdp: table shape mismatch");

  double cmax = -std::numeric_limits<double>::infinity();
  for (double v : reward) {
    if (!std::isfinite(v) && v > 0)
      throw std::runtime_error("TruncatedMdp: reward not bounded above");
    cmax = std::max(cmax, v);
  }
  if (!std::isfinite(cmax)) throw std::runtime_error("TruncatedMdp: c_max not finite");
  if (cmax != c_max) throw std::runtime_error("TruncatedMdp: stored c_max is stale");
  if (r_max(zero_state) != c_max)
    throw std::runtime_error("TruncatedMdp: zero state is not a maximum-reward state");

  for (StateId s = 0; s < state_count(); ++s) {
    for (int a = 0; a < action_count; ++a) {
      double sum = 0.0;
      StateId prev = -1;
      for (const auto& [sid, p] : row(s, a)) {
        if (sid <= prev || sid >= state_count())
          throw std::runtime_error("TruncatedMdp: kernel row not sorted/in range");
        prev = sid;
        if (p < 0.0 || p > 1.0)
          throw std::runtime_error("TruncatedMdp: kernel entry outside [0,1] at " +
                                   label_str(s));
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::runtime_error("TruncatedMdp: kernel row of " + label_str(s) +
                                 " sums to " + std::to_string(sum));
    }
  }
}

TruncatedMdp TruncatedMdp::from_tables(
    const std::vector<StateLabel>& states, int action_count,
    const std::vector<std::vector<std::vector<double>>>& dense_kernel,
    const std::vector<std::vector<double>>& reward, StateId zero_state) {
  TruncatedMdp mdp;
  mdp.states = states;
  mdp.action_count = action_count;
  mdp.zero_state = zero_state;
  mdp.boundary.assign(states.size(), 0);
  mdp.kernel.resize(states.size() * action_count);
  mdp.reward.resize(states.size() * action_count);
  double cmax = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (int a = 0; a < action_count; ++a) {
      SparseRow row;
      for (std::size_t t = 0; t < states.size(); ++t) {
        double p = dense_kernel[s][a][t];
        if (p != 0.0) row.emplace_back(static_cast<StateId>(t), p);
      }
      mdp.kernel[s * action_count + a] = std::move(row);
      mdp.reward[s * action_count + a] = reward[s][a];
      cmax = std::max(cmax, reward[s][a]);
    }
  }
  mdp.c_max = cmax;
  mdp.validate();
  return mdp;
}

bool TabularPolicy::strictly_positive() const {
  return std::all_of(probs.begin(), probs.end(), [](double p) { return p > 0.0; });
}

void TabularPolicy::validate() const {
  if (action_count <= 0 || probs.size() % action_count != 0)
    throw std::runtime_error("TabularPolicy: bad shape");
  for (int s = 0; s < state_count(); ++s) {
    double sum = 0.0;
    for (double p : row(s)) {
      if (p < 0.0) throw std::runtime_error("TabularPolicy: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::runtime_error("TabularPolicy: row does not sum to 1");
  }
}

TabularPolicy TabularPolicy::uniform(int states, int actions) {
  TabularPolicy pi;
  pi.action_count = actions;
  pi.probs.assign(static_cast<std::size_t>(states) * actions, 1.0 / actions);
  return pi;
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& action_map,
                                           int actions) {
  TabularPolicy pi;
  pi.action_count = actions;
  pi.probs.assign(action_map.size() * actions, 0.0);
  for (std::size_t s = 0; s < action_map.size(); ++s)
    pi.probs[s * actions + action_map[s]] = 1.0;
  return pi;
}

TabularPolicy TabularPolicy::softened(const std::vector<int>& action_map,
                                      int actions, double mix) {
  if (mix <= 0.0 || mix >= 1.0)
    throw std::invalid_argument("softened: mix must be in (0,1)");
  TabularPolicy pi;
  pi.action_count = actions;
  pi.probs.assign(action_map.size() * actions, mix / actions);
  for (std::size_t s = 0; s < action_map.size(); ++s)
    pi.probs[s * actions + action_map[s]] += 1.0 - mix;
  return pi;
}

TruncatedMdp build_truncated_mdp(const CountableModel& model, int bound) {
  if (bound < 0) throw std::invalid_argument("build_truncated_mdp: negative bound");
  const int actions = model.action_count();
  if (actions <= 0) throw std::invalid_argument("build_truncated_mdp: no actions");

  auto clip = [bound](StateLabel s, bool* clipped) {
    for (int& x : s) {
      if (x > bound) { x = bound; *clipped = true; }
      if (x < 0)     { x = 0;     *clipped = true; }
    }
    return s;
  };

  TruncatedMdp mdp;
  mdp.action_count = actions;
  std::map<StateLabel, StateId> index;

  const StateLabel zero = model.zero_state();
  {
    bool c = false;
    if (clip(zero, &c) != zero)
      throw std::invalid_argument("build_truncated_mdp: zero state outside bound");
  }
  index.emplace(zero, 0);
  mdp.states.push_back(zero);
  mdp.zero_state = 0;

  std::deque<StateId> frontier{0};
  while (!frontier.empty()) {
    const StateId s = frontier.front();
    frontier.pop_front();
    const StateLabel label = mdp.states[s];  // copy; states vector reallocates
    bool row_clipped = false;
    for (int a = 0; a < actions; ++a) {
      // Merge successors that collapse onto the same clipped state.
      std::map<StateLabel, double> merged;
      for (const auto& [raw, p] : model.successors(label, a)) {
        if (p < 0.0) throw std::runtime_error("build_truncated_mdp: negative probability");
        if (p == 0.0) continue;
        merged[clip(raw, &row_clipped)] += p;
      }
      double sum = 0.0;
      SparseRow row;
      row.reserve(merged.size());
      for (const auto& [next, p] : merged) {
        auto [it, fresh] = index.emplace(next, static_cast<StateId>(mdp.states.size()));
        if (fresh) {
          mdp.states.push_back(next);
          frontier.push_back(it->second);
        }
        row.emplace_back(it->second, p);
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::runtime_error("build_truncated_mdp: kernel row fails to normalize");
      std::sort(row.begin(), row.end());
      mdp.kernel.push_back(std::move(row));
      mdp.reward.push_back(model.reward(label, a));
    }
    mdp.boundary.push_back(row_clipped ? 1 : 0);
  }

  // kernel/reward were appended in BFS order: rows of state s occupy
  // [s*actions, (s+1)*actions). boundary likewise.
  double cmax = -std::numeric_limits<double>::infinity();
  for (double v : mdp.reward) cmax = std::max(cmax, v);
  mdp.c_max = cmax;
  mdp.validate();
  return mdp;
}

}  // namespace npgq
