#include "npgq/evaluate.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace npgq {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kResidualTarget = 1e-10;

// Sparse row representation of P_pi (actions mixed by the policy).
std::vector<SparseRow> induced_kernel(const TruncatedMdp& mdp,
                                      const TabularPolicy& pi) {
  const int n = mdp.state_count();
  std::vector<SparseRow> rows(n);
  std::vector<double> dense(n, 0.0);
  std::vector<StateId> touched;
  for (StateId s = 0; s < n; ++s) {
    touched.clear();
    for (int a = 0; a < mdp.action_count; ++a) {
      const double w = pi.prob(s, a);
      if (w == 0.0) continue;
      for (const auto& [t, p] : mdp.row(s, a)) {
        if (dense[t] == 0.0) touched.push_back(t);
        dense[t] += w * p;
      }
    }
    std::sort(touched.begin(), touched.end());
    SparseRow& row = rows[s];
    row.reserve(touched.size());
    for (StateId t : touched) {
      row.emplace_back(t, dense[t]);
      dense[t] = 0.0;
    }
  }
  return rows;
}

// Every state must be able to reach `target` through the support graph.
void require_reaches(const std::vector<SparseRow>& P, StateId target,
                     const TruncatedMdp& mdp) {
  const int n = static_cast<int>(P.size());
  // reverse adjacency over the support
  std::vector<std::vector<StateId>> rev(n);
  for (StateId s = 0; s < n; ++s)
    for (const auto& [t, p] : P[s])
      if (p > 0.0) rev[t].push_back(s);
  std::vector<char> seen(n, 0);
  std::deque<StateId> queue{target};
  seen[target] = 1;
  while (!queue.empty()) {
    StateId u = queue.front();
    queue.pop_front();
    for (StateId v : rev[u])
      if (!seen[v]) { seen[v] = 1; queue.push_back(v); }
  }
  for (StateId s = 0; s < n; ++s)
    if (!seen[s])
      throw std::runtime_error(
          "evaluate_policy: state " + mdp.label_str(s) +
          " cannot reach the zero state under this policy (reducible chain)");
}

// Taboo system (I - Q) over the non-target states, Q = P with the target row
// and column removed. One factorization serves the hitting times, the
// relative values, and (through the transpose) the stationary visit counts.
struct TabooSystem {
  SpMat A;
  Eigen::SparseLU<SpMat> lu;
  int n = 0;
  StateId target = 0;

  int col(StateId s) const { return s < target ? s : s - 1; }

  TabooSystem(const std::vector<SparseRow>& P, StateId target_state)
      : n(static_cast<int>(P.size())), target(target_state) {
    std::vector<Triplet> trips;
    for (StateId s = 0; s < n; ++s) {
      if (s == target) continue;
      trips.emplace_back(col(s), col(s), 1.0);
      for (const auto& [t, p] : P[s])
        if (t != target) trips.emplace_back(col(s), col(t), -p);
    }
    A.resize(n - 1, n - 1);
    A.setFromTriplets(trips.begin(), trips.end());
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("linear solve failed (taboo factorization)");
  }

  // Direct solve with one step of iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) {
    Eigen::VectorXd x = lu.solve(b);
    Eigen::VectorXd r = b - A * x;
    x += lu.solve(r);
    return x;
  }
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) {
    Eigen::VectorXd x = lu.adjoint().solve(b);
    Eigen::VectorXd r = b - A.transpose() * x;
    x += lu.adjoint().solve(r);
    return x;
  }

  std::vector<double> expand(const Eigen::VectorXd& x, double at_target) const {
    std::vector<double> out(n, at_target);
    for (StateId s = 0; s < n; ++s)
      if (s != target) out[s] = x[col(s)];
    return out;
  }
};

std::vector<double> hitting_time_impl(const std::vector<SparseRow>& P,
                                      StateId target) {
  if (P.size() == 1) return {0.0};
  TabooSystem sys(P, target);
  return sys.expand(sys.solve(Eigen::VectorXd::Ones(sys.n - 1)), 0.0);
}

}  // namespace

double EvalResult::boundary_mass(const TruncatedMdp& mdp) const {
  double mass = 0.0;
  for (StateId s = 0; s < mdp.state_count(); ++s)
    if (mdp.boundary[s]) mass += d[s];
  return mass;
}

EvalResult evaluate_policy(const TruncatedMdp& mdp, const TabularPolicy& pi) {
  const int n = mdp.state_count();
  const int A = mdp.action_count;
  if (pi.action_count != A || pi.state_count() != n)
    throw std::invalid_argument("evaluate_policy: policy shape mismatch");

  const auto P = induced_kernel(mdp, pi);
  require_reaches(P, mdp.zero_state, mdp);

  std::vector<double> r_pi(n, 0.0);
  for (StateId s = 0; s < n; ++s)
    for (int a = 0; a < A; ++a) r_pi[s] += pi.prob(s, a) * mdp.r(s, a);

  if (n == 1) {
    EvalResult trivial;
    trivial.J = r_pi[0];
    trivial.d = {1.0};
    trivial.V = {0.0};
    trivial.tau = {0.0};
    trivial.Q.resize(A);
    for (int a = 0; a < A; ++a) trivial.Q[a] = mdp.r(0, a) - trivial.J;
    return trivial;
  }

  // Renewal route around the zero state: with Q the taboo-restricted kernel,
  //   tau = (I-Q)^{-1} 1,  a = (I-Q)^{-1} r,  V(s) = a(s) - J tau(s),
  //   J = (r(0) + p0.a) / (1 + p0.tau)   (reward per return cycle),
  //   nu^T (I-Q) = p0^T gives the expected visit counts per cycle, so
  //   d = nu / cycle length. Identical solutions, one factorization.
  const StateId zero = mdp.zero_state;
  TabooSystem sys(P, zero);
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n - 1);
  for (const auto& [t, p] : P[zero])
    if (t != zero) p0[sys.col(t)] = p;
  Eigen::VectorXd r_vec(n - 1);
  for (StateId s = 0; s < n; ++s)
    if (s != zero) r_vec[sys.col(s)] = r_pi[s];

  const Eigen::VectorXd tau_vec = sys.solve(Eigen::VectorXd::Ones(n - 1));
  const Eigen::VectorXd a_vec = sys.solve(r_vec);
  const Eigen::VectorXd nu = sys.solve_transposed(p0);

  EvalResult out;
  const double cycle = 1.0 + p0.dot(tau_vec);
  out.J = (r_pi[zero] + p0.dot(a_vec)) / cycle;
  out.tau = sys.expand(tau_vec, 0.0);
  out.V.assign(n, 0.0);
  out.d.assign(n, 0.0);
  out.d[zero] = 1.0 / cycle;
  for (StateId s = 0; s < n; ++s) {
    if (s == zero) continue;
    out.V[s] = a_vec[sys.col(s)] - out.J * tau_vec[sys.col(s)];
    out.d[s] = nu[sys.col(s)] / cycle;
  }

  out.Q.resize(static_cast<std::size_t>(n) * A);
  for (StateId s = 0; s < n; ++s) {
    for (int a = 0; a < A; ++a) {
      double ev = 0.0;
      for (const auto& [t, p] : mdp.row(s, a)) ev += p * out.V[t];
      out.Q[static_cast<std::size_t>(s) * A + a] = mdp.r(s, a) - out.J + ev;
    }
  }

  // Residuals.
  double poisson = 0.0;
  for (StateId s = 0; s < n; ++s) {
    double ev = 0.0;
    for (const auto& [t, p] : P[s]) ev += p * out.V[t];
    poisson = std::max(poisson, std::abs(out.J + out.V[s] - r_pi[s] - ev));
  }
  std::vector<double> dP(n, 0.0);
  double dsum = 0.0, J_from_d = 0.0;
  for (StateId s = 0; s < n; ++s) {
    dsum += out.d[s];
    J_from_d += out.d[s] * r_pi[s];
    for (const auto& [t, p] : P[s]) dP[t] += out.d[s] * p;
  }
  double stat = std::abs(dsum - 1.0);
  for (StateId s = 0; s < n; ++s)
    stat = std::max(stat, std::abs(dP[s] - out.d[s]));
  out.poisson_residual = poisson;
  out.stationarity_residual = stat;

  if (poisson > kResidualTarget || stat > kResidualTarget ||
      std::abs(out.J - J_from_d) > kResidualTarget)
    throw std::runtime_error("evaluate_policy: solve did not meet residual target");
  return out;
}

std::vector<double> hitting_time(const TruncatedMdp& mdp,
                                 const TabularPolicy& pi, StateId target) {
  if (target < 0 || target >= mdp.state_count())
    throw std::invalid_argument("hitting_time: target out of range");
  const auto P = induced_kernel(mdp, pi);
  require_reaches(P, target, mdp);
  return hitting_time_impl(P, target);
}

OptimalResult optimal_average_reward(const TruncatedMdp& mdp,
                                     const std::optional<std::vector<int>>& init,
                                     int max_iterations) {
  const int n = mdp.state_count();
  const int A = mdp.action_count;
  std::vector<int> action_map;
  if (init) {
    action_map = *init;
    if (static_cast<int>(action_map.size()) != n)
      throw std::invalid_argument("optimal_average_reward: init size mismatch");
  } else {
    action_map.resize(n);
    for (StateId s = 0; s < n; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (mdp.r(s, a) > mdp.r(s, best)) best = a;
      action_map[s] = best;
    }
  }

  OptimalResult out;
  constexpr double kImprove = 1e-10;
  for (int it = 0; it < max_iterations; ++it) {
    ++out.iterations;
    TabularPolicy pi = TabularPolicy::deterministic(action_map, A);
    EvalResult eval = evaluate_policy(mdp, pi);  // throws if not unichain-to-zero
    bool changed = false;
    for (StateId s = 0; s < n; ++s) {
      const double* Qs = eval.Q.data() + static_cast<std::size_t>(s) * A;
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (Qs[a] > Qs[best] + 1e-12) best = a;  // lowest index on ties
      if (best != action_map[s] && Qs[best] > Qs[action_map[s]] + kImprove) {
        action_map[s] = best;
        changed = true;
      }
    }
    if (!changed) {
      out.J_star = eval.J;
      out.pi_star = std::move(pi);
      out.converged = true;
      return out;
    }
  }
  // Cap hit: report the best policy found, flagged non-converged.
  TabularPolicy pi = TabularPolicy::deterministic(action_map, A);
  EvalResult eval = evaluate_policy(mdp, pi);
  out.J_star = eval.J;
  out.pi_star = std::move(pi);
  out.converged = false;
  return out;
}

}  // namespace npgq
