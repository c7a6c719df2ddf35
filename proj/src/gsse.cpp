#include "npgq/gsse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace npgq {

// ---------------------------------------------------------------------------
// Pmf

double Pmf::mean() const {
  double m = 0.0;
  for (const auto& [v, p] : atoms) m += v * p;
  return m;
}

int Pmf::max_value() const {
  int m = 0;
  for (const auto& [v, p] : atoms)
    if (p > 0.0) m = std::max(m, v);
  return m;
}

double Pmf::p_of(int v) const {
  for (const auto& [x, p] : atoms)
    if (x == v) return p;
  return 0.0;
}

double Pmf::p_geq(int v) const {
  double sum = 0.0;
  for (const auto& [x, p] : atoms)
    if (x >= v) sum += p;
  return sum;
}

void Pmf::validate() const {
  if (atoms.empty()) throw std::invalid_argument("Pmf: empty support");
  double sum = 0.0;
  int prev = -1;
  for (const auto& [v, p] : atoms) {
    if (v < 0) throw std::invalid_argument("Pmf: negative support point");
    if (v <= prev) throw std::invalid_argument("Pmf: unsorted support");
    if (p < 0.0) throw std::invalid_argument("Pmf: negative probability");
    prev = v;
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("Pmf: probabilities sum to " + std::to_string(sum));
}

Pmf Pmf::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p outside [0,1]");
  return from_atoms({{0, 1.0 - p}, {1, p}});
}

Pmf Pmf::constant(int v) { return from_atoms({{v, 1.0}}); }

Pmf Pmf::from_atoms(std::vector<std::pair<int, double>> atoms) {
  std::sort(atoms.begin(), atoms.end());
  Pmf pmf;
  pmf.atoms = std::move(atoms);
  pmf.validate();
  return pmf;
}

// ---------------------------------------------------------------------------
// GsseModel

void GsseModel::finalize() {
  if (classes < 1 || options < 1)
    throw std::invalid_argument("GsseModel: needs at least one class and option");
  if (static_cast<int>(arrivals.size()) != classes ||
      static_cast<int>(services.size()) != classes)
    throw std::invalid_argument("GsseModel: distribution table shape mismatch");
  for (const auto& row : services)
    if (static_cast<int>(row.size()) != options)
      throw std::invalid_argument("GsseModel: service table shape mismatch");

  int support = 0;
  lambda.assign(classes, 0.0);
  mu.assign(static_cast<std::size_t>(classes) * options, 0.0);
  for (int i = 0; i < classes; ++i) {
    arrivals[i].validate();
    lambda[i] = arrivals[i].mean();
    support = std::max(support, arrivals[i].max_value());
    // Non-triviality: empty and non-empty arrival slots are both possible.
    if (!(arrivals[i].p_of(0) > 0.0))
      throw std::invalid_argument("GsseModel: class " + std::to_string(i) +
                                  " can never have an empty arrival slot");
    if (!(arrivals[i].p_geq(1) > 0.0))
      throw std::invalid_argument("GsseModel: class " + std::to_string(i) +
                                  " has zero arrival probability");
    for (int j = 0; j < options; ++j) {
      const Pmf& w = services[i][j];
      w.validate();
      mu[static_cast<std::size_t>(i) * options + j] = w.mean();
      support = std::max(support, w.max_value());
      // More arrivals than completions, and equally many, are both possible
      // for every (class, option); the state space stays connected under any
      // non-idling policy.
      double p_gt = 0.0, p_eq = 0.0;
      for (const auto& [vv, pv] : arrivals[i].atoms)
        for (const auto& [ww, pw] : w.atoms) {
          if (vv > ww) p_gt += pv * pw;
          if (vv == ww) p_eq += pv * pw;
        }
      if (!(p_gt > 0.0))
        throw std::invalid_argument(
            "GsseModel: arrivals can never outpace completions for class " +
            std::to_string(i) + ", option " + std::to_string(j));
      if (!(p_eq > 0.0))
        throw std::invalid_argument(
            "GsseModel: arrivals can never match completions for class " +
            std::to_string(i) + ", option " + std::to_string(j));
    }
  }
  if (ell < support) ell = support;

  if (reward_kind == RewardKind::Weighted) {
    if (static_cast<int>(weights.size()) != classes)
      throw std::invalid_argument("GsseModel: weight vector shape mismatch");
    for (double c : weights)
      if (!(c > 0.0)) throw std::invalid_argument("GsseModel: weights must be > 0");
  }
  if (reward_kind == RewardKind::AlphaMoment && !(alpha >= 1.0))
    throw std::invalid_argument("GsseModel: alpha must be >= 1");
}

double GsseModel::reward_of(const StateLabel& q) const {
  switch (reward_kind) {
    case RewardKind::MeanQueue: {
      long total = std::accumulate(q.begin(), q.end(), 0L);
      return 0.0 - static_cast<double>(total);
    }
    case RewardKind::Weighted: {
      double total = 0.0;
      for (int i = 0; i < classes; ++i) total += weights[i] * q[i];
      return 0.0 - total;
    }
    case RewardKind::AlphaMoment: {
      long total = std::accumulate(q.begin(), q.end(), 0L);
      return 0.0 - std::pow(static_cast<double>(total), alpha);
    }
  }
  return 0.0;
}

double GsseModel::mw_weight(int cls, int q) const {
  switch (reward_kind) {
    case RewardKind::MeanQueue: return static_cast<double>(q);
    case RewardKind::Weighted: return weights[cls] * q;
    case RewardKind::AlphaMoment: return std::pow(static_cast<double>(q), alpha);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Dynamics and MaxWeight

std::vector<std::pair<StateLabel, double>> gsse_transition(const GsseModel& model,
                                                           const StateLabel& q,
                                                           int option) {
  if (option < 0 || option >= model.options)
    throw std::invalid_argument("gsse_transition: option index out of range");
  if (static_cast<int>(q.size()) != model.classes)
    throw std::invalid_argument("gsse_transition: state has wrong dimension");
  for (int x : q)
    if (x < 0) throw std::invalid_argument("gsse_transition: negative queue");

  // Per-class next-length distribution, then the product across classes.
  std::vector<std::vector<std::pair<int, double>>> per_class(model.classes);
  for (int i = 0; i < model.classes; ++i) {
    std::map<int, double> dist;
    for (const auto& [w, pw] : model.services[i][option].atoms)
      for (const auto& [v, pv] : model.arrivals[i].atoms)
        dist[std::max(q[i] - w, 0) + v] += pw * pv;
    per_class[i].assign(dist.begin(), dist.end());
  }

  std::vector<std::pair<StateLabel, double>> out{{StateLabel{}, 1.0}};
  for (int i = 0; i < model.classes; ++i) {
    std::vector<std::pair<StateLabel, double>> next;
    next.reserve(out.size() * per_class[i].size());
    for (const auto& [prefix, p] : out)
      for (const auto& [v, pv] : per_class[i]) {
        StateLabel s = prefix;
        s.push_back(v);
        next.emplace_back(std::move(s), p * pv);
      }
    out = std::move(next);
  }
  return out;
}

int maxweight_action(const GsseModel& model, const StateLabel& q) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < model.options; ++j) {
    double score = 0.0;
    for (int i = 0; i < model.classes; ++i)
      score += model.mw_weight(i, q[i]) *
               model.mu[static_cast<std::size_t>(i) * model.options + j];
    if (score > best_score) {  // exact ties keep the lowest index
      best_score = score;
      best = j;
    }
  }
  return best;
}

int non_idling_remap(const GsseModel& model, const StateLabel& q, int option) {
  bool any_present = false;
  for (int x : q) any_present |= x > 0;
  if (!any_present) return option;
  auto completes = [&](int j) {
    for (int i = 0; i < model.classes; ++i)
      if (q[i] > 0 && model.services[i][j].p_geq(1) > 0.0) return true;
    return false;
  };
  if (completes(option)) return option;
  for (int j = 0; j < model.options; ++j)
    if (completes(j)) return j;
  return option;  // no option can serve the present classes
}

// ---------------------------------------------------------------------------
// Capacity region

CapacityMargin capacity_margin(const GsseModel& model) {
  const int m = model.options, n = model.classes;
  for (double l : model.lambda)
    if (!(l > 0.0)) throw std::runtime_error("capacity_margin: zero arrival rate");

  // Maximize epsilon over the polytope
  //   sum_j gamma_j = 1, gamma_j >= 0,
  //   sum_j gamma_j mu_i^j - epsilon lambda_i >= lambda_i.
  // A vertex makes m of the m+n inequalities tight; enumerate them all.
  const int total = m + n;
  std::vector<int> pick(m);
  std::iota(pick.begin(), pick.end(), 0);

  double best_eps = -std::numeric_limits<double>::infinity();
  std::vector<double> best_gamma;
  Eigen::MatrixXd A(m + 1, m + 1);
  Eigen::VectorXd b(m + 1);

  auto try_vertex = [&]() {
    A.setZero();
    b.setZero();
    for (int j = 0; j < m; ++j) A(0, j) = 1.0;  // simplex equality
    b(0) = 1.0;
    for (int r = 0; r < m; ++r) {
      const int c = pick[r];
      if (c < m) {
        A(r + 1, c) = 1.0;  // gamma_c = 0
      } else {
        const int i = c - m;  // capacity constraint i tight
        for (int j = 0; j < m; ++j)
          A(r + 1, j) = model.mu[static_cast<std::size_t>(i) * m + j];
        A(r + 1, m) = -model.lambda[i];
        b(r + 1) = model.lambda[i];
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd x = lu.solve(b);
    const double eps = x(m);
    for (int j = 0; j < m; ++j)
      if (x(j) < -1e-9) return;
    for (int i = 0; i < n; ++i) {
      double lhs = -model.lambda[i] * eps - model.lambda[i];
      for (int j = 0; j < m; ++j)
        lhs += x(j) * model.mu[static_cast<std::size_t>(i) * m + j];
      if (lhs < -1e-9) return;
    }
    if (eps > best_eps) {
      best_eps = eps;
      best_gamma.assign(x.data(), x.data() + m);
    }
  };

  // next-combination enumeration of `pick` out of total
  while (true) {
    try_vertex();
    int k = m - 1;
    while (k >= 0 && pick[k] == total - m + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int r = k + 1; r < m; ++r) pick[r] = pick[r - 1] + 1;
  }

  if (!(best_eps > 0.0))
    throw std::runtime_error(
        "capacity_margin: infeasible (arrival rates on or outside the capacity "
        "boundary)");
  for (double& g : best_gamma) g = std::max(g, 0.0);
  double sum = std::accumulate(best_gamma.begin(), best_gamma.end(), 0.0);
  for (double& g : best_gamma) g /= sum;
  return {best_eps, std::move(best_gamma)};
}

// ---------------------------------------------------------------------------
// Drift certificate

double DriftCertificate::f(const StateLabel& q) const {
  double sum = 0.0;
  switch (f_kind) {
    case LyapunovKind::SumOfSquares:
      for (int x : q) sum += static_cast<double>(x) * x;
      return sum;
    case LyapunovKind::WeightedSumOfSquares:
      for (std::size_t i = 0; i < q.size(); ++i)
        sum += weights[i] * static_cast<double>(q[i]) * q[i];
      return sum;
    case LyapunovKind::AlphaPower:
      for (int x : q) sum += std::pow(static_cast<double>(x), alpha + 1.0);
      return sum;
  }
  return sum;
}

namespace {

// Visit every q in Z^n_{>=0} with sum(q) <= radius.
void for_each_state(int classes, int radius,
                    const std::function<void(const StateLabel&)>& fn) {
  StateLabel q(classes, 0);
  std::function<void(int, int)> rec = [&](int cls, int left) {
    if (cls == classes - 1) {
      for (int v = 0; v <= left; ++v) {
        q[cls] = v;
        fn(q);
      }
      q[cls] = 0;
      return;
    }
    for (int v = 0; v <= left; ++v) {
      q[cls] = v;
      rec(cls + 1, left - v);
    }
    q[cls] = 0;
  };
  if (classes > 0) rec(0, radius);
}

}  // namespace

DriftCertificate drift_certificate(
    const GsseModel& model, const std::function<int(const StateLabel&)>& policy,
    int check_radius) {
  const CapacityMargin cm = capacity_margin(model);
  const int n = model.classes;
  const double ell = model.ell;
  const double lambda_min =
      *std::min_element(model.lambda.begin(), model.lambda.end());

  DriftCertificate cert;
  switch (model.reward_kind) {
    case RewardKind::MeanQueue:
      cert.f_kind = LyapunovKind::SumOfSquares;
      cert.c1 = 2.0 * cm.epsilon * lambda_min;
      cert.c2 = ell * ell * n;
      break;
    case RewardKind::Weighted: {
      cert.f_kind = LyapunovKind::WeightedSumOfSquares;
      cert.weights = model.weights;
      cert.c1 = 2.0 * cm.epsilon * lambda_min;
      cert.c2 = ell * ell *
                std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
      break;
    }
    case RewardKind::AlphaMoment: {
      cert.f_kind = LyapunovKind::AlphaPower;
      cert.alpha = model.alpha;
      const double a = model.alpha, p = a + 1.0;
      cert.c1 = p * cm.epsilon * lambda_min * std::pow(n, 1.0 - a) / 2.0;
      // Crossover radius beyond which half the drift beats the q^{alpha-1}
      // correction terms; below it they are charged to c2.
      const double q_star =
          3.0 * a * ell * ell * std::pow(2.0, a) / (cm.epsilon * lambda_min);
      cert.c2 = p * std::pow(2.0 * ell, a) * ell * n +
                n * 3.0 * p * a * ell * ell * std::pow(q_star + ell, a - 1.0);
      break;
    }
  }

  double worst = -std::numeric_limits<double>::infinity();
  StateLabel worst_state;
  for_each_state(n, check_radius, [&](const StateLabel& q) {
    const int j = policy(q);
    double expected_f = 0.0;
    for (const auto& [next, p] : gsse_transition(model, q, j))
      expected_f += p * cert.f(next);
    const double violation =
        expected_f - cert.f(q) - cert.c1 * model.reward_of(q) - cert.c2;
    if (violation > worst) {
      worst = violation;
      worst_state = q;
    }
  });
  cert.max_violation = worst;
  cert.worst_state = std::move(worst_state);
  return cert;
}

std::pair<double, double> lyapunov_value_bound(const TruncatedMdp& mdp,
                                               const TabularPolicy& pi,
                                               const DriftCertificate& cert,
                                               const EvalResult& eval) {
  (void)pi;
  if (cert.max_violation > 0.0)
    throw std::invalid_argument(
        "lyapunov_value_bound: certificate reports a drift violation");
  const double c3 = 2.0 / cert.c1;
  const double threshold = -2.0 * cert.c2 / cert.c1 - eval.J;

  double v_min = 0.0;  // empty high-reward set contributes nothing
  bool any = false;
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    if (mdp.r_max(s) >= threshold) {
      v_min = any ? std::min(v_min, eval.V[s]) : eval.V[s];
      any = true;
    }
  }
  const double c4 = std::max(0.0, -v_min);

  for (StateId s = 0; s < mdp.state_count(); ++s) {
    if (mdp.boundary[s]) continue;
    const double bound = -c3 * cert.f(mdp.states[s]) - c4;
    if (eval.V[s] < bound - 1e-8)
      throw std::runtime_error(
          "lyapunov_value_bound: bound fails at state " + mdp.label_str(s) +
          " (certificate or evaluation inconsistent)");
  }
  return {c3, c4};
}

// ---------------------------------------------------------------------------
// Initial-policy constants

InitialPolicyFit fit_initial_policy_constants(const TruncatedMdp& mdp,
                                              const EvalResult& eval0) {
  double c0_raw = 0.0;
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    if (mdp.boundary[s]) continue;
    const double need = std::max(0.0, -eval0.V[s]);
    const double rhat = mdp.r_hat_max(s);
    if (rhat != 0.0) c0_raw = std::max(c0_raw, need / (rhat * rhat));
  }

  // Fixed log grid 10^{k/8}, k in [-48, 48].
  double c0 = std::pow(10.0, -48.0 / 8.0);
  if (c0_raw > c0) {
    const double k = std::ceil(std::log10(c0_raw) * 8.0);
    if (k > 48.0)
      throw std::runtime_error("fit_initial_policy_constants: no finite fit on the grid");
    c0 = std::pow(10.0, k / 8.0);
  }

  double c1 = 0.0;
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    if (mdp.boundary[s]) continue;
    const double rhat = mdp.r_hat_max(s);
    c1 = std::max(c1, -eval0.V[s] - c0 * rhat * rhat);
  }
  return {c0, std::max(c1, 0.0), c0_raw};
}

// ---------------------------------------------------------------------------
// Connectedness

namespace {

// P(one slot takes a class from x to y) under option j.
double class_step_prob(const GsseModel& model, int cls, int option, int x, int y) {
  double p = 0.0;
  for (const auto& [w, pw] : model.services[cls][option].atoms)
    for (const auto& [v, pv] : model.arrivals[cls].atoms)
      if (std::max(x - w, 0) + v == y) p += pw * pv;
  return p;
}

}  // namespace

ConnectednessBound connectedness_constants(const TruncatedMdp& mdp,
                                           const GsseModel& model, double z) {
  ConnectednessBound out;
  out.z = z;
  out.method = "constructive";

  std::vector<StateId> S_z;
  long max_total = 0;
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    if (mdp.r_max(s) >= z) {
      S_z.push_back(s);
      max_total = std::max(
          max_total, std::accumulate(mdp.states[s].begin(), mdp.states[s].end(), 0L));
    }
  }
  const long Z = std::max(1L, max_total);
  out.x_z = 2.0 * static_cast<double>(Z);

  // Drain phase: each slot, the chosen option completes at least one present
  // job and nothing arrives.
  double p0_all = 1.0;
  for (int i = 0; i < model.classes; ++i) p0_all *= model.arrivals[i].p_of(0);
  double p_w_min = 1.0;
  bool any_completion = false;
  for (int i = 0; i < model.classes; ++i)
    for (int j = 0; j < model.options; ++j) {
      const double p = model.services[i][j].p_geq(1);
      if (p > 0.0) {
        any_completion = true;
        p_w_min = std::min(p_w_min, p);
      }
    }
  if (!any_completion || p0_all <= 0.0) {
    out.p_z = 0.0;
    return out;
  }
  const double p_down = std::pow(p0_all * p_w_min, static_cast<double>(Z));

  // Fill phase: raise classes one job at a time in class order, pricing each
  // slot at its worst option.
  double p_up = 1.0;
  for (StateId sid : S_z) {
    const StateLabel& target = mdp.states[sid];
    double path = 1.0;
    StateLabel x(model.classes, 0);
    for (int cls = 0; cls < model.classes && path > 0.0; ++cls) {
      for (int step = 0; step < target[cls] && path > 0.0; ++step) {
        double worst = 1.0;
        for (int j = 0; j < model.options; ++j) {
          double pj = class_step_prob(model, cls, j, x[cls], x[cls] + 1);
          for (int i = 0; i < model.classes; ++i)
            if (i != cls) pj *= class_step_prob(model, i, j, x[i], x[i]);
          worst = std::min(worst, pj);
        }
        path *= worst;
        ++x[cls];
      }
    }
    p_up = std::min(p_up, path);
  }

  out.p_z = std::min(1.0, p_down * p_up);
  return out;
}

ConnectednessBound exact_connectedness_bound(const TruncatedMdp& mdp,
                                             const GsseModel& model, double z,
                                             int x_z) {
  const int n = mdp.state_count();
  const int m = mdp.action_count;
  double policies = 1.0;
  for (int s = 0; s < n; ++s) {
    policies *= m;
    if (policies > 1e6)
      throw std::invalid_argument(
          "exact_connectedness_bound: policy space too large to enumerate");
  }

  std::vector<StateId> S_z;
  for (StateId s = 0; s < n; ++s)
    if (mdp.r_max(s) >= z) S_z.push_back(s);

  ConnectednessBound out;
  out.z = z;
  out.x_z = x_z;
  out.method = "enumeration";
  double p_min = 1.0;

  std::vector<int> map(n, 0);
  const long count = static_cast<long>(policies);
  std::vector<double> h(n), h_next(n);
  for (long code = 0; code < count; ++code) {
    long c = code;
    bool idling = false;
    for (int s = 0; s < n; ++s) {
      map[s] = static_cast<int>(c % m);
      c /= m;
      // the quantifier ranges over non-idling policies only
      idling |= non_idling_remap(model, mdp.states[s], map[s]) != map[s];
    }
    if (idling) continue;
    for (StateId target : S_z) {
      // h_t(u) = P(reach target within t steps from u)
      for (int u = 0; u < n; ++u) h[u] = (u == target) ? 1.0 : 0.0;
      for (int t = 0; t < x_z; ++t) {
        for (int u = 0; u < n; ++u) {
          if (u == target) {
            h_next[u] = 1.0;
            continue;
          }
          double acc = 0.0;
          for (const auto& [v, p] : mdp.row(u, map[u])) acc += p * h[v];
          h_next[u] = acc;
        }
        std::swap(h, h_next);
      }
      for (StateId from : S_z) p_min = std::min(p_min, h[from]);
    }
  }
  out.p_z = p_min;
  return out;
}

// ---------------------------------------------------------------------------
// Assumption verification

AssumptionReport verify_assumptions(const TruncatedMdp& mdp,
                                    const GsseModel& model) {
  AssumptionReport rep;
  rep.c_max = mdp.c_max;

  // Reward independent of the action in every state: R1 = R2 = 0.
  rep.R1 = 0.0;
  rep.R2 = 0.0;
  double margin_c = std::numeric_limits<double>::infinity();
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    const double rhat_max = mdp.r_hat_max(s);
    for (int a = 0; a < mdp.action_count; ++a) {
      const double rhat = mdp.r(s, a) - mdp.c_max;
      margin_c = std::min(
          margin_c, rep.R1 * rhat_max * rhat_max + rep.R2 - (rhat_max - rhat));
    }
  }
  rep.margin_1c = margin_c;
  if (margin_c < 0.0)
    rep.violations.push_back("reward spread exceeds R1 r^2 + R2");

  // Neighboring rewards: constructive R3/R4 per reward kind.
  const double n_prime = static_cast<double>(model.ell) * model.classes;
  switch (model.reward_kind) {
    case RewardKind::MeanQueue:
      rep.R3 = 1.0;
      rep.R4 = n_prime;
      break;
    case RewardKind::Weighted: {
      double wsum = std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
      rep.R3 = 1.0;
      rep.R4 = model.ell * wsum;
      break;
    }
    case RewardKind::AlphaMoment: {
      const double a = model.alpha;
      rep.R3 = 2.0;
      rep.R4 = n_prime * a * std::pow(2.0 * a * n_prime + n_prime, a - 1.0);
      break;
    }
  }
  double margin_d = std::numeric_limits<double>::infinity();
  for (StateId s = 0; s < mdp.state_count(); ++s) {
    const double rhat_s = mdp.r_hat_max(s);
    for (int a = 0; a < mdp.action_count; ++a)
      for (const auto& [t, p] : mdp.row(s, a)) {
        if (p <= 0.0) continue;
        margin_d =
            std::min(margin_d, mdp.r_hat_max(t) - (rep.R3 * rhat_s - rep.R4));
      }
  }
  if (model.reward_kind == RewardKind::AlphaMoment) {
    // Beyond the truncation: (q + n')^alpha <= 2 q^alpha + R4, swept exactly.
    for (long q = 0; q <= 10000; ++q) {
      const double lhs = std::pow(static_cast<double>(q) + n_prime, model.alpha);
      const double rhs = 2.0 * std::pow(static_cast<double>(q), model.alpha) + rep.R4;
      margin_d = std::min(margin_d, rhs - lhs);
    }
  }
  rep.margin_1d = margin_d;
  if (margin_d < 0.0)
    rep.violations.push_back("neighboring rewards violate R3/R4 bound");

  // Finitely many high-reward states, reported for a grid of thresholds,
  // together with the connectedness constants.
  for (double dz : {1.0, 2.0, 4.0, 8.0}) {
    const double z = mdp.c_max - dz;
    int count = 0;
    for (StateId s = 0; s < mdp.state_count(); ++s)
      if (mdp.r_max(s) >= z) ++count;
    rep.highreward_sizes.emplace_back(z, count);
    rep.connectedness.push_back(connectedness_constants(mdp, model, z));
    if (!(rep.connectedness.back().p_z > 0.0))
      rep.violations.push_back("constructive connectedness bound degenerate at z=" +
                               std::to_string(z));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
  return {"single-queue", "nsystem", "switch2x2", "msj"};
}

GsseModel make_preset(const std::string& name) {
  GsseModel m;
  if (name == "single-queue") {
    // One class; option 0 serves, option 1 idles.
    m.classes = 1;
    m.options = 2;
    m.arrivals = {Pmf::bernoulli(0.3)};
    m.services = {{Pmf::bernoulli(0.6), Pmf::constant(0)}};
  } else if (name == "nsystem") {
    // Dedicated server on class 1, flexible server on class 1 or 2.
    // Option 0: flexible helps class 2; option 1: both servers on class 1.
    m.classes = 2;
    m.options = 2;
    m.arrivals = {Pmf::bernoulli(0.15), Pmf::bernoulli(0.15)};
    const double a = 0.7, b = 0.7;
    Pmf two = Pmf::from_atoms(
        {{0, (1 - a) * (1 - b)}, {1, a * (1 - b) + b * (1 - a)}, {2, a * b}});
    m.services = {{Pmf::bernoulli(a), two},
                  {Pmf::bernoulli(b), Pmf::constant(0)}};
  } else if (name == "switch2x2") {
    // VOQs (in,out): 0=(1,1), 1=(1,2), 2=(2,1), 3=(2,2).
    // The two perfect matchings serve {0,3} and {1,2}.
    m.classes = 4;
    m.options = 2;
    m.arrivals.assign(4, Pmf::bernoulli(0.05));
    const Pmf on = Pmf::bernoulli(0.95), off = Pmf::constant(0);
    m.services = {{on, off}, {off, on}, {off, on}, {on, off}};
  } else if (name == "msj") {
    // Two servers; class 1 jobs need one server, class 2 jobs need both.
    // Packings: two class-1 slots / one class-2 job / one class-1 slot.
    m.classes = 2;
    m.options = 3;
    m.arrivals = {Pmf::bernoulli(0.2), Pmf::bernoulli(0.15)};
    const double mu = 0.8;
    Pmf two = Pmf::from_atoms(
        {{0, (1 - mu) * (1 - mu)}, {1, 2 * mu * (1 - mu)}, {2, mu * mu}});
    m.services = {{two, Pmf::constant(0), Pmf::bernoulli(mu)},
                  {Pmf::constant(0), Pmf::bernoulli(mu), Pmf::constant(0)}};
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  m.finalize();
  return m;
}

int preset_default_truncation(const std::string& name) {
  if (name == "single-queue") return 50;
  if (name == "nsystem") return 20;
  if (name == "switch2x2") return 6;
  if (name == "msj") return 12;
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<int> maxweight_policy_map(const GsseModel& model,
                                      const TruncatedMdp& mdp) {
  std::vector<int> map(mdp.state_count());
  for (StateId s = 0; s < mdp.state_count(); ++s)
    map[s] = non_idling_remap(model, mdp.states[s],
                              maxweight_action(model, mdp.states[s]));
  return map;
}

}  // namespace npgq
