#include "npgq/npg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace npgq {

namespace {
constexpr double kMsFloor = 1e-6;
}

double g_rate(double zeta) { return 1.0 + 2.0 * zeta + zeta * zeta / std::log(2.0); }

void LearningRateSchedule::validate() const {
  if (T < 0 || action_count < 1) throw std::runtime_error("schedule: bad shape");
  if (M.size() != beta.size()) throw std::runtime_error("schedule: size mismatch");
  const double lnA = std::log(static_cast<double>(action_count));
  for (std::size_t s = 0; s < M.size(); ++s) {
    if (!(M[s] > 0.0)) throw std::runtime_error("schedule: M_s not positive");
    const double expected =
        T > 0 ? g_rate(std::sqrt(lnA / (T * M[s]))) : 1.0;
    if (std::abs(beta[s] - expected) > 1e-12 * (1.0 + expected))
      throw std::runtime_error("schedule: beta_s does not match g");
  }
}

std::vector<double> compute_Ms(const ConstantsLedger& ledger,
                               const std::vector<double>& r_hat_max) {
  const double c2 = ledger.c2.value, c3 = ledger.c3.value, c4 = ledger.c4.value;
  if (c2 < 0.0 || c3 < 0.0 || c4 < 0.0)
    throw std::invalid_argument("compute_Ms: negative ledger constants");
  std::vector<double> M(r_hat_max.size());
  for (std::size_t s = 0; s < M.size(); ++s) {
    if (r_hat_max[s] > 1e-12)
      throw std::invalid_argument("compute_Ms: reduced reward must be <= 0");
    const double r = std::abs(r_hat_max[s]);
    M[s] = std::max(c2 * r * r + c3 * r + c4, kMsFloor);
  }
  return M;
}

LearningRateSchedule make_schedule(const ConstantsLedger& ledger,
                                   const TruncatedMdp& mdp, int T) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  LearningRateSchedule sched;
  sched.T = T;
  sched.action_count = mdp.action_count;
  std::vector<double> r_hat(mdp.state_count());
  for (StateId s = 0; s < mdp.state_count(); ++s) r_hat[s] = mdp.r_hat_max(s);
  sched.M = compute_Ms(ledger, r_hat);
  sched.beta.resize(sched.M.size());
  const double lnA = std::log(static_cast<double>(mdp.action_count));
  for (std::size_t s = 0; s < sched.M.size(); ++s)
    sched.beta[s] = g_rate(std::sqrt(lnA / (T * sched.M[s])));
  return sched;
}

TabularPolicy npg_update(const TruncatedMdp& mdp, const TabularPolicy& pi,
                         const std::vector<double>& Q,
                         const LearningRateSchedule& schedule) {
  const int n = mdp.state_count();
  const int A = mdp.action_count;
  if (pi.state_count() != n || pi.action_count != A)
    throw std::invalid_argument("npg_update: policy shape mismatch");
  if (Q.size() != static_cast<std::size_t>(n) * A)
    throw std::invalid_argument("npg_update: Q shape mismatch");
  if (!pi.strictly_positive())
    throw std::invalid_argument("npg_update: policy must be strictly positive");

  TabularPolicy next = pi;
  std::vector<double> logits(A);
  for (StateId s = 0; s < n; ++s) {
    const double log_beta = std::log(schedule.beta[s]);
    const double* Qs = Q.data() + static_cast<std::size_t>(s) * A;
    double hi = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      if (!std::isfinite(Qs[a]))
        throw std::invalid_argument("npg_update: non-finite Q entry");
      logits[a] = std::log(pi.prob(s, a)) + Qs[a] * log_beta;
      hi = std::max(hi, logits[a]);
    }
    double Z = 0.0;
    auto out = next.row(s);
    for (int a = 0; a < A; ++a) {
      out[a] = std::exp(logits[a] - hi);
      Z += out[a];
    }
    for (int a = 0; a < A; ++a) {
      out[a] /= Z;
      if (out[a] <= 0.0)
        throw std::overflow_error(
            "npg_update: row underflow at state " + mdp.label_str(s) +
            " (Q range vastly exceeds the M_s scale)");
    }
  }
  return next;
}

void NpgTrace::to_csv(std::string* out) const {
  out->append("iteration,J,gap,min_V,max_V,poisson_residual,wall_ms\n");
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n",
                  r.k, r.J, r.gap, r.min_V, r.max_V, r.poisson_residual,
                  r.wall_ms);
    out->append(buf);
  }
}

std::pair<TabularPolicy, NpgTrace> run_npg(const TruncatedMdp& mdp,
                                           const TabularPolicy& pi0, int T,
                                           const ConstantsLedger& ledger,
                                           const NpgObserver& observer) {
  if (T < 0) throw std::invalid_argument("run_npg: negative T");
  NpgTrace trace;
  if (T == 0) return {pi0, trace};
  if (!pi0.strictly_positive())
    throw std::invalid_argument("run_npg: initial policy must be strictly positive");

  const LearningRateSchedule schedule = make_schedule(ledger, mdp, T);
  const double J_star = ledger.J_star.value;
  const bool have_gap = ledger.J_star_is_oracle;

  auto record = [&](int k, const EvalResult& eval, double ms) {
    NpgTraceRow row;
    row.k = k;
    row.J = eval.J;
    row.gap = have_gap ? J_star - eval.J
                       : std::numeric_limits<double>::quiet_NaN();
    row.min_V = std::numeric_limits<double>::infinity();
    row.max_V = -std::numeric_limits<double>::infinity();
    for (StateId s = 0; s < mdp.state_count(); ++s) {
      if (mdp.boundary[s]) continue;
      row.min_V = std::min(row.min_V, eval.V[s]);
      row.max_V = std::max(row.max_V, eval.V[s]);
    }
    row.poisson_residual = eval.poisson_residual;
    row.wall_ms = ms;
    trace.rows.push_back(row);
  };

  TabularPolicy pi = pi0;
  for (int k = 0; k < T; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalResult eval;
    try {
      eval = evaluate_policy(mdp, pi);
    } catch (const std::exception& e) {
      trace.failed = true;
      trace.failure_reason = "iteration " + std::to_string(k) + ": " + e.what();
      return {pi, trace};
    }
    trace.max_boundary_mass =
        std::max(trace.max_boundary_mass, eval.boundary_mass(mdp));
    TabularPolicy next = npg_update(mdp, pi, eval.Q, schedule);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    record(k, eval, ms);
    if (observer) {
      NpgIterationView view{k, &mdp, &pi, &eval, &next, &schedule};
      observer(view);
    }
    pi = std::move(next);
  }
  // Trailing evaluation so the trace carries J_T.
  const auto t0 = std::chrono::steady_clock::now();
  EvalResult eval;
  try {
    eval = evaluate_policy(mdp, pi);
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.failure_reason = "final evaluation: " + std::string(e.what());
    return {pi, trace};
  }
  trace.max_boundary_mass =
      std::max(trace.max_boundary_mass, eval.boundary_mass(mdp));
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  record(T, eval, ms);
  if (observer) {
    NpgIterationView view{T, &mdp, &pi, &eval, nullptr, &schedule};
    observer(view);
  }
  return {pi, trace};
}

}  // namespace npgq
