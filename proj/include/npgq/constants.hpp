#pragma once

#include <string>
#include <vector>

namespace npgq {

enum class Provenance { Supplied, Fitted, Derived };

std::string to_string(Provenance p);

struct LedgerEntry {
  double value = 0.0;
  Provenance tag = Provenance::Supplied;
  std::string note;  // free-form, e.g. "surrogate for the optimal average reward"
};

// Every named constant in the bound chain, from the reward-structure fits
// through the hitting-time bound to the rate constant. derive_chain() fills
// the derived tail from the supplied/fitted head; validate() re-checks every
// derivation identity, so a tampered entry is detected.
struct ConstantsLedger {
  // reward structure / model
  LedgerEntry c_max;
  LedgerEntry R1, R2, R3, R4;
  // initial policy quadratic bound V0(s) >= -c0 r_hat^2 - c1
  LedgerEntry c0, c1;
  // thresholds and connectedness
  LedgerEntry z;       // reward threshold, z < J0
  LedgerEntry J0;      // average reward of the initial policy
  LedgerEntry J_star;  // best known optimal average reward (oracle or surrogate)
  LedgerEntry J_star_surrogate;  // always c_max; feeds the derived chain
  bool J_star_is_oracle = false;
  LedgerEntry x_z, p_z;
  // derived chain
  LedgerEntry tau_bound;
  LedgerEntry c5_lemma, c6_lemma, c7_lemma;
  LedgerEntry c2, c3, c4;  // q-range bound coefficients: M_s = c2 r^2 + c3 |r| + c4
  LedgerEntry c5_main, c6_main;
  LedgerEntry c_star;

  int action_count = 0;

  // Computes tau_bound .. c_star from the entries above. The chain uses
  // J_star_surrogate (valid upper bounds computable before the optimal policy
  // is known); J_star is informational for checks that want the exact value.
  void derive_chain();

  // Throws std::runtime_error naming the first violated invariant or
  // derivation identity (witness for the ledger-consistency check).
  void validate() const;

  std::vector<std::pair<std::string, const LedgerEntry*>> entries() const;
  std::string to_text() const;
};

// Hitting-time bound of the uniform-connectedness argument:
//   x_z (c_max - y) / (p_z^2 (y - z)) + x_z.
double tau_bound_formula(double x_z, double p_z, double c_max, double y, double z);

}  // namespace npgq
