#include "npgq/constants.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace npgq {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Supplied: return "supplied";
    case Provenance::Fitted: return "fitted";
    case Provenance::Derived: return "derived";
  }
  return "?";
}

double tau_bound_formula(double x_z, double p_z, double c_max, double y, double z) {
  if (y - z < 1e-6)
    throw std::invalid_argument("tau_bound_formula: thresholds too close (y - z < 1e-6)");
  return x_z * (c_max - y) / (p_z * p_z * (y - z)) + x_z;
}

void ConstantsLedger::derive_chain() {
  const double Js = J_star_surrogate.value;
  const double y = J0.value, zz = z.value, cm = c_max.value;

  tau_bound = {tau_bound_formula(x_z.value, p_z.value, cm, y, zz),
               Provenance::Derived, ""};
  const double denom = y - zz;
  c5_lemma = {(Js - zz) / denom, Provenance::Derived, ""};
  c6_lemma = {tau_bound.value * (Js - y) * (cm - zz) * (Js - zz) / (denom * denom),
              Provenance::Derived, ""};
  c7_lemma = {tau_bound.value * (cm - y), Provenance::Derived, ""};

  c2 = {c0.value * c5_lemma.value * R3.value * R3.value + R1.value,
        Provenance::Derived, ""};
  c3 = {2.0 * c0.value * c5_lemma.value * R3.value * R4.value,
        Provenance::Derived, ""};
  // The doubled c6_lemma term is deliberate (the expectation bound is applied
  // once for each action of the pair).
  c4 = {c0.value * c5_lemma.value * R4.value * R4.value +
            c1.value * c5_lemma.value + 2.0 * c6_lemma.value + R2.value,
        Provenance::Derived, ""};

  c5_main = {std::sqrt(c2.value) + std::sqrt(c3.value), Provenance::Derived, ""};
  c6_main = {std::sqrt(c3.value) / 4.0 + std::sqrt(c4.value), Provenance::Derived, ""};
  c_star = {std::sqrt(std::log(static_cast<double>(action_count))) *
                    (c5_main.value * (cm - Js) + c6_main.value) +
                std::log2(static_cast<double>(action_count)) / 2.0,
            Provenance::Derived,
            "uses the J_star surrogate; regret tail term log2|A|/2"};
}

namespace {
void check_eq(const char* name, double stored, double expected) {
  if (std::abs(stored - expected) > 1e-12 * (1.0 + std::abs(expected)))
    throw std::runtime_error(std::string("ledger-consistency: entry ") + name +
                             " does not match its derivation");
}
}  // namespace

void ConstantsLedger::validate() const {
  if (action_count < 1) throw std::runtime_error("ledger-consistency: action_count < 1");
  if (!(R3.value >= 1.0)) throw std::runtime_error("ledger-consistency: R3 < 1");
  if (!(R1.value >= 0.0 && R2.value >= 0.0 && R4.value >= 0.0))
    throw std::runtime_error("ledger-consistency: negative reward-structure constant");
  if (!(c0.value > 0.0)) throw std::runtime_error("ledger-consistency: c0 <= 0");
  if (!(c1.value >= 0.0)) throw std::runtime_error("ledger-consistency: c1 < 0");
  if (!(p_z.value > 0.0 && p_z.value <= 1.0))
    throw std::runtime_error("ledger-consistency: p_z outside (0,1]");
  if (!(z.value < J0.value)) throw std::runtime_error("ledger-consistency: z >= J0");
  if (!(x_z.value >= 1.0)) throw std::runtime_error("ledger-consistency: x_z < 1");

  const double Js = J_star_surrogate.value;
  const double y = J0.value, zz = z.value, cm = c_max.value;
  check_eq("tau_bound", tau_bound.value,
           tau_bound_formula(x_z.value, p_z.value, cm, y, zz));
  const double denom = y - zz;
  check_eq("c5_lemma", c5_lemma.value, (Js - zz) / denom);
  check_eq("c6_lemma", c6_lemma.value,
           tau_bound.value * (Js - y) * (cm - zz) * (Js - zz) / (denom * denom));
  check_eq("c7_lemma", c7_lemma.value, tau_bound.value * (cm - y));
  check_eq("c2", c2.value, c0.value * c5_lemma.value * R3.value * R3.value + R1.value);
  check_eq("c3", c3.value, 2.0 * c0.value * c5_lemma.value * R3.value * R4.value);
  check_eq("c4", c4.value,
           c0.value * c5_lemma.value * R4.value * R4.value +
               c1.value * c5_lemma.value + 2.0 * c6_lemma.value + R2.value);
  check_eq("c5_main", c5_main.value, std::sqrt(c2.value) + std::sqrt(c3.value));
  check_eq("c6_main", c6_main.value,
           std::sqrt(c3.value) / 4.0 + std::sqrt(c4.value));
  check_eq("c_star", c_star.value,
           std::sqrt(std::log(static_cast<double>(action_count))) *
                   (c5_main.value * (cm - Js) + c6_main.value) +
               std::log2(static_cast<double>(action_count)) / 2.0);
}

std::vector<std::pair<std::string, const LedgerEntry*>> ConstantsLedger::entries()
    const {
  return {
      {"c_max", &c_max}, {"R1", &R1}, {"R2", &R2}, {"R3", &R3}, {"R4", &R4},
      {"c0", &c0}, {"c1", &c1}, {"z", &z}, {"J0", &J0}, {"J_star", &J_star},
      {"J_star_surrogate", &J_star_surrogate}, {"x_z", &x_z}, {"p_z", &p_z},
      {"tau_bound", &tau_bound}, {"c5_lemma", &c5_lemma},
      {"c6_lemma", &c6_lemma}, {"c7_lemma", &c7_lemma}, {"c2", &c2},
      {"c3", &c3}, {"c4", &c4}, {"c5_main", &c5_main}, {"c6_main", &c6_main},
      {"c_star", &c_star},
  };
}

std::string ConstantsLedger::to_text() const {
  std::ostringstream os;
  char buf[64];
  for (const auto& [name, e] : entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", e->value);
    os << name << " = " << buf << "  [" << to_string(e->tag) << "]";
    if (!e->note.empty()) os << "  # " << e->note;
    os << '\n';
  }
  return os.str();
}

}  // namespace npgq
