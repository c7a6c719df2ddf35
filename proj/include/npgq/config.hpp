#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "npgq/gsse.hpp"

namespace npgq {

// One experiment: which model, reward, truncation policy, T grid, initial
// policy, ledger overrides, seed, and output location. Parsed from a
// key-value config file with [sections]; every key has a flag equivalent and
// flags override file values.
struct ExperimentConfig {
  std::string model;  // preset name, or "inline" with [gsse] section present
  std::optional<GsseModel> inline_model;

  std::string reward = "mean-queue";  // mean-queue | weighted | alpha-moment
  std::vector<double> weights;        // weighted reward only
  double alpha = 1.0;                 // alpha-moment reward only

  int truncation = 0;       // 0: preset default
  int truncation_cap = 320;

  std::vector<int> T_grid = {16, 64, 256, 1024};

  std::string init = "maxweight";  // maxweight | weighted-maxweight |
                                   // alpha-maxweight | uniform | file
  double init_mix = 0.05;          // softening mass for maxweight inits
  std::string init_file;

  std::map<std::string, double> ledger_overrides;  // by ledger entry name
  std::optional<double> z;   // reward threshold override (default J0 - 1)

  std::uint64_t seed = 0;
  std::string out_dir;  // empty: $NPGQ_OUT_DIR or "."

  int drift_radius = 30;
  int oracle_state_cap = 30000;  // skip the optimal-policy oracle above this

  void validate() const;  // throws std::invalid_argument with a message
  GsseModel build_model() const;  // preset or inline, reward kind applied
  int initial_truncation() const;
  std::string resolved_out_dir() const;
};

// Parses the config file format: `key = value` lines, `[section]` headers,
// `#` comments. Distributions are `value:prob, value:prob, ...` lists that
// must sum to 1 within 1e-9. Errors carry the line number.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");

// Applies one `key=value` override (the flag surface reuses config keys).
void apply_config_override(ExperimentConfig* config, const std::string& key,
                           const std::string& value);

// Renders a model as a parseable [gsse] section plus reward keys, so emitted
// experiments can be replayed from their own artifacts.
std::string to_config_text(const GsseModel& model);

}  // namespace npgq
