#pragma once

#include <string>

#include "npgq/config.hpp"

namespace npgq {

// Exit codes: 0 pass, 1 check failure, 2 usage/config error.

// Runs the NPG experiment over the T grid; writes one CSV per run, a summary
// JSON, and a gnuplot-compatible (T, gap, c_star/sqrt(T)) data file into the
// configured output directory.
int cmd_run(const ExperimentConfig& config);

// Runs the full verification suite; writes verify_report.json. With
// json_stdout the raw report goes to stdout, otherwise a one-line-per-check
// summary is printed.
int cmd_verify(const ExperimentConfig& config, bool json_stdout = false);

// Prints the constants ledger with provenance tags (text or JSON).
int cmd_constants(const ExperimentConfig& config, bool json_stdout = false);

// Full command-line front end.
int cli_main(int argc, char** argv);

}  // namespace npgq
