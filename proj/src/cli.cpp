#include "npgq/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "npgq/npg.hpp"
#include "npgq/verify.hpp"

namespace npgq {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

nlohmann::ordered_json ledger_json(const ConstantsLedger& ledger) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& [name, e] : ledger.entries())
    entries.push_back({{"name", name},
                       {"value", e->value},
                       {"tag", to_string(e->tag)},
                       {"note", e->note}});
  return entries;
}

}  // namespace

int cmd_run(const ExperimentConfig& config) {
  Pipeline pl;
  try {
    pl = build_pipeline(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::filesystem::path out_dir(config.resolved_out_dir());
  std::filesystem::create_directories(out_dir);

  const std::string run_status =
      pl.truncation.adequate ? "ok" : "inconclusive: truncation";

  // Runs across the T grid are independent; execute them concurrently.
  std::vector<std::future<std::pair<TabularPolicy, NpgTrace>>> futures;
  futures.reserve(config.T_grid.size());
  for (int T : config.T_grid)
    futures.push_back(std::async(std::launch::async, [&pl, T] {
      return run_npg(pl.mdp, pl.pi0, T, pl.ledger);
    }));

  nlohmann::ordered_json summary;
  summary["model"] = config.model;
  summary["seed"] = config.seed;
  summary["truncation"] = {{"bound", pl.truncation.bound},
                           {"states", pl.truncation.states},
                           {"boundary_mass_initial", pl.truncation.boundary_mass_initial},
                           {"adequate", pl.truncation.adequate}};
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();

  std::string rate_dat = "# T  gap  c_star/sqrt(T)\n";
  double c_hat = 0.0;
  bool any_failed = false;
  char buf[160];
  for (std::size_t i = 0; i < futures.size(); ++i) {
    const int T = config.T_grid[i];
    auto [pi_T, trace] = futures[i].get();
    std::string csv;
    trace.to_csv(&csv);
    write_file(out_dir / ("run_T" + std::to_string(T) + ".csv"), csv);

    nlohmann::ordered_json run;
    run["T"] = T;
    run["status"] = trace.failed ? "failed: " + trace.failure_reason : run_status;
    any_failed |= trace.failed;
    if (!trace.failed) {
      const double J_T = trace.rows.back().J;
      run["J_T"] = J_T;
      if (pl.have_oracle) {
        const double gap = pl.J_star_oracle - J_T;
        run["gap"] = gap;
        c_hat = std::max(c_hat, gap * std::sqrt(static_cast<double>(T)));
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", T, gap,
                      pl.ledger.c_star.value / std::sqrt(static_cast<double>(T)));
        rate_dat += buf;
      }
    }
    runs.push_back(std::move(run));
  }
  summary["runs"] = std::move(runs);
  if (pl.have_oracle) {
    summary["J_star"] = pl.J_star_oracle;
    summary["c_hat"] = c_hat;
  }
  summary["c_star"] = pl.ledger.c_star.value;
  summary["ledger"] = ledger_json(pl.ledger);
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  write_file(out_dir / "rate.dat", rate_dat);
  write_file(out_dir / "model.cfg", to_config_text(pl.model));

  std::cout << "wrote " << config.T_grid.size() << " run CSVs, summary.json and "
            << "rate.dat to " << out_dir.string() << "\n";
  return any_failed ? 1 : 0;
}

int cmd_verify(const ExperimentConfig& config, bool json_stdout) {
  VerificationReport report;
  try {
    report = run_full_verification(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const std::filesystem::path out_dir(config.resolved_out_dir());
  std::filesystem::create_directories(out_dir);
  const std::string json = report.to_json();
  write_file(out_dir / "verify_report.json", json);

  if (json_stdout) {
    std::cout << json;
  } else {
    for (const auto& c : report.checks) {
      std::printf("[%-4s] %-28s margin=%- .6g %s\n",
                  to_string(c.status).c_str(), c.name.c_str(), c.margin,
                  c.reason.c_str());
    }
    std::cout << "report: " << (out_dir / "verify_report.json").string() << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_constants(const ExperimentConfig& config, bool json_stdout) {
  Pipeline pl;
  try {
    pl = build_pipeline(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (json_stdout)
    std::cout << ledger_json(pl.ledger).dump(2) << "\n";
  else
    std::cout << pl.ledger.to_text();
  return 0;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"natural policy gradient with state-dependent learning rates "
               "on truncated queueing MDPs"};
  app.require_subcommand(1);

  std::string config_path, model, init, T_csv, out_dir;
  long truncation = -1, truncation_cap = -1, seed = -1;
  double alpha = -1.0;
  bool json_flag = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file");
    sub->add_option("--model", model, "preset name (or 'inline' with a config file)");
    sub->add_option("--T", T_csv, "comma-separated iteration grid");
    sub->add_option("--truncation", truncation, "per-component buffer bound");
    sub->add_option("--truncation-cap", truncation_cap, "adequacy doubling cap");
    sub->add_option("--init", init, "maxweight|weighted-maxweight|alpha-maxweight|uniform|file");
    sub->add_option("--alpha", alpha, "alpha-moment exponent");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--out", out_dir, "output directory (default $NPGQ_OUT_DIR or .)");
    sub->add_flag("--json", json_flag, "machine-readable output");
  };

  CLI::App* run = app.add_subcommand("run", "execute NPG runs over the T grid");
  CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
  CLI::App* constants = app.add_subcommand("constants", "print the constants ledger");
  add_common(run);
  add_common(verify);
  add_common(constants);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help/message
    return 2;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) config = parse_config_file(config_path);
    if (!model.empty()) apply_config_override(&config, "model", model);
    if (!T_csv.empty()) apply_config_override(&config, "T", T_csv);
    if (truncation >= 0) config.truncation = static_cast<int>(truncation);
    if (truncation_cap >= 0) config.truncation_cap = static_cast<int>(truncation_cap);
    if (!init.empty()) config.init = init;
    if (alpha >= 0.0) config.alpha = alpha;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) config.out_dir = out_dir;
    config.validate();

    if (run->parsed()) return cmd_run(config);
    if (verify->parsed()) return cmd_verify(config, json_flag);
    if (constants->parsed()) return cmd_constants(config, json_flag);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace npgq
