// Command-line front end: run sweeps, re-aggregate traces, run the self checks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ir2n/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitBadArguments = 2;

int print_summaries(const std::vector<ir2n::RunSummary>& summaries, const std::filesystem::path* csv_path) {
  const std::string table = ir2n::emit_table(summaries);
  std::cout << table;
  if (csv_path) {
    std::ofstream out(*csv_path);
    out << table;
    std::cerr << "table written to " << csv_path->string() << '\n';
  }
  for (const auto& s : summaries)
    if (s.failures > 0) return kExitSolverFailure;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iR2N: inexact proximal quasi-Newton experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a kappa_s sweep over seeds for one experiment");
  std::string experiment;
  std::vector<std::string> kappas;
  std::optional<int> seeds;
  std::string mode;
  std::string hessian;
  std::optional<double> epsilon;
  std::optional<int> prec_n;
  std::string out_dir;
  std::string config_path;
  std::optional<double> noise_scale;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed_base;
  bool no_traces = false;
  run->add_option("experiment", experiment, "bpdn, matcomp or fh")->required();
  run->add_option("--kappa-s", kappas, "kappa_s values in (0, 1] or 'exact'");
  run->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  run->add_option("--mode", mode, "exact or inexact")->check(CLI::IsMember({"exact", "inexact"}));
  run->add_option("--hessian", hessian, "zero, diag or lsr1")->check(CLI::IsMember({"zero", "diag", "lsr1"}));
  run->add_option("--epsilon", epsilon, "outer stopping tolerance")->check(CLI::PositiveNumber);
  run->add_option("--prec-N", prec_n, "accuracy schedule length (fh only)")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (default $IR2N_OUT_DIR or ir2n_out)");
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--noise-scale", noise_scale, "data noise scale (bpdn, fh)")->check(CLI::NonNegativeNumber);
  run->add_option("--seed-base", seed_base, "first seed");
  run->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  run->add_flag("--no-traces", no_traces, "skip trace and solution files");

  auto* table = app.add_subcommand("table", "Re-aggregate a directory of trace files into a table");
  std::string trace_dir;
  table->add_option("trace-dir", trace_dir, "directory holding *.jsonl traces")->required()->check(CLI::ExistingDirectory);

  auto* check = app.add_subcommand("check", "Run the oracle and invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 maps --help to a zero exit; everything else is a usage error.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadArguments;
  }

  try {
    if (*run) {
      ir2n::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = ir2n::load_config(config_path);
      cfg.experiment = ir2n::experiment_from_string(experiment);
      if (!kappas.empty()) {
        cfg.kappa_s.clear();
        for (const auto& k : kappas) cfg.kappa_s.push_back(ir2n::kappa_from_label(k));
      }
      if (mode == "exact") {
        cfg.kappa_s = {std::nullopt};
      } else if (mode == "inexact") {
        std::erase_if(cfg.kappa_s, [](const ir2n::KappaSetting& k) { return !k.has_value(); });
        if (cfg.kappa_s.empty()) throw ir2n::InvalidArgument("--mode inexact needs at least one kappa_s value");
      }
      if (seeds) cfg.seeds = *seeds;
      if (!hessian.empty()) cfg.hessian = ir2n::hessian_kind_from_string(hessian);
      if (epsilon) cfg.epsilon = epsilon;
      if (prec_n) cfg.prec_N = prec_n;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (noise_scale) cfg.noise_scale = noise_scale;
      if (seed_base) cfg.seed_base = *seed_base;
      if (threads) cfg.threads = *threads;
      if (no_traces) cfg.write_traces = false;

      const ir2n::SweepResult sweep = ir2n::run_sweep(cfg);
      std::filesystem::create_directories(sweep.config.out_dir);
      const auto csv = sweep.config.out_dir / (ir2n::to_string(sweep.config.experiment) + "_table.csv");
      return print_summaries(sweep.summaries, &csv);
    }
    if (*table) {
      const auto runs = ir2n::read_traces(trace_dir);
      if (runs.empty()) throw ir2n::InvalidArgument("no traces found in " + trace_dir);
      return print_summaries(ir2n::aggregate(runs), nullptr);
    }
    if (*check) {
      bool all = true;
      for (const auto& c : ir2n::run_checks()) {
        std::printf("%s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        all = all && c.passed;
      }
      return all ? kExitOk : kExitSolverFailure;
    }
  } catch (const ir2n::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitBadArguments;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
  return kExitOk;
}
