#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ir2n/hessian.hpp"
#include "ir2n/solver.hpp"

namespace ir2n {

enum class Experiment { Bpdn, MatComp, Fh };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

/// One point of a kappa_s sweep; std::nullopt stands for exact mode.
using KappaSetting = std::optional<double>;

std::string kappa_label(const KappaSetting& kappa);
KappaSetting kappa_from_label(const std::string& label);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "IR2N_OUT_DIR";

struct ExperimentConfig {
  Experiment experiment = Experiment::Bpdn;
  std::vector<KappaSetting> kappa_s{1e-7, 1e-5, 1e-3, 1e-2, 1e-1, 0.5, 0.9, 0.99, std::nullopt};
  int seeds = 10;
  std::uint64_t seed_base = 0;
  /// Base solver parameters; mode, kappa_s, epsilon and seed are set per run.
  SolverParams solver;
  /// Unset fields take the experiment defaults (see resolve()).
  std::optional<HessianKind> hessian;
  std::optional<double> epsilon;
  std::optional<double> noise_scale;
  std::optional<double> sampling_rate;
  /// Accuracy schedule for fh; unset evaluates at the tightest accuracy.
  std::optional<int> prec_N;
  std::filesystem::path out_dir;
  bool write_traces = true;
  /// 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;
  /// Fills every unset field with the experiment default.
  ExperimentConfig resolve() const;
};

/// Default out_dir: $IR2N_OUT_DIR, else "ir2n_out".
std::filesystem::path default_output_dir();

/// Reads a JSON object whose keys mirror ExperimentConfig field names; solver overrides
/// live under "solver" with SolverParams field names.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Per-run statistics, recomputable from the run's trace file.
struct RunStats {
  KappaSetting kappa;
  std::uint64_t seed = 0;
  SolverStatus status = SolverStatus::MaxIter;
  int outer = 0;
  double inner_per_outer = 0.0;
  double prox_per_call = 0.0;
  double time_s = 0.0;
  double final_objective = 0.0;
  Vector x;
  std::filesystem::path trace_path;
  std::filesystem::path solution_path;

  bool succeeded() const { return status == SolverStatus::FirstOrder; }
};

/// Trace-derived statistics of one solve.
RunStats summarize_trace(const std::vector<IterationRecord>& trace);

struct RunSummary {
  KappaSetting kappa;
  double ir2n_iters = 0.0;
  double ir2_iters_per_outer = 0.0;
  double prox_iters_per_call = 0.0;
  double time_s = 0.0;
  double fail_rate = 0.0;
  double final_objective = 0.0;
  int runs = 0;
  int failures = 0;
  std::filesystem::path solution_path;
};

/// Means over successful runs, fail_rate over all runs. Groups keep first-seen kappa order.
std::vector<RunSummary> aggregate(const std::vector<RunStats>& runs);

struct SweepResult {
  ExperimentConfig config;
  std::vector<RunStats> runs;
  std::vector<RunSummary> summaries;
};

/// Solves one (kappa, seed) instance of the configured experiment. Writes the trace and
/// solution files when the config asks for them.
RunStats run_single(const ExperimentConfig& resolved, const KappaSetting& kappa, std::uint64_t seed);

/// All (kappa, seed) pairs, in parallel across config.threads workers.
SweepResult run_sweep(const ExperimentConfig& config);

/// CSV with header kappa_s,ir2n_iters,ir2_iters_per_outer,prox_iters_per_call,time_s,
/// fail_rate,final_objective and values in %.2e.
std::string emit_table(const std::vector<RunSummary>& summaries);
std::vector<RunSummary> parse_table(const std::string& csv);

/// Line-delimited JSON: one "iteration" record per IterationRecord, then one "run" record.
void write_trace(const std::filesystem::path& path, Experiment experiment, const RunStats& run,
                 const std::vector<IterationRecord>& trace);
/// Re-reads every *.jsonl trace in a directory.
std::vector<RunStats> read_traces(const std::filesystem::path& dir);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick oracle and invariant checks on the library (used by `ir2n check`).
std::vector<CheckResult> run_checks();

}  // namespace ir2n
