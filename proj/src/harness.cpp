#include "ir2n/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ir2n/problems.hpp"
#include "ir2n/projections.hpp"
#include "ir2n/prox.hpp"
#include "ir2n/regularizers.hpp"

namespace ir2n {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------------------------
// Experiment wiring

Regularizer experiment_regularizer(Experiment e) {
  switch (e) {
    case Experiment::Bpdn: return LpNormReg{1.1, 0.1};
    case Experiment::MatComp: return TvpReg{1.1, 0.1, 120};
    case Experiment::Fh: return LpBallReg{0.5, 2.0, 3};
  }
  throw InvalidArgument("unknown experiment");
}

std::string file_stem(Experiment e, const KappaSetting& kappa, std::uint64_t seed) {
  return to_string(e) + "_" + kappa_label(kappa) + "_seed" + std::to_string(seed);
}

IterationStatus status_from_string(const std::string& s) {
  if (s == "very_successful") return IterationStatus::VerySuccessful;
  if (s == "successful") return IterationStatus::Successful;
  return IterationStatus::Unsuccessful;
}

SolverStatus solver_status_from_string(const std::string& s) {
  if (s == "first_order") return SolverStatus::FirstOrder;
  if (s == "max_iter") return SolverStatus::MaxIter;
  if (s == "prox_failure") return SolverStatus::ProxFailure;
  if (s == "non_finite") return SolverStatus::NonFinite;
  throw InvalidArgument("unknown solver status '" + s + "'");
}

ProxStop prox_stop_from_string(const std::string& s) {
  if (s == "early_norm") return ProxStop::EarlyNorm;
  if (s == "native") return ProxStop::Native;
  if (s == "budget") return ProxStop::Budget;
  return ProxStop::Failure;
}

// nlohmann writes NaN and infinities as null; read them back as NaN.
double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

json record_to_json(const IterationRecord& r) {
  return json{{"type", "iteration"},
              {"k", r.k},
              {"fhat", r.fhat},
              {"h", r.h},
              {"xi_hat", r.xi_hat},
              {"nu", r.nu},
              {"sigma", r.sigma},
              {"rho_hat", r.rho_hat},
              {"status", to_string(r.status)},
              {"step_norm", r.step_norm},
              {"cauchy_norm", r.cauchy_norm},
              {"prox_iters", r.prox_iters},
              {"inner_iters", r.inner_iters},
              {"inner_prox_calls", r.inner_prox_calls},
              {"inner_prox_iters", r.inner_prox_iters},
              {"prec", r.prec},
              {"prox_stop", to_string(r.prox_stop)},
              {"bound_M", r.bound_M},
              {"kappa_s", r.kappa_s},
              {"model_step", r.model_step},
              {"model_cauchy", r.model_cauchy},
              {"theta2_reset", r.theta2_reset},
              {"degenerate_model", r.degenerate_model},
              {"inner_certificate_violations", r.inner_certificate_violations}};
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.k = j.at("k").get<int>();
  r.fhat = number_or_nan(j.at("fhat"));
  r.h = number_or_nan(j.at("h"));
  r.xi_hat = number_or_nan(j.at("xi_hat"));
  r.nu = number_or_nan(j.at("nu"));
  r.sigma = number_or_nan(j.at("sigma"));
  r.rho_hat = number_or_nan(j.at("rho_hat"));
  r.status = status_from_string(j.at("status").get<std::string>());
  r.step_norm = number_or_nan(j.at("step_norm"));
  r.cauchy_norm = number_or_nan(j.at("cauchy_norm"));
  r.prox_iters = j.at("prox_iters").get<int>();
  r.inner_iters = j.at("inner_iters").get<int>();
  r.inner_prox_calls = j.at("inner_prox_calls").get<int>();
  r.inner_prox_iters = j.at("inner_prox_iters").get<int>();
  r.prec = number_or_nan(j.at("prec"));
  r.prox_stop = prox_stop_from_string(j.at("prox_stop").get<std::string>());
  r.bound_M = number_or_nan(j.at("bound_M"));
  r.kappa_s = number_or_nan(j.at("kappa_s"));
  r.model_step = number_or_nan(j.at("model_step"));
  r.model_cauchy = number_or_nan(j.at("model_cauchy"));
  r.theta2_reset = j.at("theta2_reset").get<bool>();
  r.degenerate_model = j.at("degenerate_model").get<bool>();
  r.inner_certificate_violations = j.at("inner_certificate_violations").get<int>();
  return r;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_solver_overrides(const json& j, SolverParams& p) {
  read_field(j, "theta1", p.theta1);
  read_field(j, "theta2", p.theta2);
  read_field(j, "gamma1", p.gamma1);
  read_field(j, "gamma2", p.gamma2);
  read_field(j, "gamma3", p.gamma3);
  read_field(j, "eta1_hat", p.eta1_hat);
  read_field(j, "eta2_hat", p.eta2_hat);
  read_field(j, "sigma_min", p.sigma_min);
  read_field(j, "sigma0", p.sigma0);
  read_field(j, "max_iter", p.max_iter);
  read_field(j, "prox_native_tol", p.prox_native_tol);
  read_field(j, "prox_max_inner", p.prox_max_inner);
  read_field(j, "max_prox_failures", p.max_prox_failures);
  if (j.contains("inner")) {
    const json& in = j.at("inner");
    read_field(in, "kappa_in", p.inner.kappa_in);
    read_field(in, "max_iter", p.inner.max_iter);
  }
  for (const auto& [key, value] : j.items()) {
    static const char* known[] = {"theta1",   "theta2",    "gamma1",          "gamma2",
                                  "gamma3",   "eta1_hat",  "eta2_hat",        "sigma_min",
                                  "sigma0",   "max_iter",  "prox_native_tol", "prox_max_inner",
                                  "max_prox_failures", "inner"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      throw InvalidArgument("unknown solver parameter '" + key + "'");
    }
  }
}

std::string format_e(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Names and config

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Bpdn: return "bpdn";
    case Experiment::MatComp: return "matcomp";
    case Experiment::Fh: return "fh";
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  if (name == "bpdn") return Experiment::Bpdn;
  if (name == "matcomp") return Experiment::MatComp;
  if (name == "fh") return Experiment::Fh;
  throw InvalidArgument("unknown experiment '" + name + "' (expected bpdn, matcomp or fh)");
}

std::string kappa_label(const KappaSetting& kappa) { return kappa ? format_e(*kappa) : "exact"; }

KappaSetting kappa_from_label(const std::string& label) {
  if (label == "exact") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(label, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("invalid kappa_s value '" + label + "'");
  }
  if (used != label.size()) throw InvalidArgument("invalid kappa_s value '" + label + "'");
  return v;
}

void ExperimentConfig::validate() const {
  require(!kappa_s.empty(), "kappa_s list must not be empty");
  for (const auto& k : kappa_s) {
    if (k) require(*k > 0.0 && *k <= 1.0, "kappa_s values must lie in (0, 1]");
  }
  require(seeds >= 1, "seeds must be at least 1");
  require(threads >= 0, "threads must be nonnegative");
  if (epsilon) require(*epsilon > 0.0, "epsilon must be positive");
  if (noise_scale) require(*noise_scale >= 0.0, "noise_scale must be nonnegative");
  if (sampling_rate) require(*sampling_rate > 0.0 && *sampling_rate <= 1.0, "sampling_rate must lie in (0, 1]");
  if (prec_N) {
    require(experiment == Experiment::Fh, "the accuracy schedule applies to fh only");
    require(*prec_N >= 1, "prec_N must be at least 1");
  }
  SolverParams probe = solver;
  probe.kappa_s = 1.0;
  probe.epsilon = epsilon.value_or(1.0);
  probe.validate();
}

ExperimentConfig ExperimentConfig::resolve() const {
  validate();
  ExperimentConfig r = *this;
  switch (experiment) {
    case Experiment::Bpdn:
      if (!r.hessian) r.hessian = HessianKind::LSR1;
      if (!r.epsilon) r.epsilon = 1e-6;
      if (!r.noise_scale) r.noise_scale = 1.0;
      break;
    case Experiment::MatComp:
      if (!r.hessian) r.hessian = HessianKind::LSR1;
      if (!r.epsilon) r.epsilon = 1e-3;
      if (!r.sampling_rate) r.sampling_rate = 0.8;
      break;
    case Experiment::Fh:
      if (!r.hessian) r.hessian = HessianKind::LSR1;
      if (!r.epsilon) r.epsilon = 1e-5;
      if (!r.noise_scale) r.noise_scale = 0.1;
      // Inexact evaluations need a floor on sigma large enough to absorb the noise.
      if (r.prec_N && solver.sigma_min == SolverParams{}.sigma_min) r.solver.sigma_min = 1e-3;
      break;
  }
  if (r.out_dir.empty()) r.out_dir = default_output_dir();
  if (r.threads == 0) r.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return r;
}

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : fs::path("ir2n_out");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "experiment") c.experiment = experiment_from_string(value.get<std::string>());
      else if (key == "kappa_s") {
        c.kappa_s.clear();
        for (const auto& k : value) {
          c.kappa_s.push_back(k.is_string() ? kappa_from_label(k.get<std::string>()) : KappaSetting(k.get<double>()));
        }
      } else if (key == "seeds") c.seeds = value.get<int>();
      else if (key == "seed_base") c.seed_base = value.get<std::uint64_t>();
      else if (key == "solver") apply_solver_overrides(value, c.solver);
      else if (key == "hessian") c.hessian = hessian_kind_from_string(value.get<std::string>());
      else if (key == "epsilon") read_optional(j, "epsilon", c.epsilon);
      else if (key == "noise_scale") read_optional(j, "noise_scale", c.noise_scale);
      else if (key == "sampling_rate") read_optional(j, "sampling_rate", c.sampling_rate);
      else if (key == "prec_N") read_optional(j, "prec_N", c.prec_N);
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else if (key == "write_traces") c.write_traces = value.get<bool>();
      else if (key == "threads") c.threads = value.get<int>();
      else throw InvalidArgument("unknown config field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------------------------
// Runs

RunStats summarize_trace(const std::vector<IterationRecord>& trace) {
  RunStats s;
  s.outer = static_cast<int>(trace.size());
  long inner = 0;
  long prox = 0;
  long calls = 0;
  for (const auto& r : trace) {
    inner += r.inner_iters;
    prox += r.prox_iters + r.inner_prox_iters;
    calls += 1 + r.inner_prox_calls;
  }
  s.inner_per_outer = s.outer > 0 ? static_cast<double>(inner) / s.outer : 0.0;
  s.prox_per_call = calls > 0 ? static_cast<double>(prox) / static_cast<double>(calls) : 0.0;
  return s;
}

RunStats run_single(const ExperimentConfig& cfg, const KappaSetting& kappa, std::uint64_t seed) {
  SolverParams params = cfg.solver;
  params.mode = kappa ? ProxMode::Inexact : ProxMode::Exact;
  params.kappa_s = kappa.value_or(1.0);
  params.epsilon = cfg.epsilon.value();
  params.seed = seed;
  const Regularizer reg = experiment_regularizer(cfg.experiment);

  SolveResult result;
  Vector reference;
  std::optional<FhProblem> fh;
  using clock = std::chrono::steady_clock;
  clock::time_point t0;
  const auto solve = [&](SmoothOracle& oracle, const Vector& x0, PrecControl pc) {
    t0 = clock::now();
    result = ir2n_solve(oracle, reg, x0, params, HessianModel::make(*cfg.hessian, x0.size()), pc);
  };
  switch (cfg.experiment) {
    case Experiment::Bpdn: {
      const BpdnProblem prob = bpdn_generate(seed, *cfg.noise_scale);
      LeastSquaresOracle oracle(prob.A, prob.b);
      reference = prob.x_true;
      solve(oracle, Vector::Zero(prob.A.cols()), {});
      break;
    }
    case Experiment::MatComp: {
      const MatCompProblem prob = matcomp_generate(seed, *cfg.sampling_rate);
      MaskedResidualOracle oracle(prob.image_vector(), prob.mask_vector());
      reference = prob.image_vector();
      solve(oracle, Vector::Zero(reference.size()), {});
      break;
    }
    case Experiment::Fh: {
      fh = fh_generate(seed, *cfg.noise_scale);
      FhOracle oracle(*fh, !cfg.prec_N);
      reference = fh->x_true;
      PrecControl pc;
      pc.N = cfg.prec_N;
      // Feasible for the ball (sum sqrt|x_i| = 1.58 <= 2) and away from the x2 = 0 singularity.
      solve(oracle, Vector::Constant(5, 0.1), pc);
      break;
    }
  }
  const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();

  RunStats stats = summarize_trace(result.trace);
  stats.kappa = kappa;
  stats.seed = seed;
  stats.status = result.status;
  stats.time_s = elapsed;
  stats.final_objective = result.fhat + result.h;
  stats.x = result.x;

  if (cfg.write_traces) {
    fs::create_directories(cfg.out_dir);
    const std::string stem = file_stem(cfg.experiment, kappa, seed);
    stats.trace_path = cfg.out_dir / (stem + ".jsonl");
    stats.solution_path = cfg.out_dir / ("solution_" + stem + ".txt");
    write_trace(stats.trace_path, cfg.experiment, stats, result.trace);
    std::ofstream sol(stats.solution_path);
    write_columns(sol, result.x, reference);
    if (fh) {
      const FhTrajectory traj = fh_simulate(result.x, kPrecExact, fh->times, fh->initial);
      std::ofstream tr(cfg.out_dir / ("trajectory_" + stem + ".txt"));
      write_columns(tr, traj.v, traj.w);
    }
  }
  return stats;
}

std::vector<RunSummary> aggregate(const std::vector<RunStats>& runs) {
  std::vector<RunSummary> out;
  std::vector<std::vector<const RunStats*>> groups;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const RunSummary& s) { return s.kappa == r.kappa; });
    if (it == out.end()) {
      RunSummary s;
      s.kappa = r.kappa;
      out.push_back(s);
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    RunSummary& s = out[g];
    s.runs = static_cast<int>(groups[g].size());
    int ok = 0;
    for (const RunStats* r : groups[g]) {
      if (!r->succeeded()) {
        ++s.failures;
        continue;
      }
      ++ok;
      s.ir2n_iters += r->outer;
      s.ir2_iters_per_outer += r->inner_per_outer;
      s.prox_iters_per_call += r->prox_per_call;
      s.time_s += r->time_s;
      s.final_objective += r->final_objective;
      if (s.solution_path.empty()) s.solution_path = r->solution_path;
    }
    if (ok > 0) {
      s.ir2n_iters /= ok;
      s.ir2_iters_per_outer /= ok;
      s.prox_iters_per_call /= ok;
      s.time_s /= ok;
      s.final_objective /= ok;
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      s.ir2n_iters = s.ir2_iters_per_outer = s.prox_iters_per_call = s.time_s = s.final_objective = nan;
    }
    s.fail_rate = static_cast<double>(s.failures) / s.runs;
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  SweepResult sweep;
  sweep.config = config.resolve();
  const ExperimentConfig& cfg = sweep.config;

  struct Job {
    KappaSetting kappa;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& k : cfg.kappa_s)
    for (int i = 0; i < cfg.seeds; ++i) jobs.push_back({k, cfg.seed_base + static_cast<std::uint64_t>(i)});
  sweep.runs.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        sweep.runs[i] = run_single(cfg, jobs[i].kappa, jobs[i].seed);
      } catch (const NumericalFailure&) {
        // A run that cannot even start counts as a failure and does not stop the sweep.
        RunStats failed;
        failed.kappa = jobs[i].kappa;
        failed.seed = jobs[i].seed;
        failed.status = SolverStatus::NonFinite;
        sweep.runs[i] = failed;
      }
    }
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  sweep.summaries = aggregate(sweep.runs);
  return sweep;
}

// ---------------------------------------------------------------------------------------------
// Tables and traces

std::string emit_table(const std::vector<RunSummary>& summaries) {
  require(!summaries.empty(), "emit_table requires at least one summary");
  std::string out = "kappa_s,ir2n_iters,ir2_iters_per_outer,prox_iters_per_call,time_s,fail_rate,final_objective\n";
  for (const auto& s : summaries) {
    out += kappa_label(s.kappa);
    for (double v : {s.ir2n_iters, s.ir2_iters_per_outer, s.prox_iters_per_call, s.time_s, s.fail_rate,
                     s.final_objective}) {
      out += ',' + format_e(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<RunSummary> parse_table(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty table");
  require(line.rfind("kappa_s,", 0) == 0, "table header must start with kappa_s");
  std::vector<RunSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    require(cells.size() == 7, "table row must have 7 columns: " + line);
    RunSummary s;
    s.kappa = kappa_from_label(cells[0]);
    // std::stod rejects "nan"/"inf" spellings on some platforms; strtod accepts them.
    auto num = [](const std::string& c) { return std::strtod(c.c_str(), nullptr); };
    s.ir2n_iters = num(cells[1]);
    s.ir2_iters_per_outer = num(cells[2]);
    s.prox_iters_per_call = num(cells[3]);
    s.time_s = num(cells[4]);
    s.fail_rate = num(cells[5]);
    s.final_objective = num(cells[6]);
    out.push_back(s);
  }
  return out;
}

void write_trace(const fs::path& path, Experiment experiment, const RunStats& run,
                 const std::vector<IterationRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw NumericalFailure("cannot write trace file " + path.string());
  for (const auto& r : trace) out << record_to_json(r).dump() << '\n';
  json tail{{"type", "run"},
            {"experiment", to_string(experiment)},
            {"kappa_s", kappa_label(run.kappa)},
            {"seed", run.seed},
            {"status", to_string(run.status)},
            {"time_s", run.time_s},
            {"final_objective", run.final_objective},
            {"solution_path", run.solution_path.string()},
            {"x", to_std(run.x)}};
  out << tail.dump() << '\n';
}

std::vector<RunStats> read_traces(const fs::path& dir) {
  require(fs::is_directory(dir), "trace directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunStats> runs;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::vector<IterationRecord> trace;
    std::optional<json> tail;
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error&) {
        throw InvalidArgument("malformed trace line in " + f.string());
      }
      const std::string type = j.value("type", "");
      if (type == "iteration") trace.push_back(record_from_json(j));
      else if (type == "run") tail = j;
    }
    require(tail.has_value(), "trace " + f.string() + " has no run record");
    RunStats s = summarize_trace(trace);
    s.kappa = kappa_from_label(tail->at("kappa_s").get<std::string>());
    s.seed = tail->at("seed").get<std::uint64_t>();
    s.status = solver_status_from_string(tail->at("status").get<std::string>());
    s.time_s = number_or_nan(tail->at("time_s"));
    s.final_objective = number_or_nan(tail->at("final_objective"));
    s.x = from_std(tail->at("x").get<std::vector<double>>());
    s.trace_path = f;
    s.solution_path = tail->value("solution_path", std::string());
    runs.push_back(std::move(s));
  }
  // Sweep order: kappa settings as they would appear in the default grid, exact last.
  std::stable_sort(runs.begin(), runs.end(), [](const RunStats& a, const RunStats& b) {
    const double ka = a.kappa.value_or(2.0), kb = b.kappa.value_or(2.0);
    return ka != kb ? ka < kb : a.seed < b.seed;
  });
  return runs;
}

// ---------------------------------------------------------------------------------------------
// Self checks

std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto randn = [&](Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    // lq-ball projection: feasible output, identity on feasible points, idempotent.
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Vector v = 3.0 * randn(7);
      const double q = 1.2 + 3.0 * (t % 5) / 4.0;
      const Vector u = project_lq_ball(v, q, 1.0, 1e-12);
      worst = std::max(worst, (project_lq_ball(u, q, 1.0, 1e-12) - u).lpNorm<Eigen::Infinity>());
      const Vector inside = 0.01 * v / std::max(1.0, v.lpNorm<Eigen::Infinity>());
      worst = std::max(worst, (project_lq_ball(inside, q, 1.0, 1e-12) - inside).lpNorm<Eigen::Infinity>());
    }
    add("lq_ball_projection_idempotent", worst <= 1e-10, "max deviation " + format_e(worst));
  }
  {
    // lp prox: the optimality residual of the limit candidate.
    double worst = 0.0;
    for (int t = 0; t < 30; ++t) {
      const Vector q = randn(5);
      const double p = 1.1 + 0.4 * (t % 4);
      auto engine = prox_lp_norm_engine(q, 0.5, p);
      for (int j = 0; j < 2000 && !engine->converged(1e-12); ++j) engine->advance();
      const auto cert = engine->certificate();
      if (cert) worst = std::max(worst, cert->kkt_residual);
    }
    add("lp_prox_kkt", worst <= 1e-6, "max KKT residual " + format_e(worst));
  }
  {
    // Exact prox step norm never exceeds the computable bound.
    int violations = 0;
    for (int t = 0; t < 200; ++t) {
      const Vector x = randn(6);
      const Vector g = randn(6);
      const double nu = 0.05 + std::abs(gauss(rng));
      const Regularizer reg = LpNormReg{1.5, 0.3};
      auto engine = make_cauchy_engine(reg, x, g, nu, 0);
      for (int j = 0; j < 4000 && !engine->converged(1e-13); ++j) engine->advance();
      const double M = step_norm_bound(reg, BoundInputs{x, nu, g.norm()});
      if ((engine->candidate() - x).norm() > M * (1.0 + 1e-12)) ++violations;
    }
    add("step_norm_bound", violations == 0, std::to_string(violations) + " violations");
  }
  {
    // Analytic gradients against central differences.
    const BpdnProblem prob = bpdn_generate(3, 0.01, 20, 40, 4);
    LeastSquaresOracle oracle(prob.A, prob.b);
    const Vector x = randn(40);
    const Vector g = oracle.grad(x, kPrecExact);
    Vector fd(40);
    for (Eigen::Index i = 0; i < 40; ++i) {
      Vector xp = x, xm = x;
      xp[i] += 1e-5;
      xm[i] -= 1e-5;
      fd[i] = (oracle.eval(xp, kPrecExact) - oracle.eval(xm, kPrecExact)) / 2e-5;
    }
    const double rel = (g - fd).norm() / std::max(1.0, g.norm());
    add("bpdn_gradient_fd", rel <= 1e-6, "relative error " + format_e(rel));
  }
  {
    const FhProblem prob = fh_generate(1, 0.1, 40, 10.0);
    FhOracle oracle(prob, false);
    const Vector x = (Vector(5) << 0.1, 0.3, 0.8, 0.05, 0.02).finished();
    const Vector g = oracle.grad(x, 1e-12);
    Vector fd(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      Vector xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      fd[i] = (oracle.eval(xp, 1e-12) - oracle.eval(xm, 1e-12)) / 2e-6;
    }
    const double rel = (g - fd).norm() / std::max(1e-12, g.norm());
    add("fh_gradient_fd", rel <= 1e-4, "relative error " + format_e(rel));
  }
  {
    PrecSchedule s;
    s.N = 100;
    bool ok = prec_schedule_value(s) == kPrecLoose;
    double last = prec_schedule_value(s);
    for (s.n_F = 1; s.n_F <= 120; ++s.n_F) {
      const double v = prec_schedule_value(s);
      ok = ok && v <= last;
      last = v;
    }
    s.n_F = 100;
    ok = ok && prec_schedule_value(s) == kPrecExact;
    add("prec_schedule", ok, "endpoints and monotonicity for N = 100");
  }
  {
    // A short BPDN solve: descent certificates and solver invariants.
    const BpdnProblem prob = bpdn_generate(0, 0.01, 40, 100, 4);
    LeastSquaresOracle oracle(prob.A, prob.b);
    SolverParams params;
    params.mode = ProxMode::Inexact;
    params.kappa_s = 1e-3;
    params.epsilon = 1e-6;
    const SolveResult r = ir2n_solve(oracle, LpNormReg{1.1, 0.1}, Vector::Zero(100), params,
                                     HessianModel::make(HessianKind::SpectralDiagonal, 100));
    int bad = 0;
    for (const auto& rec : r.trace) {
      if (rec.sigma < params.sigma_min) ++bad;
      if (rec.step_norm > params.theta2 * rec.cauchy_norm * (1.0 + 1e-12)) ++bad;
      if (rec.prox_stop == ProxStop::EarlyNorm && rec.cauchy_norm < rec.kappa_s * rec.bound_M) ++bad;
      bad += rec.inner_certificate_violations;
    }
    add("solver_invariants", r.status == SolverStatus::FirstOrder && bad == 0,
        "status " + to_string(r.status) + ", " + std::to_string(bad) + " violations");
  }
  return out;
}

}  // namespace ir2n
