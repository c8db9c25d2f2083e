#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ir2n/harness.hpp"

using namespace ir2n;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path dir = default_output_dir() / name;
  fs::remove_all(dir);
  return dir;
}

// Drops the wall-time column so that tables from repeated sweeps can be compared.
std::string without_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    std::stringstream row(line);
    std::string cell;
    for (int col = 0; std::getline(row, cell, ','); ++col) {
      if (col != 4) out += cell + ',';
    }
    out += '\n';
  }
  return out;
}

ExperimentConfig small_bpdn(const fs::path& dir) {
  ExperimentConfig c;
  c.experiment = Experiment::Bpdn;
  c.kappa_s = {0.5, std::nullopt};
  c.seeds = 2;
  c.noise_scale = 0.01;
  c.out_dir = dir;
  c.threads = 1;
  return c;
}
}  // namespace

TEST_CASE("names round-trip") {
  for (Experiment e : {Experiment::Bpdn, Experiment::MatComp, Experiment::Fh})
    CHECK(experiment_from_string(to_string(e)) == e);
  CHECK_THROWS_AS(experiment_from_string("nosuch"), InvalidArgument);
  CHECK(kappa_label(std::nullopt) == "exact");
  CHECK(kappa_label(1e-7) == "1.00e-07");
  CHECK(kappa_from_label("exact") == std::nullopt);
  CHECK(*kappa_from_label("0.5") == 0.5);
  CHECK_THROWS_AS(kappa_from_label("half"), InvalidArgument);
}

TEST_CASE("table format and parse-back") {
  RunSummary a;
  a.kappa = 1e-7;
  a.ir2n_iters = 16.3;
  a.ir2_iters_per_outer = 6.58;
  a.prox_iters_per_call = 6.51;
  a.time_s = 0.123456;
  a.fail_rate = 0.1;
  a.final_objective = 1.2345678;
  RunSummary b = a;
  b.kappa = std::nullopt;
  const std::string one = emit_table({a});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(one.rfind("kappa_s,ir2n_iters,ir2_iters_per_outer,prox_iters_per_call,time_s,fail_rate,final_objective\n", 0) == 0);
  CHECK(one.find("1.00e-07,1.63e+01,6.58e+00,6.51e+00,1.23e-01,1.00e-01,1.23e+00") != std::string::npos);
  const std::string two = emit_table({a, b});
  CHECK(two.find("\nexact,") != std::string::npos);
  const auto parsed = parse_table(two);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].kappa == a.kappa);
  CHECK(parsed[1].kappa == std::nullopt);
  CHECK(parsed[0].ir2n_iters == doctest::Approx(16.3).epsilon(5e-3));
  CHECK(parsed[0].final_objective == doctest::Approx(1.23).epsilon(1e-12));
  CHECK_THROWS_AS(emit_table({}), InvalidArgument);
  CHECK_THROWS_AS(parse_table("bad,header\n"), InvalidArgument);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"({
    "experiment": "fh", "kappa_s": [1e-7, "exact"], "seeds": 3, "prec_N": 50,
    "hessian": "diag", "solver": {"theta2": 10.0, "inner": {"max_iter": 40}}
  })");
  CHECK(c.experiment == Experiment::Fh);
  REQUIRE(c.kappa_s.size() == 2);
  CHECK(*c.kappa_s[0] == 1e-7);
  CHECK_FALSE(c.kappa_s[1].has_value());
  CHECK(c.seeds == 3);
  CHECK(*c.prec_N == 50);
  CHECK(*c.hessian == HessianKind::SpectralDiagonal);
  CHECK(c.solver.theta2 == 10.0);
  CHECK(c.solver.inner.max_iter == 40);
  const ExperimentConfig r = c.resolve();
  CHECK(*r.epsilon == 1e-5);
  CHECK(r.solver.sigma_min == 1e-3);

  CHECK_THROWS_AS(parse_config("{"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"colour": 1})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"thet2": 1}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"kappa_s": [2.0]})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "bpdn", "prec_N": 10})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"seeds": "many"})"), InvalidArgument);
}

TEST_CASE("experiment defaults") {
  ExperimentConfig c;
  c.experiment = Experiment::Bpdn;
  ExperimentConfig r = c.resolve();
  CHECK(*r.epsilon == 1e-6);
  CHECK(*r.noise_scale == 1.0);
  CHECK(*r.hessian == HessianKind::LSR1);
  CHECK(r.threads >= 1);
  CHECK(r.kappa_s.back() == std::nullopt);
  c.experiment = Experiment::MatComp;
  r = c.resolve();
  CHECK(*r.epsilon == 1e-3);
  CHECK(*r.sampling_rate == 0.8);
}

TEST_CASE("sweep aggregates what the traces record and is reproducible") {
  const fs::path dir = scratch("sweep");
  const SweepResult s = run_sweep(small_bpdn(dir));
  REQUIRE(s.runs.size() == 4);
  REQUIRE(s.summaries.size() == 2);
  CHECK(s.summaries[1].kappa == std::nullopt);
  for (const auto& r : s.runs) {
    CHECK(fs::exists(r.trace_path));
    CHECK(fs::exists(r.solution_path));
  }

  const auto traced = read_traces(dir);
  REQUIRE(traced.size() == 4);
  const auto again = aggregate(traced);
  REQUIRE(again.size() == 2);
  // read_traces orders exact last, matching the sweep order here
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(again[g].kappa == s.summaries[g].kappa);
    CHECK(again[g].ir2n_iters == s.summaries[g].ir2n_iters);
    CHECK(again[g].ir2_iters_per_outer == doctest::Approx(s.summaries[g].ir2_iters_per_outer).epsilon(1e-14));
    CHECK(again[g].prox_iters_per_call == doctest::Approx(s.summaries[g].prox_iters_per_call).epsilon(1e-14));
    CHECK(again[g].final_objective == doctest::Approx(s.summaries[g].final_objective).epsilon(1e-14));
    CHECK(again[g].fail_rate == s.summaries[g].fail_rate);
  }
  double mean = 0.0;
  for (const auto& r : s.runs)
    if (!r.kappa) mean += r.outer / 2.0;
  CHECK(s.summaries[1].ir2n_iters == doctest::Approx(mean));

  const SweepResult t = run_sweep(small_bpdn(scratch("sweep_again")));
  CHECK(without_time(emit_table(t.summaries)) == without_time(emit_table(s.summaries)));
  for (std::size_t i = 0; i < s.runs.size(); ++i) CHECK(s.runs[i].x == t.runs[i].x);
}

TEST_CASE("single seed means equal the run") {
  ExperimentConfig c = small_bpdn(scratch("single"));
  c.kappa_s = {0.5};
  c.seeds = 1;
  c.write_traces = false;
  const SweepResult s = run_sweep(c);
  REQUIRE(s.summaries.size() == 1);
  CHECK(s.summaries[0].ir2n_iters == s.runs[0].outer);
  CHECK(s.summaries[0].prox_iters_per_call == s.runs[0].prox_per_call);
  CHECK(s.summaries[0].final_objective == s.runs[0].final_objective);
  CHECK_FALSE(fs::exists(default_output_dir() / "single"));
}

TEST_CASE("fail rate counts non first-order runs") {
  ExperimentConfig c = small_bpdn(scratch("fail"));
  c.solver.max_iter = 2;
  c.write_traces = false;
  const SweepResult s = run_sweep(c);
  for (const auto& sum : s.summaries) {
    int failed = 0;
    for (const auto& r : s.runs)
      if (r.kappa == sum.kappa && !r.succeeded()) ++failed;
    CHECK(sum.failures == failed);
    CHECK(sum.fail_rate * sum.runs == doctest::Approx(failed));
    CHECK(sum.fail_rate == 1.0);
    CHECK(std::isnan(sum.ir2n_iters));
  }
}

TEST_CASE("self checks pass") {
  for (const auto& r : run_checks()) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}
