// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ir2n/harness.hpp"
#include "ir2n/problems.hpp"
#include "ir2n/projections.hpp"
#include "ir2n/prox.hpp"
#include "ir2n/regularizers.hpp"
#include "ir2n/solver.hpp"
#include "oracles.hpp"

using namespace ir2n;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

double max_abs(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector run_engine(ProxEngine& e, double tol, int cap) {
  for (int j = 0; j < cap && !e.converged(tol); ++j) e.advance();
  return e.candidate();
}

// ---------------------------------------------------------------------------------------------

Outcome prox_oracle_equivalence() {
  std::mt19937_64 rng(101);
  const int dims[] = {1, 2, 3, 5};
  const double ps[] = {1.0, 1.1, 1.5, 2.0, 3.0};
  double worst = 0.0, worst_closed = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = dims[t % 4];
    const double p = ps[(t / 4) % 5];
    const Vector q = oracle::randn(rng, n, 1.5);
    const double tau = oracle::uniform(rng, 0.05, 1.5);
    auto e = prox_lp_norm_engine(q, tau, p);
    const Vector y = run_engine(*e, 1e-10, 100000);
    worst = std::max(worst, max_abs(y - oracle::prox_lp(q, tau, p)));
    if (p == 1.0) {
      Vector soft(n);
      for (Eigen::Index i = 0; i < n; ++i) soft[i] = std::copysign(std::max(std::abs(q[i]) - tau, 0.0), q[i]);
      worst_closed = std::max(worst_closed, max_abs(y - soft));
    } else if (p == 2.0) {
      const Vector block = std::max(0.0, 1.0 - tau / q.norm()) * q;
      worst_closed = std::max(worst_closed, max_abs(y - block));
    }
  }
  return {worst <= 1e-6 && worst_closed <= 1e-12,
          "max |y - oracle| " + fmt("%.2e", worst) + ", closed forms " + fmt("%.2e", worst_closed)};
}

Outcome projection_exactness() {
  std::mt19937_64 rng(102);
  double worst_l1 = 0.0;
  for (int t = 0; t < 500; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(oracle::uniform(rng, 0.0, 100.0));
    const Vector v = oracle::randn(rng, n, 2.0);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = oracle::uniform(rng, 0.1, 5.0);
    const double r = oracle::uniform(rng, 0.01, 3.0) * std::sqrt(static_cast<double>(n));
    worst_l1 = std::max(worst_l1, max_abs(project_weighted_l1_ball(v, w, r) - oracle::project_weighted_l1(v, w, r)));
  }
  double worst_lq = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + t % 20;
    const Vector v = oracle::randn(rng, n, 2.0);
    const double q = oracle::uniform(rng, 1.05, 6.0);
    const Vector u = project_lq_ball(v, q, 1.0, 1e-12);
    worst_lq = std::max(worst_lq, max_abs(project_lq_ball(u, q, 1.0, 1e-12) - u));
    const Vector inside = 0.5 * v / std::max(1.0, oracle::pnorm(v, q));
    worst_lq = std::max(worst_lq, max_abs(project_lq_ball(inside, q, 1.0, 1e-12) - inside));
  }
  return {worst_l1 <= 1e-8 && worst_lq <= 1e-10,
          "weighted l1 " + fmt("%.2e", worst_l1) + ", lq idempotence " + fmt("%.2e", worst_lq)};
}

Outcome bound_validity() {
  std::mt19937_64 rng(103);
  const Eigen::Index dims[] = {2, 5, 20};
  int violations[3] = {0, 0, 0};
  double ratio[3] = {0, 0, 0};
  for (int kind = 0; kind < 3; ++kind) {
    for (int t = 0; t < 1000; ++t) {
      const Eigen::Index n = dims[t % 3];
      Vector x = oracle::randn(rng, n, 2.0);
      const Vector g = oracle::randn(rng, n, std::exp(oracle::uniform(rng, -2.0, 2.0)));
      const double nu = oracle::uniform(rng, 1e-3, 1.0);
      Regularizer reg;
      if (kind == 0) {
        reg = LpNormReg{oracle::uniform(rng, 1.0, 4.0), std::exp(oracle::uniform(rng, -3.0, 1.0))};
      } else if (kind == 1) {
        reg = TvpReg{oracle::uniform(rng, 1.0, 4.0), std::exp(oracle::uniform(rng, -3.0, 1.0)), n};
      } else {
        const LpBallReg ball{oracle::uniform(rng, 0.2, 0.9), oracle::uniform(rng, 0.5, 3.0), 3};
        // the solver only ever queries feasible points
        const double mass = lp_pseudo_norm_power(x, ball.p);
        if (mass > ball.r) x *= std::pow(oracle::uniform(rng, 0.1, 1.0) * ball.r / mass, 1.0 / ball.p);
        reg = ball;
      }
      auto e = make_cauchy_engine(reg, x, g, nu, static_cast<std::uint64_t>(t));
      const Vector y = run_engine(*e, 1e-10, kind == 2 ? 2000 : 200000);
      const double M = step_norm_bound(reg, BoundInputs{x, nu, g.norm()});
      const double s = (y - x).norm();
      ratio[kind] = std::max(ratio[kind], s / M);
      if (s > M * (1.0 + 1e-6)) ++violations[kind];
    }
  }
  const int total = violations[0] + violations[1] + violations[2];
  return {total == 0, "violations lp/tv/ball " + std::to_string(violations[0]) + "/" + std::to_string(violations[1]) +
                          "/" + std::to_string(violations[2]) + ", max ||s||/M " + fmt("%.3f", ratio[0]) + "/" +
                          fmt("%.3f", ratio[1]) + "/" + fmt("%.3f", ratio[2])};
}

// ---------------------------------------------------------------------------------------------
// Full runs on the three experiments, set up as the harness does.

struct ExperimentRun {
  std::string name;
  ProxMode mode;
  SolverParams params;
  SolveResult result;
};

SolveResult solve_experiment(Experiment e, ProxMode mode, double kappa_s, std::uint64_t seed, SolverParams& params) {
  params.mode = mode;
  params.kappa_s = kappa_s;
  params.seed = seed;
  switch (e) {
    case Experiment::Bpdn: {
      const BpdnProblem p = bpdn_generate(seed, 0.01);
      LeastSquaresOracle f(p.A, p.b);
      params.epsilon = 1e-6;
      return ir2n_solve(f, LpNormReg{1.1, 0.1}, Vector::Zero(512), params, HessianModel::lsr1(512));
    }
    case Experiment::MatComp: {
      const MatCompProblem p = matcomp_generate(seed);
      MaskedResidualOracle f(p.image_vector(), p.mask_vector());
      params.epsilon = 1e-3;
      return ir2n_solve(f, TvpReg{1.1, 0.1, 120}, Vector::Zero(120), params, HessianModel::lsr1(120));
    }
    case Experiment::Fh: {
      const FhProblem p = fh_generate(seed);
      FhOracle f(p, true);
      params.epsilon = 1e-5;
      return ir2n_solve(f, LpBallReg{0.5, 2.0, 3}, Vector::Constant(5, 0.1), params, HessianModel::lsr1(5));
    }
  }
  throw InvalidArgument("unknown experiment");
}

std::vector<ExperimentRun>& full_runs() {
  static std::vector<ExperimentRun> runs = [] {
    std::vector<ExperimentRun> out;
    for (Experiment e : {Experiment::Bpdn, Experiment::MatComp, Experiment::Fh}) {
      for (ProxMode mode : {ProxMode::Inexact, ProxMode::Exact}) {
        ExperimentRun r;
        r.name = to_string(e) + (mode == ProxMode::Exact ? "/exact" : "/1e-7");
        r.mode = mode;
        r.result = solve_experiment(e, mode, 1e-7, 0, r.params);
        out.push_back(std::move(r));
      }
    }
    return out;
  }();
  return runs;
}

Outcome descent_certificate() {
  long checked = 0, bad = 0, early = 0, early_bad = 0, inner_bad = 0;
  std::string statuses;
  for (const auto& run : full_runs()) {
    const auto& trace = run.result.trace;
    statuses += run.name + "=" + to_string(run.result.status) + " ";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const auto& r = trace[i];
      inner_bad += r.inner_certificate_violations;
      if (r.prox_stop == ProxStop::EarlyNorm) {
        ++early;
        if (r.cauchy_norm < r.kappa_s * r.bound_M) ++early_bad;
      }
      const bool stopping = i + 1 == trace.size() && run.result.status == SolverStatus::FirstOrder;
      if (stopping) continue;
      ++checked;
      const double need = 0.5 / r.nu * r.cauchy_norm * r.cauchy_norm - 1e-10 * (1.0 + std::abs(r.xi_hat));
      if (!(r.xi_hat >= need)) ++bad;
    }
  }
  return {bad == 0 && early_bad == 0 && inner_bad == 0 && checked > 0,
          std::to_string(bad) + "/" + std::to_string(checked) + " certificate failures, " + std::to_string(early_bad) +
              "/" + std::to_string(early) + " early-norm failures, " + std::to_string(inner_bad) +
              " inner violations; " + statuses};
}

Outcome solver_invariants() {
  long sigma_bad = 0, cap_bad = 0, model_bad = 0, mono_bad = 0, records = 0;
  for (const auto& run : full_runs()) {
    const auto& p = run.params;
    double last = std::numeric_limits<double>::infinity();
    for (const auto& r : run.result.trace) {
      ++records;
      if (r.sigma < p.sigma_min) ++sigma_bad;
      if (r.step_norm > p.theta2 * r.cauchy_norm * (1.0 + 1e-12)) ++cap_bad;
      if (r.model_step > r.model_cauchy + 1e-12 * (1.0 + std::abs(r.model_cauchy))) ++model_bad;
      if (run.mode == ProxMode::Exact) {
        const double v = r.fhat + r.h;
        if (v > last + 1e-12 * (1.0 + std::abs(last))) ++mono_bad;
        last = v;
      }
    }
  }
  return {sigma_bad + cap_bad + model_bad + mono_bad == 0 && records > 0,
          "over " + std::to_string(records) + " records: sigma floor " + std::to_string(sigma_bad) + ", theta2 cap " +
              std::to_string(cap_bad) + ", model chain " + std::to_string(model_bad) + ", monotone f+h " +
              std::to_string(mono_bad)};
}

// ---------------------------------------------------------------------------------------------

SweepResult& bpdn_sweep() {
  static SweepResult sweep = [] {
    ExperimentConfig c;
    c.experiment = Experiment::Bpdn;
    c.kappa_s = {1e-7, std::nullopt};
    c.seeds = 10;
    c.noise_scale = 0.01;
    c.write_traces = false;
    return run_sweep(c);
  }();
  return sweep;
}

Outcome bpdn_trend() {
  const auto& s = bpdn_sweep().summaries;
  const RunSummary& inexact = s[0];
  const RunSummary& exact = s[1];
  const double prox_ratio = inexact.prox_iters_per_call / exact.prox_iters_per_call;
  const double outer_ratio = inexact.ir2n_iters / exact.ir2n_iters;
  const bool ok = exact.ir2n_iters >= 7 && exact.ir2n_iters <= 29 && prox_ratio <= 0.35 && outer_ratio <= 1.3 &&
                  exact.fail_rate == 0.0 && inexact.fail_rate == 0.0;
  return {ok, "exact outer " + fmt("%.1f", exact.ir2n_iters) + ", prox/call " + fmt("%.2f", inexact.prox_iters_per_call) +
                  " vs " + fmt("%.2f", exact.prox_iters_per_call) + " (ratio " + fmt("%.3f", prox_ratio) +
                  "), outer ratio " + fmt("%.3f", outer_ratio) + ", fail rates " + fmt("%.1f", inexact.fail_rate) +
                  "/" + fmt("%.1f", exact.fail_rate)};
}

Outcome bpdn_solution_quality() {
  const auto& runs = bpdn_sweep().runs;
  double worst = 0.0;
  int off_support = 0;
  for (const auto& a : runs) {
    if (a.kappa) continue;
    for (const auto& b : runs) {
      if (!b.kappa || b.seed != a.seed) continue;
      worst = std::max(worst, max_abs(a.x - b.x));
      const Vector x_true = bpdn_generate(a.seed, 0.01).x_true;
      for (const Vector* x : {&a.x, &b.x})
        for (Eigen::Index i = 0; i < x->size(); ++i)
          if (std::abs((*x)[i]) > 0.1 && x_true[i] == 0.0) ++off_support;
    }
  }
  return {worst <= 1e-2 && off_support == 0,
          "max ||x_exact - x_inexact||_inf " + fmt("%.2e", worst) + ", large entries off support " +
              std::to_string(off_support)};
}

Outcome fh_recovery() {
  ExperimentConfig c;
  c.experiment = Experiment::Fh;
  c.kappa_s = {1e-7, std::nullopt};
  c.seeds = 1;
  c.write_traces = false;
  const SweepResult s = run_sweep(c);
  const RunStats& inexact = s.runs[0];
  const RunStats& exact = s.runs[1];
  const double x2 = inexact.x[1], x3 = inexact.x[2];
  const double rel = std::abs(inexact.final_objective - exact.final_objective) / std::abs(exact.final_objective);
  const bool ok = inexact.succeeded() && std::abs(x2 - 0.2) <= 0.05 && std::abs(x3 - 1.0) <= 0.05 && rel <= 0.1;
  return {ok, "x2 " + fmt("%.4f", x2) + ", x3 " + fmt("%.4f", x3) + ", f " + fmt("%.4f", inexact.final_objective) +
                  " vs exact mode " + fmt("%.4f", exact.final_objective) + " (rel " + fmt("%.2e", rel) + ")"};
}

Outcome accuracy_schedule() {
  PrecSchedule sched;
  sched.N = 100;
  bool ok = prec_schedule_value(sched) == 1e-3;
  double last = prec_schedule_value(sched);
  for (sched.n_F = 1; sched.n_F <= 300; ++sched.n_F) {
    const double v = prec_schedule_value(sched);
    ok = ok && v <= last;
    last = v;
  }
  sched.n_F = 100;
  ok = ok && prec_schedule_value(sched) == 1e-14;

  ExperimentConfig c;
  c.experiment = Experiment::Fh;
  c.kappa_s = {1e-7};
  c.seeds = 10;
  c.write_traces = false;
  const SweepResult exact_f = run_sweep(c);
  c.prec_N = 100;
  const SweepResult scheduled = run_sweep(c);
  const RunSummary& a = scheduled.summaries[0];
  const RunSummary& b = exact_f.summaries[0];
  const bool run_ok = a.fail_rate <= 0.5 && a.time_s < b.time_s;
  return {ok && run_ok, std::string("schedule ") + (ok ? "ok" : "broken") + ", N=100 fail_rate " +
                            fmt("%.1f", a.fail_rate) + " time " + fmt("%.2f", a.time_s) + "s vs exact F " +
                            fmt("%.2f", b.time_s) + "s"};
}

Outcome gradient_correctness() {
  auto rel = [](const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1e-12, b.norm()); };
  std::mt19937_64 rng(110);
  double fh = 0.0, bp = 0.0, mc = 0.0;
  const FhProblem fp = fh_generate(0);
  FhOracle fo(fp, false);
  for (int t = 0; t < 5; ++t) {
    Vector x(5);
    x << oracle::uniform(rng, -0.02, 0.02), oracle::uniform(rng, 0.15, 0.3), oracle::uniform(rng, 0.5, 0.9),
        oracle::uniform(rng, -0.02, 0.02), oracle::uniform(rng, -0.02, 0.02);
    const Vector fd = oracle::fd_gradient([&](const Vector& z) { return fo.eval(z, 1e-12); }, x, 1e-6);
    fh = std::max(fh, rel(fo.grad(x, 1e-12), fd));
  }
  const BpdnProblem bpp = bpdn_generate(0);
  LeastSquaresOracle bo(bpp.A, bpp.b);
  const MatCompProblem mp = matcomp_generate(0);
  MaskedResidualOracle mo(mp.image_vector(), mp.mask_vector());
  for (int t = 0; t < 3; ++t) {
    const Vector xb = oracle::randn(rng, 512);
    bp = std::max(bp, rel(bo.grad(xb, kPrecExact),
                          oracle::fd_gradient([&](const Vector& z) { return bo.eval(z, kPrecExact); }, xb, 1e-5)));
    const Vector xm = oracle::randn(rng, 120);
    mc = std::max(mc, rel(mo.grad(xm, kPrecExact),
                          oracle::fd_gradient([&](const Vector& z) { return mo.eval(z, kPrecExact); }, xm, 1e-5)));
  }
  return {fh <= 1e-4 && bp <= 1e-6 && mc <= 1e-6,
          "relative errors fh " + fmt("%.2e", fh) + ", bpdn " + fmt("%.2e", bp) + ", matcomp " + fmt("%.2e", mc)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"prox oracle equivalence", prox_oracle_equivalence},
      {"projection exactness", projection_exactness},
      {"step bound validity", bound_validity},
      {"descent certificate", descent_certificate},
      {"solver invariants", solver_invariants},
      {"bpdn inexact trend", bpdn_trend},
      {"bpdn solution quality", bpdn_solution_quality},
      {"fh recovery", fh_recovery},
      {"accuracy schedule", accuracy_schedule},
      {"gradient correctness", gradient_correctness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.passed) ++failed;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
