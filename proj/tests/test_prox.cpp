#include <doctest.h>

#include <cmath>
#include <random>

#include "ir2n/projections.hpp"
#include "ir2n/prox.hpp"
#include "oracles.hpp"

using namespace ir2n;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector run_to_convergence(ProxEngine& e, double tol = 1e-10, int cap = 200000) {
  for (int j = 0; j < cap && !e.converged(tol); ++j) e.advance();
  return e.candidate();
}

double max_abs(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }
}  // namespace

TEST_CASE("lq ball projection examples") {
  const Vector inside = vec({0.1, -0.2});
  CHECK(max_abs(project_lq_ball(inside, 2.0, 1.0, 1e-12) - inside) == 0.0);
  CHECK(max_abs(project_lq_ball(vec({3, 4}), 2.0, 1.0, 1e-12) - vec({0.6, 0.8})) <= 1e-10);
  CHECK(max_abs(project_lq_ball(vec({2, 0}), 1.5, 1.0, 1e-12) - vec({1, 0})) <= 1e-10);
}

TEST_CASE("lq ball projection lands on the sphere and is idempotent") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 60; ++t) {
    const Vector v = oracle::randn(rng, 6, 3.0);
    const double q = oracle::uniform(rng, 1.1, 5.0);
    const Vector u = project_lq_ball(v, q, 1.0, 1e-12);
    if (oracle::pnorm(v, q) > 1.0) CHECK(std::abs(oracle::pnorm(u, q) - 1.0) <= 1e-10);
    CHECK(max_abs(project_lq_ball(u, q, 1.0, 1e-12) - u) <= 1e-10);
  }
}

TEST_CASE("weighted l1 projection examples") {
  const Vector w = vec({1, 1});
  CHECK(max_abs(project_weighted_l1_ball(vec({0.2, 0.3}), w, 1.0) - vec({0.2, 0.3})) == 0.0);
  CHECK(max_abs(project_weighted_l1_ball(vec({3, 0}), w, 1.0) - vec({1, 0})) <= 1e-12);
  CHECK(max_abs(project_weighted_l1_ball(vec({2, 1}), w, 1.0) - vec({1, 0})) <= 1e-12);
}

TEST_CASE("weighted l1 projection matches multiplier bisection") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 1 + t % 30;
    const Vector v = oracle::randn(rng, n, 2.0);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = oracle::uniform(rng, 0.1, 3.0);
    const double r = oracle::uniform(rng, 0.05, 2.0);
    CHECK(max_abs(project_weighted_l1_ball(v, w, r) - oracle::project_weighted_l1(v, w, r)) <= 1e-8);
  }
}

TEST_CASE("lp prox closed forms") {
  auto soft = prox_lp_norm_engine(vec({3, -0.5}), 1.0, 1.0);
  CHECK(max_abs(run_to_convergence(*soft) - vec({2, 0})) <= 1e-12);
  CHECK(soft->work() == 1);
  auto block = prox_lp_norm_engine(vec({3, 4}), 5.0, 2.0);
  CHECK(max_abs(run_to_convergence(*block)) <= 1e-12);
  auto shrink = prox_lp_norm_engine(vec({3, 4}), 2.5, 2.0);
  CHECK(max_abs(run_to_convergence(*shrink) - vec({1.5, 2.0})) <= 1e-12);
}

TEST_CASE("lp prox against the optimality-system oracle") {
  const Vector q = vec({1, 1});
  auto e = prox_lp_norm_engine(q, 0.5, 1.5);
  CHECK(max_abs(run_to_convergence(*e) - oracle::prox_lp(q, 0.5, 1.5)) <= 1e-6);

  std::mt19937_64 rng(13);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index n = 1 + t % 5;
    const Vector qq = oracle::randn(rng, n);
    const double p = oracle::uniform(rng, 1.05, 3.5);
    const double tau = oracle::uniform(rng, 0.05, 1.0);
    auto eng = prox_lp_norm_engine(qq, tau, p);
    CHECK(max_abs(run_to_convergence(*eng) - oracle::prox_lp(qq, tau, p)) <= 1e-6);
  }
}

TEST_CASE("convex engines certify optimality") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = std::array<Eigen::Index, 3>{2, 5, 50}[t % 3];
    const Vector q = oracle::randn(rng, n);
    const double p = oracle::uniform(rng, 1.0, 3.0);
    auto lp = prox_lp_norm_engine(q, 0.3, p);
    run_to_convergence(*lp);
    REQUIRE(lp->certificate().has_value());
    CHECK(lp->certificate()->kkt_residual <= 1e-6);
    auto tv = prox_tvp_engine(q, 0.3, p);
    run_to_convergence(*tv);
    REQUIRE(tv->certificate().has_value());
    CHECK(tv->certificate()->kkt_residual <= 1e-6);
    CHECK(tv->certificate()->duality_gap >= -1e-12);
  }
}

TEST_CASE("tv prox examples") {
  const Vector c = Vector::Constant(4, 1.7);
  auto constant = prox_tvp_engine(c, 0.8, 1.5);
  CHECK(max_abs(run_to_convergence(*constant) - c) <= 1e-10);

  auto zero_tau = prox_tvp_engine(vec({0.3, -1, 2}), 0.0, 1.5);
  CHECK(max_abs(run_to_convergence(*zero_tau) - vec({0.3, -1, 2})) <= 1e-12);

  for (double tau : {1.0, 1.5, 4.0}) {
    const Vector q = vec({0, 2});
    auto e = prox_tvp_engine(q, tau, 1.0);
    const Vector y = run_to_convergence(*e);
    const Vector grid = oracle::grid_minimize_2d(
        [&](double a, double b) { return 0.5 * ((a - q[0]) * (a - q[0]) + (b - q[1]) * (b - q[1])) + tau * std::abs(b - a); },
        -1.0, 3.0, 1e-3);
    CHECK(max_abs(y - grid) <= 2e-3);
    CHECK(max_abs(y - vec({1, 1})) <= 1e-8);
  }
}

TEST_CASE("tv prox against grid refinement") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 10; ++t) {
    const Vector q = oracle::randn(rng, 3);
    const double p = oracle::uniform(rng, 1.1, 3.0);
    const double tau = oracle::uniform(rng, 0.1, 1.0);
    auto e = prox_tvp_engine(q, tau, p);
    const Vector y = run_to_convergence(*e);
    const auto obj = [&](const Vector& z) { return 0.5 * (z - q).squaredNorm() + tau * oracle::tv_value(z, p); };
    const Vector ref = oracle::grid_minimize(obj, q, 2.0, 21, 14);
    CHECK(obj(y) <= obj(ref) + 1e-9);
    CHECK(max_abs(y - ref) <= 1e-4);
  }
}

TEST_CASE("irbp projection examples") {
  const LpBallReg reg{0.5, 2.0, 3};
  const Vector feasible = vec({0.25, 0.25});
  auto e0 = irbp_project_engine(feasible, reg, 1);
  CHECK(max_abs(run_to_convergence(*e0, 1e-12, 1000) - feasible) <= 1e-12);

  auto axis = irbp_project_engine(vec({9, 0}), reg, 1);
  CHECK(max_abs(run_to_convergence(*axis, 1e-12, 1000) - vec({4, 0})) <= 1e-6);

  const Vector x0 = vec({1.5, 1.5});
  auto e = irbp_project_engine(x0, reg, 7);
  const Vector y = run_to_convergence(*e, 1e-12, 5000);
  CHECK(ball_feasible(y, reg));
  const auto dist = [&](double a, double b) {
    const double feas = std::sqrt(std::abs(a)) + std::sqrt(std::abs(b));
    return feas <= 2.0 ? 0.5 * ((a - x0[0]) * (a - x0[0]) + (b - x0[1]) * (b - x0[1]))
                       : std::numeric_limits<double>::infinity();
  };
  const Vector g = oracle::grid_minimize_2d(dist, 0.0, 4.0, 1e-3);
  CHECK(dist(y[0], y[1]) <= dist(g[0], g[1]) + 1e-4);
}

TEST_CASE("early stop wrapper contract") {
  const auto h = [](const Vector& z) { return lp_value(z, LpNormReg{1.0, 1.0}); };
  ProxQuery query;
  query.x = vec({0, 0});
  query.ghat = vec({-3, 0.5});
  query.nu = 1.0;
  query.M = 10.0;
  auto soft = make_cauchy_engine(LpNormReg{1.0, 1.0}, query.x, query.ghat, query.nu, 0);
  const ProxOutcome out = run_prox_with_early_stop(*soft, query, h);
  CHECK(out.stop_reason == ProxStop::Native);
  CHECK(out.inner_iters == 1);
  CHECK(max_abs(out.shat - vec({2, 0})) <= 1e-12);
  // -ghat^T s + h(0) - h(s) = 6 - 2
  CHECK(out.xi_hat == doctest::Approx(4.0));
}

TEST_CASE("early norm rule and exact mode counts") {
  std::mt19937_64 rng(16);
  const LpNormReg reg{1.5, 0.1};
  const auto h = [&](const Vector& z) { return lp_value(z, reg); };
  int early = 0;
  for (int t = 0; t < 100; ++t) {
    ProxQuery q;
    q.x = oracle::randn(rng, 20);
    q.ghat = oracle::randn(rng, 20);
    q.nu = oracle::uniform(rng, 0.05, 1.0);
    q.M = step_norm_bound(reg, BoundInputs{q.x, q.nu, q.ghat.norm()});
    q.kappa_s = 1e-7;
    q.mode = ProxMode::Inexact;
    auto e_in = make_cauchy_engine(reg, q.x, q.ghat, q.nu, 0);
    const ProxOutcome in = run_prox_with_early_stop(*e_in, q, h);
    q.mode = ProxMode::Exact;
    auto e_ex = make_cauchy_engine(reg, q.x, q.ghat, q.nu, 0);
    const ProxOutcome ex = run_prox_with_early_stop(*e_ex, q, h);
    CHECK(ex.stop_reason == ProxStop::Native);
    CHECK(ex.inner_iters >= in.inner_iters);
    if (in.stop_reason == ProxStop::EarlyNorm) {
      ++early;
      CHECK(in.shat.norm() >= 1e-7 * q.M);
    }
    for (const ProxOutcome* o : {&in, &ex}) {
      CHECK(o->xi_hat >= 0.5 / q.nu * o->shat.squaredNorm() - 1e-10 * (1.0 + std::abs(o->xi_hat)));
    }
  }
  CHECK(early > 50);
}
