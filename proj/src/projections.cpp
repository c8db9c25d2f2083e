#include "ir2n/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace ir2n {
namespace {

constexpr int kMaxNewton = 200;
constexpr int kMaxBisection = 400;

}  // namespace

double lq_stationary_magnitude(double a, double lambda, double q_exp) {
  if (a <= 0.0) return 0.0;
  if (lambda <= 0.0) return a;
  const double e = q_exp - 1.0;
  if (e == 1.0) return a / (1.0 + lambda);
  if (e > 1.0) {
    // g(t) = t + lambda t^e - a is convex increasing; Newton from an upper bound decreases
    // monotonically onto the root.
    double t = std::min(a, std::pow(a / lambda, 1.0 / e));
    for (int it = 0; it < kMaxNewton; ++it) {
      const double te1 = std::pow(t, e - 1.0);
      const double g = t + lambda * te1 * t - a;
      if (g <= 0.0) break;
      const double step = g / (1.0 + lambda * e * te1);
      t -= step;
      if (step <= 1e-16 * t) break;
    }
    return std::clamp(t, 0.0, a);
  }
  // 0 < e < 1: in w = t^e the equation w^(1/e) + lambda w = a is convex increasing.
  const double alpha = 1.0 / e;
  double w = std::min(a / lambda, std::pow(a, e));
  for (int it = 0; it < kMaxNewton; ++it) {
    const double wa1 = std::pow(w, alpha - 1.0);
    const double g = wa1 * w + lambda * w - a;
    if (g <= 0.0) break;
    const double step = g / (alpha * wa1 + lambda);
    w -= step;
    if (step <= 1e-16 * w) break;
  }
  w = std::max(w, 0.0);
  return std::clamp(std::pow(w, alpha), 0.0, a);
}

LqBallBisection::LqBallBisection(Vector v, double q_exp) : v_(std::move(v)), q_(q_exp) {
  require(q_exp > 1.0 && std::isfinite(q_exp), "LqBallBisection requires 1 < q < inf");
  require(v_.allFinite(), "LqBallBisection requires a finite point");
  abs_v_ = v_.cwiseAbs();
  const double norm_q = q_norm(v_);
  if (norm_q <= 1.0) {
    interior_ = true;
    u_hi_ = v_;
    last_point_ = v_;
    residual_hi_ = norm_q - 1.0;
    return;
  }
  // At lambda = ||v||_p (p the conjugate exponent) every |u_i| <= (|v_i|/lambda)^{1/(q-1)},
  // which puts u(lambda) inside the ball.
  const double p = q_ / (q_ - 1.0);
  const double scale = abs_v_.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < abs_v_.size(); ++i) acc += std::pow(abs_v_[i] / scale, p);
  lambda_hi_ = scale * std::pow(acc, 1.0 / p);
  lambda_lo_ = 0.0;
  u_hi_ = evaluate(lambda_hi_);
  residual_hi_ = q_norm(u_hi_) - 1.0;
  // Radial scaling of v is a feasible point too and often a much better one.
  last_point_ = v_ / norm_q;
}

double LqBallBisection::q_norm(const Vector& u) const {
  const double scale = u.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) acc += std::pow(std::abs(u[i]) / scale, q_);
  return scale * std::pow(acc, 1.0 / q_);
}

Vector LqBallBisection::evaluate(double lambda) const {
  Vector u(v_.size());
  for (Eigen::Index i = 0; i < v_.size(); ++i) {
    const double t = lq_stationary_magnitude(abs_v_[i], lambda, q_);
    u[i] = std::copysign(t, v_[i]);
  }
  return u;
}

double LqBallBisection::bisect() {
  if (interior_) return residual_hi_;
  const double mid = 0.5 * (lambda_lo_ + lambda_hi_);
  if (mid <= lambda_lo_ || mid >= lambda_hi_) return residual_hi_;
  Vector u = evaluate(mid);
  const double residual = q_norm(u) - 1.0;
  if (residual <= 0.0) {
    last_point_ = u;
    lambda_hi_ = mid;
    u_hi_ = std::move(u);
    residual_hi_ = residual;
  } else {
    // Radially pulled back, the infeasible endpoint approaches the projection from outside.
    last_point_ = u / (1.0 + residual);
    lambda_lo_ = mid;
  }
  return residual_hi_;
}

Vector project_lq_ball(const Vector& v, double q_exp, double radius, double tol) {
  require(q_exp > 1.0, "project_lq_ball requires q > 1");
  require(radius > 0.0, "project_lq_ball requires a positive radius");
  require(tol > 0.0, "project_lq_ball requires a positive tolerance");
  require(v.allFinite(), "project_lq_ball requires a finite point");
  if (std::isinf(q_exp)) return v.cwiseMax(-radius).cwiseMin(radius);
  if (q_exp == 2.0) {
    const double norm = v.norm();
    return norm <= radius ? Vector(v) : Vector(v * (radius / norm));
  }
  LqBallBisection path(v / radius, q_exp);
  if (path.interior()) return v;
  const double rel_tol = tol / radius;
  for (int it = 0; it < kMaxBisection; ++it) {
    if (-path.feasible_residual() <= rel_tol) return radius * path.feasible_point();
    const double width = path.bracket_width();
    path.bisect();
    if (path.bracket_width() == width) break;
  }
  if (-path.feasible_residual() <= rel_tol) return radius * path.feasible_point();
  throw NumericalFailure("project_lq_ball: multiplier bisection did not converge");
}

Vector project_weighted_l1_ball(const Vector& v, const Vector& w, double radius) {
  require(v.size() == w.size(), "project_weighted_l1_ball dimension mismatch");
  require(radius >= 0.0, "project_weighted_l1_ball requires a nonnegative radius");
  require((w.array() > 0.0).all() && w.allFinite(), "project_weighted_l1_ball requires positive weights");
  const Eigen::Index n = v.size();
  const Vector a = v.cwiseAbs();
  if (w.dot(a) <= radius) return v;
  if (radius == 0.0) return Vector::Zero(n);

  // Breakpoints lambda_i = |v_i| / w_i sorted decreasingly; on each piece the constraint
  // sum_{active} w_i (|v_i| - lambda w_i) = radius is linear in lambda.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a[i] / w[i] > a[j] / w[j];
  });
  double sum_wa = 0.0;
  double sum_ww = 0.0;
  double lambda = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index i = order[k];
    sum_wa += w[i] * a[i];
    sum_ww += w[i] * w[i];
    lambda = (sum_wa - radius) / sum_ww;
    const double next = k + 1 < order.size() ? a[order[k + 1]] / w[order[k + 1]] : 0.0;
    if (lambda >= next) break;
  }
  lambda = std::max(lambda, 0.0);
  Vector u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = std::copysign(std::max(a[i] - lambda * w[i], 0.0), v[i]);
  }
  return u;
}

}  // namespace ir2n
