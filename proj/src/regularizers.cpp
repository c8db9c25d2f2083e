#include "ir2n/regularizers.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ir2n {
namespace {

double lp_norm(const Vector& v, double p) {
  if (v.size() == 0) return 0.0;
  if (p == 1.0) return v.lpNorm<1>();
  if (p == 2.0) return v.norm();
  // Scale by the largest magnitude so that |v_i|^p does not over/underflow.
  const double scale = v.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

void check_finite(const Vector& x) {
  require(x.allFinite(), "regularizer evaluated at a non-finite point");
}

}  // namespace

void validate(const LpNormReg& reg) {
  require(reg.p >= 1.0 && std::isfinite(reg.p), "LpNormReg requires 1 <= p < inf");
  require(reg.mu >= 0.0, "LpNormReg requires mu >= 0");
}

void validate(const TvpReg& reg) {
  require(reg.p >= 1.0 && std::isfinite(reg.p), "TvpReg requires 1 <= p < inf");
  require(reg.mu >= 0.0, "TvpReg requires mu >= 0");
  require(reg.n >= 2, "TvpReg requires n >= 2");
}

void validate(const LpBallReg& reg) {
  require(reg.p > 0.0 && reg.p < 1.0, "LpBallReg requires 0 < p < 1");
  require(reg.r > 0.0, "LpBallReg requires r > 0");
  require(reg.starts >= 1, "LpBallReg requires starts >= 1");
}

void validate(const Regularizer& reg) {
  std::visit([](const auto& r) { validate(r); }, reg);
}

double lp_value(const Vector& x, const LpNormReg& reg) {
  check_finite(x);
  if (reg.mu == 0.0) return 0.0;
  return reg.mu * lp_norm(x, reg.p);
}

double tvp_value(const Vector& x, const TvpReg& reg) {
  require(x.size() == reg.n, "TvpReg dimension mismatch");
  check_finite(x);
  if (reg.mu == 0.0) return 0.0;
  return reg.mu * lp_norm(forward_difference(x), reg.p);
}

double lp_pseudo_norm_power(const Vector& x, double p) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]), p);
  return acc;
}

bool ball_feasible(const Vector& x, const LpBallReg& reg) {
  return x.allFinite() && lp_pseudo_norm_power(x, reg.p) <= reg.r + kBallFeasibilityTol;
}

double lpball_value(const Vector& x, const LpBallReg& reg) {
  return ball_feasible(x, reg) ? 0.0 : std::numeric_limits<double>::infinity();
}

double value(const Regularizer& reg, const Vector& x) {
  return std::visit(
      [&x](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, LpNormReg>) return lp_value(x, r);
        else if constexpr (std::is_same_v<T, TvpReg>) return tvp_value(x, r);
        else return lpball_value(x, r);
      },
      reg);
}

Vector forward_difference(const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return Vector(0);
  return x.tail(n - 1) - x.head(n - 1);
}

Vector forward_difference_adjoint(const Vector& u) {
  const Eigen::Index m = u.size();
  Vector out = Vector::Zero(m + 1);
  out.head(m) -= u;
  out.tail(m) += u;
  return out;
}

double difference_operator_norm(Eigen::Index n) {
  const double nd = static_cast<double>(n);
  return 2.0 * std::sin(std::numbers::pi * (nd - 1.0) / (2.0 * nd));
}

double dual_ball_euclidean_factor(Eigen::Index n, double p) {
  if (p >= 2.0) return 1.0;
  return std::pow(static_cast<double>(n), 1.0 / p - 0.5);
}

double step_norm_bound(const Regularizer& reg, const BoundInputs& b) {
  require(b.nu > 0.0, "step_norm_bound requires nu > 0");
  require(b.ghat_norm >= 0.0, "step_norm_bound requires a nonnegative gradient norm");
  return std::visit(
      [&b](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        const Eigen::Index n = b.x.size();
        if constexpr (std::is_same_v<T, LpNormReg>) {
          return b.nu * (b.ghat_norm + r.mu * dual_ball_euclidean_factor(n, r.p));
        } else if constexpr (std::is_same_v<T, TvpReg>) {
          return b.nu * (b.ghat_norm +
                         r.mu * difference_operator_norm(n) * dual_ball_euclidean_factor(n, r.p));
        } else {
          return std::pow(r.r, 1.0 / r.p) + b.x.norm();
        }
      },
      reg);
}

std::string describe(const Regularizer& reg) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, LpNormReg>) os << "lp(p=" << r.p << ",mu=" << r.mu << ")";
        else if constexpr (std::is_same_v<T, TvpReg>)
          os << "tvp(p=" << r.p << ",mu=" << r.mu << ",n=" << r.n << ")";
        else os << "lpball(p=" << r.p << ",r=" << r.r << ",starts=" << r.starts << ")";
      },
      reg);
  return os.str();
}

}  // namespace ir2n
