#pragma once

#include <limits>
#include <string>
#include <variant>

#include "ir2n/common.hpp"

namespace ir2n {

/// h(x) = mu * ||x||_p, 1 <= p < inf.
struct LpNormReg {
  double p = 1.0;
  double mu = 1.0;
};

/// h(x) = mu * ||A x||_p with A the (n-1) x n first-difference operator.
struct TvpReg {
  double p = 1.0;
  double mu = 1.0;
  Eigen::Index n = 2;
};

/// Indicator of {x : sum |x_i|^p <= r}, 0 < p < 1.
struct LpBallReg {
  double p = 0.5;
  double r = 1.0;
  int starts = 3;
};

using Regularizer = std::variant<LpNormReg, TvpReg, LpBallReg>;

/// Slack absorbed by the indicator so that approximate boundary points count as feasible.
inline constexpr double kBallFeasibilityTol = 1e-8;

struct BoundInputs {
  Vector x;
  double nu = 1.0;
  double ghat_norm = 0.0;
};

void validate(const LpNormReg& reg);
void validate(const TvpReg& reg);
void validate(const LpBallReg& reg);
void validate(const Regularizer& reg);

double lp_value(const Vector& x, const LpNormReg& reg);
double tvp_value(const Vector& x, const TvpReg& reg);
double lpball_value(const Vector& x, const LpBallReg& reg);
double value(const Regularizer& reg, const Vector& x);

/// sum |x_i|^p, the quantity constrained by LpBallReg.
double lp_pseudo_norm_power(const Vector& x, double p);
bool ball_feasible(const Vector& x, const LpBallReg& reg);

/// First differences (A x)_i = x_{i+1} - x_i.
Vector forward_difference(const Vector& x);
/// A^T u for u of length n-1.
Vector forward_difference_adjoint(const Vector& u);
/// ||A||_2 = 2 sin(pi (n-1) / (2n)).
double difference_operator_norm(Eigen::Index n);

/// Norm-equivalence factor bounding ||u||_2 for ||u||_{p'} <= 1: n^{1/p - 1/2} for p < 2, else 1.
double dual_ball_euclidean_factor(Eigen::Index n, double p);

/// Upper bound M on the norm of every exact Cauchy step at (x, nu, ||ghat||).
double step_norm_bound(const Regularizer& reg, const BoundInputs& b);

std::string describe(const Regularizer& reg);

}  // namespace ir2n
