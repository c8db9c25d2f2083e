#pragma once

#include "ir2n/common.hpp"

namespace ir2n {

/// Euclidean projection onto {u : ||u||_q <= radius}, q in (1, inf].
///
/// For finite q the projection satisfies u_i + lambda |u_i|^{q-1} sign(u_i) = v_i for a
/// multiplier lambda >= 0 found by bisection; q = inf reduces to clipping. Throws
/// NumericalFailure when the bisection does not reach |‖u‖_q - radius| <= tol.
Vector project_lq_ball(const Vector& v, double q_exp, double radius, double tol);

/// Exact Euclidean projection onto {u : sum_i w_i |u_i| <= radius}, all w_i > 0.
Vector project_weighted_l1_ball(const Vector& v, const Vector& w, double radius);

/// Solves t + lambda * t^(q-1) = a for t in [0, a] (a >= 0, lambda >= 0, q > 1).
double lq_stationary_magnitude(double a, double lambda, double q_exp);

/// The multiplier curve u(lambda) of the unit lq-ball projection of a fixed point v.
///
/// Bisection on lambda walks this curve; the lower bracket is infeasible and the upper
/// bracket feasible, so `feasible_point()` is always inside the ball.
class LqBallBisection {
 public:
  LqBallBisection(Vector v, double q_exp);

  /// True when v is already inside the unit ball (no iterations needed).
  bool interior() const { return interior_; }
  /// Halves the bracket once. Returns the constraint residual of the feasible endpoint.
  double bisect();
  const Vector& feasible_point() const { return u_hi_; }
  /// Feasible point produced by the latest step: the new u_hi, or the new infeasible
  /// endpoint pulled back radially onto the sphere, which tracks the bracket from outside.
  const Vector& last_feasible_point() const { return last_point_; }
  /// ||u_hi||_q - 1, nonpositive by construction.
  double feasible_residual() const { return residual_hi_; }
  double bracket_width() const { return lambda_hi_ - lambda_lo_; }
  double lambda_hi() const { return lambda_hi_; }

  Vector evaluate(double lambda) const;

 private:
  double q_norm(const Vector& u) const;

  Vector v_;
  Vector abs_v_;
  double q_;
  bool interior_ = false;
  double lambda_lo_ = 0.0;
  double lambda_hi_ = 0.0;
  Vector u_hi_;
  double residual_hi_ = 0.0;
  Vector last_point_;
};

}  // namespace ir2n
