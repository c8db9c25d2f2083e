#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ir2n/common.hpp"
#include "ir2n/projections.hpp"
#include "ir2n/regularizers.hpp"

namespace ir2n {

enum class ProxMode { Exact, Inexact };
enum class ProxStop { EarlyNorm, Native, Budget, Failure };

std::string to_string(ProxMode mode);
std::string to_string(ProxStop stop);

/// Optimality evidence for convex engines.
struct Certificate {
  /// ||y - q + tau A^T P(u + A y)||, zero exactly at the prox point.
  double kkt_residual = 0.0;
  /// tau (||A y||_p - u^T A y), nonnegative for dual-feasible u.
  double duality_gap = 0.0;
};

/// One Cauchy-type subproblem: min_s ghat^T s + 1/(2 nu) ||s||^2 + h(x + s).
struct ProxQuery {
  Vector x;
  Vector ghat;
  double nu = 1.0;
  double kappa_s = 1.0;
  double M = 1.0;
  ProxMode mode = ProxMode::Exact;
  double native_tol = 1e-10;
  int max_inner = 100000;
  /// Attach the engine certificate to the outcome (costs an extra projection).
  bool certify = false;
};

struct ProxOutcome {
  Vector shat;
  double xi_hat = 0.0;
  int inner_iters = 0;
  ProxStop stop_reason = ProxStop::Native;
  std::optional<Certificate> certificate;
  double h_at_x = 0.0;
  double h_at_x_plus_s = 0.0;
  /// kappa_s * M as enforced by the early-stop rule.
  double early_threshold = 0.0;
};

/// Iterative prox evaluator producing a sequence of primal candidates y_j for
/// min_y 1/2 ||y - q||^2 + tau g(y). Single use.
class ProxEngine {
 public:
  virtual ~ProxEngine() = default;

  /// Performs one iteration and refreshes `candidate()`.
  virtual void advance() = 0;
  virtual const Vector& candidate() const = 0;
  /// Native convergence test at the current candidate.
  virtual bool converged(double tol) const = 0;
  /// Iterations charged so far. Trivial evaluations (e.g. projecting a feasible point) cost 0.
  virtual int work() const = 0;
  /// Whether the current candidate may terminate early (feasible for indicator engines).
  virtual bool candidate_eligible() const { return true; }
  virtual std::optional<Certificate> certificate() const { return std::nullopt; }
};

/// prox of tau ||.||_p at q_pt via the Moreau identity y = q - tau P(q / tau), P the
/// projection onto the unit ball of the conjugate norm. p = 1 and p = 2 are closed form.
std::unique_ptr<ProxEngine> prox_lp_norm_engine(const Vector& q_pt, double tau, double p);

/// prox of tau ||A .||_p at q_pt via accelerated projected gradient on the dual
/// min_{||u||_{p'} <= 1} 1/2 ||q - tau A^T u||^2, A the first-difference operator.
std::unique_ptr<ProxEngine> prox_tvp_engine(const Vector& q_pt, double tau, double p);

/// Projection of x0 onto {y : sum |y_i|^p <= r} by iteratively reweighted l1-ball
/// projection with several starting points. `anchor`, when given, must be feasible and is
/// used as one start; it makes the candidate sequence monotone in distance to x0.
std::unique_ptr<ProxEngine> irbp_project_engine(const Vector& x0, const LpBallReg& reg,
                                                std::uint64_t rng_seed,
                                                std::optional<Vector> anchor = std::nullopt);

/// Engine for the Cauchy subproblem of `query` under regularizer `reg`.
std::unique_ptr<ProxEngine> make_cauchy_engine(const Regularizer& reg, const Vector& x,
                                               const Vector& ghat, double nu,
                                               std::uint64_t rng_seed);

using RegularizerValue = std::function<double(const Vector&)>;

/// Drives `engine` on `query` and stops at the first candidate meeting the relative-norm
/// rule (inexact mode) or at native convergence. `h_value(z)` returns h(z).
ProxOutcome run_prox_with_early_stop(ProxEngine& engine, const ProxQuery& query,
                                     const RegularizerValue& h_value);

/// m_cp(s) - m_cp(0) for the query's linear model: ghat^T s + ||s||^2 / (2 nu) + h(x+s) - h(x).
double cauchy_model_change(const ProxQuery& query, const Vector& s, double h_x, double h_xs);

}  // namespace ir2n
