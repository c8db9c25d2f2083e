#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ir2n/common.hpp"
#include "ir2n/hessian.hpp"
#include "ir2n/oracle.hpp"
#include "ir2n/prox.hpp"
#include "ir2n/regularizers.hpp"

namespace ir2n {

struct InnerParams {
  /// Inner stationarity target relative to the outer measure at entry.
  double kappa_in = 0.1;
  int max_iter = 500;
};

struct SolverParams {
  double theta1 = 0.5;
  /// Larger than 1/theta1 by a wide margin: with an ill-conditioned B the model minimizer is
  /// legitimately far longer than the Cauchy step, and a tight cap discards it.
  double theta2 = 1e4;
  double gamma1 = 3.0;
  double gamma2 = 3.0;
  double gamma3 = 0.5;
  double eta1_hat = 1e-4;
  double eta2_hat = 0.9;
  double sigma_min = 1e-8;
  double sigma0 = 1.0;
  double epsilon = 1e-6;
  double kappa_s = 1.0;
  int max_iter = 10000;
  InnerParams inner;
  ProxMode mode = ProxMode::Exact;
  /// Native stopping tolerance handed to every prox engine.
  double prox_native_tol = 1e-10;
  int prox_max_inner = 100000;
  /// Consecutive prox failures tolerated before giving up.
  int max_prox_failures = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class IterationStatus { VerySuccessful, Successful, Unsuccessful };
enum class SolverStatus { FirstOrder, MaxIter, ProxFailure, NonFinite };

std::string to_string(IterationStatus status);
std::string to_string(SolverStatus status);

struct IterationRecord {
  int k = 0;
  double fhat = 0.0;
  double h = 0.0;
  double xi_hat = 0.0;
  double nu = 0.0;
  double sigma = 0.0;
  double rho_hat = 0.0;
  IterationStatus status = IterationStatus::Unsuccessful;
  double step_norm = 0.0;
  double cauchy_norm = 0.0;
  int prox_iters = 0;
  int inner_iters = 0;
  /// Prox evaluations and their iterations inside iR2.
  int inner_prox_calls = 0;
  int inner_prox_iters = 0;
  double prec = 0.0;
  ProxStop prox_stop = ProxStop::Native;
  double bound_M = 0.0;
  double kappa_s = 0.0;
  /// m(s_k; x_k, sigma_k) and m(shat_cp; x_k, sigma_k), both without the f(x_k) constant.
  double model_step = 0.0;
  double model_cauchy = 0.0;
  bool theta2_reset = false;
  bool degenerate_model = false;
  /// Inner prox outcomes that broke the descent or early-norm contract (expected 0).
  int inner_certificate_violations = 0;
};

/// nu = theta1 / (||B|| + sigma).
double nu_from_sigma(double theta1, const HessianModel& B, double sigma);

/// -ghat^T s + h(x) - h(x + s).
double xi_hat_cp(const Vector& ghat, const Vector& shat, double h_at_x, double h_at_x_plus_s);

/// Ratio of achieved to predicted decrease; std::nullopt when the predicted decrease
/// -ghat^T s - s^T B s / 2 + h(x) - h(x+s) is not positive and finite.
std::optional<double> rho_hat(double fhat_x, double fhat_xs, double h_x, double h_xs,
                              const Vector& ghat, const HessianModel& B, const Vector& s);

IterationStatus classify(double rho, const SolverParams& params);
double sigma_update(double sigma, IterationStatus status, const SolverParams& params);
double sigma_update(double sigma, double rho, const SolverParams& params);

struct Ir2Stats {
  int iterations = 0;
  int prox_calls = 0;
  int prox_iters = 0;
  int certificate_violations = 0;
};

struct Ir2Result {
  Vector s;
  double model_value = 0.0;
  Ir2Stats stats;
};

/// Quadratic model pieces of m(s; x, sigma) = ghat^T s + s^T B s / 2 + sigma ||s||^2 / 2 + h(x+s).
struct QuadraticModel {
  const Vector& x;
  const Vector& ghat;
  const HessianModel& B;
  double sigma;
  const Regularizer& reg;

  double smooth(const Vector& s) const;
  Vector smooth_gradient(const Vector& s) const;
  double value(const Vector& s) const;
};

/// Continues proximal-gradient iterations on m from s_init with its own adaptive
/// regularization. Only model-decreasing steps are accepted.
Ir2Result ir2_solve(const QuadraticModel& model, const Vector& s_init, double outer_measure,
                    const SolverParams& params);

struct SolveResult {
  Vector x;
  SolverStatus status = SolverStatus::MaxIter;
  std::vector<IterationRecord> trace;
  double fhat = 0.0;
  double h = 0.0;
  std::string diagnostic;
};

struct PrecControl {
  /// Unset: evaluate at kPrecExact throughout.
  std::optional<int> N;
};

SolveResult ir2n_solve(SmoothOracle& oracle, const Regularizer& reg, const Vector& x0,
                       const SolverParams& params, HessianModel hessian,
                       PrecControl prec = {});

}  // namespace ir2n
