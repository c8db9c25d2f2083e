#include "ir2n/solver.hpp"

#include <cmath>
#include <limits>

namespace ir2n {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool certificate_holds(const ProxOutcome& out, double nu) {
  if (out.stop_reason != ProxStop::EarlyNorm && out.stop_reason != ProxStop::Native) return true;
  const double half_sq = 0.5 * out.shat.squaredNorm() / nu;
  if (out.xi_hat < half_sq - 1e-10 * (1.0 + std::abs(out.xi_hat))) return false;
  if (out.stop_reason == ProxStop::EarlyNorm && out.shat.norm() < out.early_threshold) return false;
  return true;
}

std::uint64_t engine_seed(std::uint64_t base, int outer, int inner) {
  return base * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(outer) * 100003ULL +
         static_cast<std::uint64_t>(inner);
}

ProxQuery make_query(const Vector& x, const Vector& g, double nu, double M, const SolverParams& params) {
  ProxQuery q;
  q.x = x;
  q.ghat = g;
  q.nu = nu;
  q.kappa_s = params.kappa_s;
  q.M = M;
  q.mode = params.mode;
  q.native_tol = params.prox_native_tol;
  q.max_inner = params.prox_max_inner;
  return q;
}

double evaluate_or_inf(SmoothOracle& oracle, const Vector& x, double prec) {
  try {
    const double v = oracle.eval(x, prec);
    return std::isfinite(v) ? v : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

}  // namespace

void SolverParams::validate() const {
  require(theta1 > 0.0 && theta1 < 1.0, "theta1 must lie in (0, 1)");
  require(theta2 > 1.0, "theta2 must exceed 1");
  require(gamma1 > 1.0 && gamma1 <= gamma2, "gamma parameters need 1 < gamma1 <= gamma2");
  require(gamma3 > 0.0 && gamma3 <= 1.0, "gamma3 must lie in (0, 1]");
  require(eta1_hat > 0.0 && eta1_hat <= eta2_hat && eta2_hat < 1.0,
          "eta parameters need 0 < eta1 <= eta2 < 1");
  require(sigma_min > 0.0, "sigma_min must be positive");
  require(sigma0 >= sigma_min, "sigma0 must be at least sigma_min");
  require(epsilon > 0.0, "epsilon must be positive");
  require(kappa_s > 0.0 && kappa_s <= 1.0, "kappa_s must lie in (0, 1]");
  require(max_iter >= 0, "max_iter must be nonnegative");
  require(inner.kappa_in > 0.0, "inner tolerance factor must be positive");
  require(inner.max_iter >= 0, "inner max_iter must be nonnegative");
  require(prox_native_tol > 0.0, "prox native tolerance must be positive");
  require(prox_max_inner >= 1, "prox iteration cap must be positive");
}

std::string to_string(IterationStatus status) {
  switch (status) {
    case IterationStatus::VerySuccessful: return "very_successful";
    case IterationStatus::Successful: return "successful";
    case IterationStatus::Unsuccessful: return "unsuccessful";
  }
  return "unknown";
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::FirstOrder: return "first_order";
    case SolverStatus::MaxIter: return "max_iter";
    case SolverStatus::ProxFailure: return "prox_failure";
    case SolverStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

double nu_from_sigma(double theta1, const HessianModel& B, double sigma) {
  require(sigma > 0.0, "nu_from_sigma requires sigma > 0");
  return theta1 / (B.norm_estimate() + sigma);
}

double xi_hat_cp(const Vector& ghat, const Vector& shat, double h_at_x, double h_at_x_plus_s) {
  return -ghat.dot(shat) + h_at_x - h_at_x_plus_s;
}

std::optional<double> rho_hat(double fhat_x, double fhat_xs, double h_x, double h_xs,
                              const Vector& ghat, const HessianModel& B, const Vector& s) {
  const double predicted = -ghat.dot(s) - 0.5 * B.quadratic_form(s) + h_x - h_xs;
  if (!(predicted > 0.0) || !std::isfinite(predicted)) return std::nullopt;
  const double achieved = fhat_x + h_x - fhat_xs - h_xs;
  if (std::isnan(achieved)) return -kInf;
  return achieved / predicted;
}

IterationStatus classify(double rho, const SolverParams& params) {
  if (rho >= params.eta2_hat) return IterationStatus::VerySuccessful;
  if (rho >= params.eta1_hat) return IterationStatus::Successful;
  return IterationStatus::Unsuccessful;
}

double sigma_update(double sigma, IterationStatus status, const SolverParams& params) {
  double next = sigma;
  switch (status) {
    case IterationStatus::VerySuccessful: next = params.gamma3 * sigma; break;
    case IterationStatus::Successful: next = sigma; break;
    case IterationStatus::Unsuccessful: next = params.gamma1 * sigma; break;
  }
  return std::max(next, params.sigma_min);
}

double sigma_update(double sigma, double rho, const SolverParams& params) {
  return sigma_update(sigma, classify(rho, params), params);
}

double QuadraticModel::smooth(const Vector& s) const {
  return ghat.dot(s) + 0.5 * B.quadratic_form(s) + 0.5 * sigma * s.squaredNorm();
}

Vector QuadraticModel::smooth_gradient(const Vector& s) const {
  return ghat + B.apply(s) + sigma * s;
}

double QuadraticModel::value(const Vector& s) const {
  return smooth(s) + ir2n::value(reg, x + s);
}

Ir2Result ir2_solve(const QuadraticModel& model, const Vector& s_init, double outer_measure,
                    const SolverParams& params) {
  Ir2Result res;
  res.s = s_init;
  res.model_value = model.value(s_init);
  const double target = std::max(1e-10, params.inner.kappa_in * outer_measure);
  double sigma = model.B.norm_estimate() + model.sigma;
  int failures = 0;
  auto h = [&model](const Vector& z) { return ir2n::value(model.reg, z); };

  for (int j = 0; j < params.inner.max_iter; ++j) {
    const Vector g = model.smooth_gradient(res.s);
    const double nu = params.theta1 / sigma;
    const Vector center = model.x + res.s;
    const double M = step_norm_bound(model.reg, BoundInputs{center, nu, g.norm()});
    auto engine = make_cauchy_engine(model.reg, center, g, nu, engine_seed(params.seed, -1, j));
    const ProxOutcome out = run_prox_with_early_stop(*engine, make_query(center, g, nu, M, params), h);
    ++res.stats.iterations;
    ++res.stats.prox_calls;
    res.stats.prox_iters += out.inner_iters;
    if (!certificate_holds(out, nu)) ++res.stats.certificate_violations;

    if (out.stop_reason == ProxStop::Failure) {
      sigma = std::max(params.gamma1 * sigma, params.sigma_min);
      if (++failures >= params.max_prox_failures) break;
      continue;
    }
    failures = 0;
    if (out.shat.norm() / nu <= target) break;

    const Vector trial = res.s + out.shat;
    const double trial_value = model.smooth(trial) + out.h_at_x_plus_s;
    const double predicted = out.xi_hat;
    IterationStatus status = IterationStatus::Unsuccessful;
    if (predicted > 0.0 && std::isfinite(predicted)) {
      status = classify((res.model_value - trial_value) / predicted, params);
    }
    if (status != IterationStatus::Unsuccessful && trial_value < res.model_value) {
      res.s = trial;
      res.model_value = trial_value;
    }
    sigma = sigma_update(sigma, status, params);
  }
  return res;
}

SolveResult ir2n_solve(SmoothOracle& oracle, const Regularizer& reg, const Vector& x0,
                       const SolverParams& params, HessianModel hessian, PrecControl prec_control) {
  params.validate();
  validate(reg);
  require(x0.size() == oracle.dimension(), "x0 dimension does not match the oracle");
  require(hessian.dimension() == x0.size(), "Hessian model dimension mismatch");

  SolveResult result;
  result.x = x0;
  Vector& x = result.x;
  double hx = value(reg, x);
  require(std::isfinite(hx), "ir2n_solve requires h(x0) < inf");

  PrecSchedule schedule;
  if (prec_control.N) {
    require(*prec_control.N >= 1, "prec schedule requires N >= 1");
    schedule.N = *prec_control.N;
  }
  double prec = prec_control.N ? schedule.value() : kPrecExact;

  double fx = 0.0;
  Vector g;
  try {
    fx = oracle.eval(x, prec);
    g = oracle.grad(x, prec);
  } catch (const std::exception& e) {
    result.status = SolverStatus::NonFinite;
    result.diagnostic = std::string("initial evaluation failed: ") + e.what();
    return result;
  }
  if (!std::isfinite(fx) || !g.allFinite()) {
    result.status = SolverStatus::NonFinite;
    result.diagnostic = "non-finite objective or gradient at x0";
    return result;
  }

  auto h = [&reg](const Vector& z) { return value(reg, z); };
  double sigma = params.sigma0;
  int consecutive_failures = 0;
  result.status = SolverStatus::MaxIter;

  for (int k = 0; k < params.max_iter; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.fhat = fx;
    rec.h = hx;
    rec.sigma = sigma;
    rec.prec = prec;
    rec.kappa_s = params.kappa_s;

    const double nu = nu_from_sigma(params.theta1, hessian, sigma);
    const double M = step_norm_bound(reg, BoundInputs{x, nu, g.norm()});
    rec.nu = nu;
    rec.bound_M = M;
    auto engine = make_cauchy_engine(reg, x, g, nu, engine_seed(params.seed, k, 0));
    const ProxOutcome cauchy = run_prox_with_early_stop(*engine, make_query(x, g, nu, M, params), h);
    rec.prox_iters = cauchy.inner_iters;
    rec.prox_stop = cauchy.stop_reason;
    rec.xi_hat = cauchy.xi_hat;
    rec.cauchy_norm = cauchy.shat.norm();

    bool unsuccessful = false;
    if (cauchy.stop_reason == ProxStop::Failure) {
      rec.status = IterationStatus::Unsuccessful;
      rec.rho_hat = std::numeric_limits<double>::quiet_NaN();
      unsuccessful = true;
      if (++consecutive_failures >= params.max_prox_failures) {
        sigma = sigma_update(sigma, IterationStatus::Unsuccessful, params);
        result.trace.push_back(rec);
        result.status = SolverStatus::ProxFailure;
        result.diagnostic = "prox evaluation failed repeatedly";
        break;
      }
    } else {
      consecutive_failures = 0;
      if (rec.cauchy_norm / nu <= params.epsilon) {
        rec.status = IterationStatus::Successful;
        result.trace.push_back(rec);
        result.status = SolverStatus::FirstOrder;
        break;
      }

      const QuadraticModel model{x, g, hessian, sigma, reg};
      const Ir2Result inner = ir2_solve(model, cauchy.shat, rec.cauchy_norm / nu, params);
      rec.inner_iters = inner.stats.iterations;
      rec.inner_prox_calls = inner.stats.prox_calls;
      rec.inner_prox_iters = inner.stats.prox_iters;
      rec.inner_certificate_violations = inner.stats.certificate_violations;
      Vector s = inner.s;
      if (s.norm() > params.theta2 * rec.cauchy_norm) {
        s = cauchy.shat;
        rec.theta2_reset = true;
      }
      rec.step_norm = s.norm();
      rec.model_cauchy = model.value(cauchy.shat);
      rec.model_step = rec.theta2_reset ? rec.model_cauchy : model.value(s);

      const Vector xs = x + s;
      const double hxs = value(reg, xs);
      const double fxs = std::isfinite(hxs) ? evaluate_or_inf(oracle, xs, prec) : kInf;
      const std::optional<double> rho = rho_hat(fx, fxs, hx, hxs, g, hessian, s);
      if (rho) {
        rec.rho_hat = *rho;
        rec.status = classify(*rho, params);
      } else {
        rec.rho_hat = std::numeric_limits<double>::quiet_NaN();
        rec.degenerate_model = true;
        rec.status = IterationStatus::Unsuccessful;
      }

      if (rec.status != IterationStatus::Unsuccessful) {
        Vector g_next;
        try {
          g_next = oracle.grad(xs, prec);
        } catch (const std::exception& e) {
          result.trace.push_back(rec);
          result.status = SolverStatus::NonFinite;
          result.diagnostic = std::string("gradient evaluation failed: ") + e.what();
          break;
        }
        hessian.update(s, g_next - g);
        x = xs;
        fx = fxs;
        hx = hxs;
        g = std::move(g_next);
      } else {
        unsuccessful = true;
      }
    }

    sigma = sigma_update(sigma, rec.status, params);
    result.trace.push_back(rec);

    if (unsuccessful) {
      ++schedule.n_F;
      if (prec_control.N) {
        const double next_prec = schedule.value();
        if (next_prec != prec) {
          prec = next_prec;
          try {
            fx = oracle.eval(x, prec);
            g = oracle.grad(x, prec);
          } catch (const std::exception& e) {
            result.status = SolverStatus::NonFinite;
            result.diagnostic = std::string("re-evaluation failed: ") + e.what();
            break;
          }
        }
      }
    }
  }
  result.fhat = fx;
  result.h = hx;
  return result;
}

double PrecSchedule::value() const {
  require(N >= 1, "prec schedule requires N >= 1");
  require(n_F >= 0, "prec schedule requires n_F >= 0");
  if (n_F >= N) return prec_lo;
  const double ratio = static_cast<double>(n_F) / static_cast<double>(N);
  return std::max(prec_hi * std::exp(std::log(prec_lo / prec_hi) * ratio), prec_lo);
}

double prec_schedule_value(const PrecSchedule& sched) { return sched.value(); }

}  // namespace ir2n
