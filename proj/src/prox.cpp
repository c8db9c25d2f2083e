#include "ir2n/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ir2n {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lp_norm(const Vector& v, double p) {
  if (p == 1.0) return v.lpNorm<1>();
  if (p == 2.0) return v.norm();
  const double scale = v.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

double conjugate_exponent(double p) { return p == 1.0 ? kInf : p / (p - 1.0); }

/// Unit lq-ball projection with a warm-started multiplier. Newton steps on the multiplier
/// are taken only inside the current bisection bracket; the returned point is feasible.
Vector project_unit_lq_warm(const Vector& v, double q, double& lambda_hint) {
  if (std::isinf(q)) return v.cwiseMax(-1.0).cwiseMin(1.0);
  if (q == 2.0) {
    const double norm = v.norm();
    return norm <= 1.0 ? Vector(v) : Vector(v / norm);
  }
  const Vector a = v.cwiseAbs();
  if (lp_norm(v, q) <= 1.0) return v;
  const double e = q - 1.0;
  double lo = 0.0;
  double hi = lp_norm(v, q / e);
  double lambda = lambda_hint > 0.0 && lambda_hint < hi ? lambda_hint : hi;
  Vector t(v.size());
  Vector t_hi;
  constexpr double tol = 1e-13;
  for (int it = 0; it < 200; ++it) {
    double phi = -1.0;
    double dphi = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double ti = lq_stationary_magnitude(a[i], lambda, q);
      t[i] = ti;
      if (ti <= 0.0) continue;
      const double te1 = std::pow(ti, e - 1.0);
      const double tq = te1 * ti * ti;
      phi += tq;
      dphi -= q * (tq / ti) * (te1 * ti) / (1.0 + lambda * e * te1);
    }
    if (phi <= 0.0) {
      hi = lambda;
      t_hi = t;
      if (-phi <= tol) break;
    } else {
      lo = lambda;
    }
    if (hi - lo <= 1e-15 * hi) break;
    double next = dphi < 0.0 ? lambda - phi / dphi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
  }
  if (t_hi.size() == 0) {
    for (Eigen::Index i = 0; i < a.size(); ++i) t[i] = lq_stationary_magnitude(a[i], hi, q);
    t_hi = t;
  }
  lambda_hint = hi;
  Vector u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::copysign(t_hi[i], v[i]);
  return u;
}

/// Single-candidate engine for closed-form proximal maps.
class ClosedFormEngine final : public ProxEngine {
 public:
  ClosedFormEngine(Vector y, Certificate cert) : y_(std::move(y)), cert_(cert) {}

  void advance() override { ++work_; }
  const Vector& candidate() const override { return y_; }
  bool converged(double) const override { return work_ > 0; }
  int work() const override { return work_; }
  std::optional<Certificate> certificate() const override { return cert_; }

 private:
  Vector y_;
  Certificate cert_;
  int work_ = 0;
};

/// Moreau decomposition with the conjugate-ball multiplier bisection exposed as iterates.
/// Each bisection step yields a feasible dual point; the candidate is the primal image with
/// the lowest prox objective seen so far.
class LpNormEngine final : public ProxEngine {
 public:
  LpNormEngine(const Vector& q, double tau, double p)
      : q_(q), tau_(tau), p_(p), path_(q / tau, conjugate_exponent(p)) {
    offer(path_.feasible_point());
    offer(path_.last_feasible_point());
  }

  void advance() override {
    if (work_ > 0 && !path_.interior()) {
      path_.bisect();
      offer(path_.last_feasible_point());
    }
    ++work_;
  }
  const Vector& candidate() const override { return y_; }
  bool converged(double tol) const override {
    if (work_ == 0) return false;
    if (path_.interior()) return true;
    // The gap only certifies ||y - y*|| <= sqrt(2 gap), too coarse for small steps, so the
    // native test is the relative width of the multiplier bracket.
    return path_.bracket_width() <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon()) *
                                        path_.lambda_hi();
  }
  int work() const override { return work_; }
  std::optional<Certificate> certificate() const override {
    Certificate c;
    c.duality_gap = std::max(0.0, tau_ * (lp_norm(y_, p_) - u_.dot(y_)));
    const Vector refreshed = project_lq_ball(u_ + y_, conjugate_exponent(p_), 1.0, 1e-12);
    c.kkt_residual = (y_ - q_ + tau_ * refreshed).norm();
    return c;
  }

 private:
  void offer(const Vector& u) {
    Vector y = q_ - tau_ * u;
    const double value = 0.5 * tau_ * tau_ * u.squaredNorm() + tau_ * lp_norm(y, p_);
    if (y_.size() == 0 || value < value_) {
      value_ = value;
      u_ = u;
      y_ = std::move(y);
    }
  }

  Vector q_;
  double tau_;
  double p_;
  LqBallBisection path_;
  Vector u_;
  Vector y_;
  double value_ = kInf;
  int work_ = 0;
};

/// Dual accelerated projected gradient for the first-difference total variation.
class TvpEngine final : public ProxEngine {
 public:
  TvpEngine(const Vector& q, double tau, double p)
      : q_(q), tau_(tau), p_(p), dual_exp_(conjugate_exponent(p)) {
    const double norm = difference_operator_norm(q.size());
    step_ = 1.0 / (tau_ * norm * norm);
    u_ = Vector::Zero(q.size() - 1);
    z_ = u_;
    y_ = q_;
    ay_ = forward_difference(y_);
  }

  void advance() override {
    const Vector yz = q_ - tau_ * forward_difference_adjoint(z_);
    Vector u_next = project_unit_lq_warm(z_ + step_ * forward_difference(yz), dual_exp_, lambda_hint_);
    // Gradient-based restart keeps the accelerated sequence monotone in practice.
    if ((z_ - u_next).dot(u_next - u_) > 0.0) {
      momentum_ = 1.0;
      z_ = u_next;
    } else {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_ * momentum_));
      z_ = u_next + ((momentum_ - 1.0) / next) * (u_next - u_);
      momentum_ = next;
    }
    u_ = std::move(u_next);
    y_ = q_ - tau_ * forward_difference_adjoint(u_);
    ay_ = forward_difference(y_);
    ++work_;
  }
  const Vector& candidate() const override { return y_; }
  /// A small gap alone leaves the primal error at O(sqrt(gap)); the residual test tightens it.
  bool converged(double tol) const override {
    return work_ > 0 && gap() <= tol && kkt_residual() <= kKktPerGap * tol;
  }
  int work() const override { return work_; }
  std::optional<Certificate> certificate() const override {
    Certificate c;
    c.duality_gap = gap();
    c.kkt_residual = kkt_residual();
    return c;
  }

 private:
  static constexpr double kKktPerGap = 1e4;

  double kkt_residual() const {
    double hint = lambda_hint_;
    const Vector refreshed = project_unit_lq_warm(u_ + ay_, dual_exp_, hint);
    return (y_ - q_ + tau_ * forward_difference_adjoint(refreshed)).norm();
  }
  double gap() const { return std::max(0.0, tau_ * (lp_norm(ay_, p_) - u_.dot(ay_))); }

  Vector q_;
  double tau_;
  double p_;
  double dual_exp_;
  double step_ = 1.0;
  double momentum_ = 1.0;
  double lambda_hint_ = 0.0;
  Vector u_;
  Vector z_;
  Vector y_;
  Vector ay_;
  int work_ = 0;
};

/// Iteratively reweighted l1-ball projection onto the lp pseudo-norm ball, multi-start.
class IrbpEngine final : public ProxEngine {
 public:
  IrbpEngine(const Vector& x0, const LpBallReg& reg, std::uint64_t seed, std::optional<Vector> anchor)
      : x0_(x0), reg_(reg) {
    validate(reg_);
    require(x0_.allFinite(), "irbp_project_engine requires a finite point");
    if (lp_pseudo_norm_power(x0_, reg_.p) <= reg_.r) {
      trivial_ = true;
      best_ = x0_;
      return;
    }
    const Eigen::Index n = x0_.size();
    if (anchor) {
      require(anchor->size() == n, "irbp_project_engine anchor dimension mismatch");
      add_start(*anchor);
    } else {
      add_start(Vector::Zero(n));
    }
    // x0 pulled radially inside the ball, leaving 10% of r as smoothing slack.
    const double scale = std::pow(0.9 * reg_.r / lp_pseudo_norm_power(x0_, reg_.p), 1.0 / reg_.p);
    const Vector radial = scale * x0_;
    if (static_cast<int>(starts_.size()) < reg_.starts) add_start(radial);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double spread = 0.1 * radial.lpNorm<Eigen::Infinity>();
    while (static_cast<int>(starts_.size()) < reg_.starts) {
      Vector z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = radial[i] * unif(rng) + spread * gauss(rng);
      const double power = lp_pseudo_norm_power(z, reg_.p);
      if (power > 0.9 * reg_.r) z *= std::pow(0.9 * reg_.r / power, 1.0 / reg_.p);
      add_start(z);
    }
    pick_best();
  }

  void advance() override {
    if (trivial_) return;
    for (auto& st : starts_) {
      if (!st.done) step(st);
    }
    pick_best();
    ++work_;
  }
  const Vector& candidate() const override { return best_; }
  bool converged(double tol) const override {
    if (trivial_) return true;
    if (work_ == 0) return false;
    for (const auto& st : starts_) {
      const double scale = 1.0 + st.y.norm();
      if (!(st.done || (st.last_change <= tol * scale && st.eps.maxCoeff() <= tol * scale))) {
        return false;
      }
    }
    return true;
  }
  int work() const override { return work_; }
  bool candidate_eligible() const override { return ball_feasible(best_, reg_); }

 private:
  struct Start {
    Vector y;
    Vector eps;
    double last_change = kInf;
    bool done = false;
  };

  void add_start(const Vector& y) {
    Start st;
    st.y = y;
    const double slack = reg_.r - lp_pseudo_norm_power(y, reg_.p);
    const double eps = slack > 0.0 ? std::pow(0.9 * slack / static_cast<double>(y.size()), 1.0 / reg_.p) : 0.0;
    st.eps = Vector::Constant(y.size(), eps);
    starts_.push_back(std::move(st));
  }

  void step(Start& st) {
    const Eigen::Index n = x0_.size();
    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(n));
    double linearized_radius = reg_.r;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double base = std::abs(st.y[i]) + st.eps[i];
      if (base <= 0.0) continue;
      linearized_radius -= std::pow(base, reg_.p);
      active.push_back(i);
    }
    Vector w(static_cast<Eigen::Index>(active.size()));
    Vector v(w.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Eigen::Index i = active[k];
      const double base = std::abs(st.y[i]) + st.eps[i];
      w[static_cast<Eigen::Index>(k)] = reg_.p * std::pow(base, reg_.p - 1.0);
      v[static_cast<Eigen::Index>(k)] = x0_[i];
      linearized_radius += w[static_cast<Eigen::Index>(k)] * std::abs(st.y[i]);
    }
    Vector next = Vector::Zero(n);
    if (w.size() > 0 && w.allFinite() && linearized_radius > 0.0) {
      const Vector sub = project_weighted_l1_ball(v, w, linearized_radius);
      for (std::size_t k = 0; k < active.size(); ++k) next[active[k]] = sub[static_cast<Eigen::Index>(k)];
    }
    // Round-off can leave the linearized solution a hair outside; pull it back radially.
    const double power = lp_pseudo_norm_power(next, reg_.p);
    if (power > reg_.r) next *= std::pow(reg_.r / power, 1.0 / reg_.p);
    st.last_change = (next - st.y).norm();
    st.y = std::move(next);
    st.eps *= 0.9;
    if (st.last_change == 0.0 && st.eps.maxCoeff() == 0.0) st.done = true;
  }

  void pick_best() {
    double best_dist = kInf;
    for (const auto& st : starts_) {
      const double d = (st.y - x0_).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best_ = st.y;
      }
    }
  }

  Vector x0_;
  LpBallReg reg_;
  std::vector<Start> starts_;
  Vector best_;
  bool trivial_ = false;
  int work_ = 0;
};

}  // namespace

std::string to_string(ProxMode mode) { return mode == ProxMode::Exact ? "exact" : "inexact"; }

std::string to_string(ProxStop stop) {
  switch (stop) {
    case ProxStop::EarlyNorm: return "early_norm";
    case ProxStop::Native: return "native";
    case ProxStop::Budget: return "budget";
    case ProxStop::Failure: return "failure";
  }
  return "unknown";
}

std::unique_ptr<ProxEngine> prox_lp_norm_engine(const Vector& q_pt, double tau, double p) {
  require(tau >= 0.0, "prox_lp_norm_engine requires tau >= 0");
  require(p >= 1.0 && std::isfinite(p), "prox_lp_norm_engine requires 1 <= p < inf");
  require(q_pt.allFinite(), "prox_lp_norm_engine requires a finite point");
  if (tau == 0.0) return std::make_unique<ClosedFormEngine>(q_pt, Certificate{});
  if (p == 1.0) {
    const Vector y = (q_pt.cwiseAbs().array() - tau).max(0.0).matrix().cwiseProduct(
        q_pt.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }));
    return std::make_unique<ClosedFormEngine>(y, Certificate{});
  }
  if (p == 2.0) {
    const double norm = q_pt.norm();
    const Vector y = norm <= tau ? Vector(Vector::Zero(q_pt.size())) : Vector((1.0 - tau / norm) * q_pt);
    return std::make_unique<ClosedFormEngine>(y, Certificate{});
  }
  return std::make_unique<LpNormEngine>(q_pt, tau, p);
}

std::unique_ptr<ProxEngine> prox_tvp_engine(const Vector& q_pt, double tau, double p) {
  require(tau >= 0.0, "prox_tvp_engine requires tau >= 0");
  require(p >= 1.0 && std::isfinite(p), "prox_tvp_engine requires 1 <= p < inf");
  require(q_pt.size() >= 2, "prox_tvp_engine requires at least two entries");
  require(q_pt.allFinite(), "prox_tvp_engine requires a finite point");
  if (tau == 0.0) return std::make_unique<ClosedFormEngine>(q_pt, Certificate{});
  return std::make_unique<TvpEngine>(q_pt, tau, p);
}

std::unique_ptr<ProxEngine> irbp_project_engine(const Vector& x0, const LpBallReg& reg,
                                                std::uint64_t rng_seed, std::optional<Vector> anchor) {
  return std::make_unique<IrbpEngine>(x0, reg, rng_seed, std::move(anchor));
}

std::unique_ptr<ProxEngine> make_cauchy_engine(const Regularizer& reg, const Vector& x,
                                               const Vector& ghat, double nu, std::uint64_t rng_seed) {
  require(nu > 0.0, "make_cauchy_engine requires nu > 0");
  require(x.size() == ghat.size(), "make_cauchy_engine dimension mismatch");
  const Vector q = x - nu * ghat;
  return std::visit(
      [&](const auto& r) -> std::unique_ptr<ProxEngine> {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, LpNormReg>) return prox_lp_norm_engine(q, nu * r.mu, r.p);
        else if constexpr (std::is_same_v<T, TvpReg>) return prox_tvp_engine(q, nu * r.mu, r.p);
        else {
          std::optional<Vector> anchor;
          if (ball_feasible(x, r)) anchor = x;
          return irbp_project_engine(q, r, rng_seed, anchor);
        }
      },
      reg);
}

double cauchy_model_change(const ProxQuery& query, const Vector& s, double h_x, double h_xs) {
  return query.ghat.dot(s) + 0.5 * s.squaredNorm() / query.nu + h_xs - h_x;
}

ProxOutcome run_prox_with_early_stop(ProxEngine& engine, const ProxQuery& query,
                                     const RegularizerValue& h_value) {
  require(query.nu > 0.0, "prox query requires nu > 0");
  require(query.M > 0.0, "prox query requires M > 0");
  require(query.mode == ProxMode::Exact || (query.kappa_s > 0.0 && query.kappa_s <= 1.0),
          "prox query requires 0 < kappa_s <= 1");
  require(query.x.size() == query.ghat.size(), "prox query dimension mismatch");

  ProxOutcome out;
  out.h_at_x = h_value(query.x);
  out.early_threshold = query.kappa_s * query.M;

  struct Candidate {
    Vector s;
    double h_xs = 0.0;
    double change = kInf;
  };
  std::optional<Candidate> best;

  auto finish = [&](const Candidate& c, ProxStop reason) {
    out.shat = c.s;
    out.h_at_x_plus_s = c.h_xs;
    out.xi_hat = -query.ghat.dot(c.s) + out.h_at_x - c.h_xs;
    out.stop_reason = reason;
    out.inner_iters = engine.work();
    if (query.certify) out.certificate = engine.certificate();
    return out;
  };
  auto fail = [&]() {
    out.shat = Vector::Zero(query.x.size());
    out.h_at_x_plus_s = out.h_at_x;
    out.xi_hat = 0.0;
    out.stop_reason = ProxStop::Failure;
    out.inner_iters = engine.work();
    return out;
  };

  for (int j = 0; j < query.max_inner; ++j) {
    engine.advance();
    const Vector& y = engine.candidate();
    if (!y.allFinite()) return fail();
    Candidate c;
    c.s = y - query.x;
    c.h_xs = h_value(y);
    c.change = cauchy_model_change(query, c.s, out.h_at_x, c.h_xs);
    const double xi = -query.ghat.dot(c.s) + out.h_at_x - c.h_xs;
    const bool descent = std::isfinite(c.change) && c.change <= 1e-11 * (1.0 + std::abs(xi));
    if (descent && (!best || c.change < best->change)) best = c;

    // Early termination demands strict model decrease so that xi_hat stays positive.
    if (query.mode == ProxMode::Inexact && c.change < 0.0 && engine.candidate_eligible() &&
        c.s.norm() >= out.early_threshold) {
      return finish(c, ProxStop::EarlyNorm);
    }
    if (engine.converged(query.native_tol)) {
      if (descent) return finish(c, ProxStop::Native);
      if (best) return finish(*best, ProxStop::Native);
      return fail();
    }
  }
  if (best) return finish(*best, ProxStop::Budget);
  return fail();
}

}  // namespace ir2n
