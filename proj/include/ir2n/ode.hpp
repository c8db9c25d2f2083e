#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ir2n/common.hpp"

namespace ir2n {

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-8;
  long max_steps = 2'000'000;
};

/// Adaptive Dormand-Prince 5(4) integration of y' = f(t, y) reporting the state at each of
/// `times` (nondecreasing, times[0] is the initial time). Steps are clipped to land on the
/// output times. Throws NumericalFailure on step-size underflow or when max_steps is hit.
template <int Dim, class Rhs>
std::vector<Eigen::Matrix<double, Dim, 1>> integrate_dopri5(Rhs&& f, const Eigen::Matrix<double, Dim, 1>& y0,
                                                            std::span<const double> times,
                                                            const IntegratorOptions& opt,
                                                            IntegratorStats* stats = nullptr) {
  using State = Eigen::Matrix<double, Dim, 1>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  IntegratorStats local;
  IntegratorStats& st = stats ? *stats : local;
  std::vector<State> out;
  out.reserve(times.size());
  if (times.empty()) return out;
  out.push_back(y0);

  State y = y0;
  double t = times[0];
  State k1 = f(t, y);
  ++st.rhs_evals;

  auto err_norm = [&](const State& err, const State& ya, const State& yb) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
  };

  // Initial step from the scaled derivative magnitude.
  double h;
  {
    const double span = times.back() - times.front();
    const double d0 = err_norm(y, y, y);
    const double d1 = err_norm(k1, y, y);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::max(span, 1e-12));
  }

  long steps = 0;
  for (std::size_t idx = 1; idx < times.size(); ++idx) {
    const double t_end = times[idx];
    require(t_end >= t, "integrate_dopri5 requires nondecreasing output times");
    while (t < t_end) {
      if (++steps > opt.max_steps) {
        throw NumericalFailure("ODE integration exceeded " + std::to_string(opt.max_steps) + " steps");
      }
      const bool last = t + h >= t_end;
      const double hs = last ? t_end - t : h;
      if (!(hs > 1e-14 * std::max(1.0, std::abs(t)))) {
        throw NumericalFailure("ODE step size underflow at t=" + std::to_string(t));
      }
      const State k2 = f(t + c2 * hs, State(y + hs * (a21 * k1)));
      const State k3 = f(t + c3 * hs, State(y + hs * (a31 * k1 + a32 * k2)));
      const State k4 = f(t + c4 * hs, State(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
      const State k5 = f(t + c5 * hs, State(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      const State k6 = f(t + hs, State(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
      const State y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + hs, y_new);
      st.rhs_evals += 6;
      const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = err_norm(err, y, y_new);
      if (!std::isfinite(en)) {
        ++st.rejected;
        h = 0.25 * hs;
        continue;
      }
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en <= 1.0) {
        ++st.accepted;
        t = last ? t_end : t + hs;
        y = y_new;
        k1 = k7;
        // A clipped final step says nothing about the natural step; keep the larger one.
        h = last ? std::max(h, hs * factor) : hs * factor;
      } else {
        ++st.rejected;
        h = hs * std::min(1.0, factor);
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace ir2n
