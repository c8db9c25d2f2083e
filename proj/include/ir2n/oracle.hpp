#pragma once

#include <map>

#include "ir2n/common.hpp"

namespace ir2n {

/// Tightest evaluation accuracy; exact oracles evaluate at this level.
inline constexpr double kPrecExact = 1e-14;
inline constexpr double kPrecLoose = 1e-3;

/// Accuracy-parameterized smooth part f with work accounting per accuracy level.
class SmoothOracle {
 public:
  struct Work {
    long values = 0;
    long gradients = 0;
  };

  virtual ~SmoothOracle() = default;

  double eval(const Vector& x, double prec) {
    const double used = exact() ? kPrecExact : prec;
    ++work_[used].values;
    return value_impl(x, used);
  }
  Vector grad(const Vector& x, double prec) {
    const double used = exact() ? kPrecExact : prec;
    ++work_[used].gradients;
    return gradient_impl(x, used);
  }

  /// When true the accuracy argument is ignored.
  virtual bool exact() const = 0;
  virtual Eigen::Index dimension() const = 0;

  const std::map<double, Work>& work() const { return work_; }
  long total_values() const;
  long total_gradients() const;

 protected:
  virtual double value_impl(const Vector& x, double prec) = 0;
  virtual Vector gradient_impl(const Vector& x, double prec) = 0;

 private:
  std::map<double, Work> work_;
};

inline long SmoothOracle::total_values() const {
  long total = 0;
  for (const auto& [prec, w] : work_) total += w.values;
  return total;
}

inline long SmoothOracle::total_gradients() const {
  long total = 0;
  for (const auto& [prec, w] : work_) total += w.gradients;
  return total;
}

/// Geometric interpolation from 1e-3 down to 1e-14 driven by the unsuccessful-iteration count.
struct PrecSchedule {
  double prec_hi = kPrecLoose;
  double prec_lo = kPrecExact;
  int N = 1;
  int n_F = 0;

  double value() const;
};

double prec_schedule_value(const PrecSchedule& sched);

}  // namespace ir2n
