#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "ir2n/common.hpp"
#include "ir2n/ode.hpp"
#include "ir2n/oracle.hpp"

namespace ir2n {

// ---------------------------------------------------------------------------------------------
// Basis pursuit denoising: 1/2 ||A x - b||^2 with A having orthonormal rows.

struct BpdnProblem {
  Matrix A;
  Vector b;
  Vector x_true;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
};

BpdnProblem bpdn_generate(std::uint64_t seed, double noise_scale = 1.0, Eigen::Index rows = 200,
                          Eigen::Index cols = 512, Eigen::Index nonzeros = 10);

class LeastSquaresOracle final : public SmoothOracle {
 public:
  LeastSquaresOracle(Matrix A, Vector b);
  bool exact() const override { return true; }
  Eigen::Index dimension() const override { return A_.cols(); }

 protected:
  double value_impl(const Vector& x, double prec) override;
  Vector gradient_impl(const Vector& x, double prec) override;

 private:
  Matrix A_;
  Vector b_;
};

// ---------------------------------------------------------------------------------------------
// Matrix completion: 1/2 ||P(X - A_img)||_F^2 on the column-major vectorization of X.

struct MatCompProblem {
  Matrix image;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::uint64_t seed = 0;
  double sampling_rate = 0.8;

  Vector image_vector() const;
  Vector mask_vector() const;
};

/// The fixed 10 x 12 test image sin(pi i / 9) cos(pi j / 11).
Matrix matcomp_image();
MatCompProblem matcomp_generate(std::uint64_t seed, double sampling_rate = 0.8);

class MaskedResidualOracle final : public SmoothOracle {
 public:
  MaskedResidualOracle(Vector target, Vector mask);
  bool exact() const override { return true; }
  Eigen::Index dimension() const override { return target_.size(); }

 protected:
  double value_impl(const Vector& x, double prec) override;
  Vector gradient_impl(const Vector& x, double prec) override;

 private:
  Vector target_;
  Vector mask_;
};

// ---------------------------------------------------------------------------------------------
// FitzHugh-Nagumo parameter fit.
//   V' = (V - V^3/3 - W + x1) / x2,   W' = x2 (x3 V - x4 W + x5)

using FhState = Eigen::Vector2d;

struct FhProblem {
  FhState initial{2.0, 0.0};
  Vector x_true;
  std::vector<double> times;
  Vector v_data;
  Vector w_data;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;

  /// length of the residual F(x), 2 (n + 1)
  Eigen::Index residual_size() const { return 2 * static_cast<Eigen::Index>(times.size()); }
};

/// Uniform grid of `intervals + 1` points on [0, horizon].
std::vector<double> uniform_grid(double horizon, int intervals);

FhProblem fh_generate(std::uint64_t seed, double noise_scale = 0.1, int intervals = 100,
                      double horizon = 20.0);

struct FhTrajectory {
  Vector v;
  Vector w;
  IntegratorStats stats;
};

struct FhSensitivities {
  FhTrajectory trajectory;
  /// d v(t_i) / d x and d w(t_i) / d x, one row per sample.
  Matrix dv;
  Matrix dw;
};

/// Samples (V, W) at `times` with absolute and relative tolerance `prec`.
FhTrajectory fh_simulate(const Vector& x, double prec, const std::vector<double>& times,
                         const FhState& initial = FhState(2.0, 0.0));

/// States plus forward sensitivities with respect to the five parameters.
FhSensitivities fh_simulate_sensitivities(const Vector& x, double prec, const std::vector<double>& times,
                                          const FhState& initial = FhState(2.0, 0.0));

/// f(x) = 1/2 ||F(x)||^2 with F the misfit to the sampled data.
class FhOracle final : public SmoothOracle {
 public:
  explicit FhOracle(const FhProblem& problem, bool exact = false);
  bool exact() const override { return exact_; }
  Eigen::Index dimension() const override { return 5; }

  Vector residual(const Vector& x, double prec) const;
  const IntegratorStats& integrator_work() const { return work_; }

 protected:
  double value_impl(const Vector& x, double prec) override;
  Vector gradient_impl(const Vector& x, double prec) override;

 private:
  FhProblem problem_;
  bool exact_;
  IntegratorStats work_;
};

/// Two-column "index value" dump used for inspection and figure data.
void write_columns(std::ostream& os, const Vector& a, const Vector& b);

}  // namespace ir2n
