#pragma once

#include <deque>
#include <string>

#include "ir2n/common.hpp"

namespace ir2n {

enum class HessianKind { Zero, SpectralDiagonal, LSR1, Explicit };

std::string to_string(HessianKind kind);
HessianKind hessian_kind_from_string(const std::string& name);

/// Symmetric model B_k of the smooth Hessian with a cached estimate of ||B_k||.
class HessianModel {
 public:
  static HessianModel zero(Eigen::Index n);
  static HessianModel spectral_diagonal(Eigen::Index n, double initial = 1.0);
  /// Limited-memory SR1 with B_0 = initial_scale * I.
  static HessianModel lsr1(Eigen::Index n, int memory = 5, double initial_scale = 1.0);
  /// A fixed symmetric matrix, e.g. the exact Hessian of a quadratic.
  static HessianModel explicit_matrix(Matrix B);
  static HessianModel make(HessianKind kind, Eigen::Index n, int memory = 5);

  HessianKind kind() const { return kind_; }
  Eigen::Index dimension() const { return n_; }
  double norm_estimate() const { return norm_estimate_; }
  /// Pairs currently stored by the LSR1 memory.
  int stored_pairs() const { return static_cast<int>(pairs_.size()); }
  double diagonal() const { return diag_; }

  Vector apply(const Vector& v) const;
  /// s^T B s
  double quadratic_form(const Vector& s) const { return s.dot(apply(s)); }

  /// Incorporates the step s and gradient difference y. Returns false when the update was
  /// skipped by the safeguard.
  bool update(const Vector& s, const Vector& y);

 private:
  struct Pair {
    Vector s;
    Vector y;
  };

  void rebuild();
  double power_iteration(int steps) const;

  HessianKind kind_ = HessianKind::Zero;
  Eigen::Index n_ = 0;
  double diag_ = 0.0;
  int memory_ = 0;
  std::deque<Pair> pairs_;
  // Recursive SR1 representation: B = diag_ I + sum_i r_i r_i^T / c_i.
  std::vector<Vector> rank_one_;
  std::vector<double> denominators_;
  Matrix dense_;
  double norm_estimate_ = 0.0;
};

}  // namespace ir2n
