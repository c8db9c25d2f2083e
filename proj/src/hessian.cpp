#include "ir2n/hessian.hpp"

#include <algorithm>
#include <cmath>

namespace ir2n {
namespace {

constexpr double kDiagMin = 1e-8;
constexpr double kDiagMax = 1e8;
constexpr double kSkip = 1e-8;
constexpr int kPowerSteps = 10;

}  // namespace

std::string to_string(HessianKind kind) {
  switch (kind) {
    case HessianKind::Zero: return "zero";
    case HessianKind::SpectralDiagonal: return "diag";
    case HessianKind::LSR1: return "lsr1";
    case HessianKind::Explicit: return "explicit";
  }
  return "unknown";
}

HessianKind hessian_kind_from_string(const std::string& name) {
  if (name == "zero") return HessianKind::Zero;
  if (name == "diag") return HessianKind::SpectralDiagonal;
  if (name == "lsr1") return HessianKind::LSR1;
  throw InvalidArgument("unknown hessian kind: " + name);
}

HessianModel HessianModel::zero(Eigen::Index n) {
  HessianModel m;
  m.kind_ = HessianKind::Zero;
  m.n_ = n;
  return m;
}

HessianModel HessianModel::spectral_diagonal(Eigen::Index n, double initial) {
  HessianModel m;
  m.kind_ = HessianKind::SpectralDiagonal;
  m.n_ = n;
  m.diag_ = std::clamp(initial, kDiagMin, kDiagMax);
  m.norm_estimate_ = m.diag_;
  return m;
}

HessianModel HessianModel::lsr1(Eigen::Index n, int memory, double initial_scale) {
  require(memory >= 1, "LSR1 memory must be positive");
  HessianModel m;
  m.kind_ = HessianKind::LSR1;
  m.n_ = n;
  m.memory_ = memory;
  m.diag_ = initial_scale;
  m.norm_estimate_ = std::abs(initial_scale);
  return m;
}

HessianModel HessianModel::explicit_matrix(Matrix B) {
  require(B.rows() == B.cols(), "explicit Hessian must be square");
  require((B - B.transpose()).norm() <= 1e-12 * (1.0 + B.norm()), "explicit Hessian must be symmetric");
  HessianModel m;
  m.kind_ = HessianKind::Explicit;
  m.n_ = B.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
  m.norm_estimate_ = eig.eigenvalues().cwiseAbs().maxCoeff();
  m.dense_ = std::move(B);
  return m;
}

HessianModel HessianModel::make(HessianKind kind, Eigen::Index n, int memory) {
  switch (kind) {
    case HessianKind::Zero: return zero(n);
    case HessianKind::SpectralDiagonal: return spectral_diagonal(n);
    case HessianKind::LSR1: return lsr1(n, memory);
    case HessianKind::Explicit: break;
  }
  throw InvalidArgument("explicit Hessian models need a matrix");
}

Vector HessianModel::apply(const Vector& v) const {
  switch (kind_) {
    case HessianKind::Zero: return Vector::Zero(v.size());
    case HessianKind::SpectralDiagonal: return diag_ * v;
    case HessianKind::Explicit: return dense_ * v;
    case HessianKind::LSR1: {
      Vector out = diag_ * v;
      for (std::size_t i = 0; i < rank_one_.size(); ++i) {
        out += (rank_one_[i].dot(v) / denominators_[i]) * rank_one_[i];
      }
      return out;
    }
  }
  return Vector::Zero(v.size());
}

bool HessianModel::update(const Vector& s, const Vector& y) {
  require(s.size() == n_ && y.size() == n_, "Hessian update dimension mismatch");
  if (!s.allFinite() || !y.allFinite()) return false;
  switch (kind_) {
    case HessianKind::Zero:
    case HessianKind::Explicit:
      return false;
    case HessianKind::SpectralDiagonal: {
      const double ss = s.squaredNorm();
      if (ss == 0.0) return false;
      diag_ = std::clamp(s.dot(y) / ss, kDiagMin, kDiagMax);
      norm_estimate_ = diag_;
      return true;
    }
    case HessianKind::LSR1: {
      const Vector r = y - apply(s);
      const double rs = r.dot(s);
      if (std::abs(rs) < kSkip * r.norm() * s.norm() || rs == 0.0) return false;
      pairs_.push_back({s, y});
      if (static_cast<int>(pairs_.size()) > memory_) {
        pairs_.pop_front();
        rebuild();
      } else {
        rank_one_.push_back(r);
        denominators_.push_back(rs);
      }
      norm_estimate_ = power_iteration(kPowerSteps);
      return true;
    }
  }
  return false;
}

void HessianModel::rebuild() {
  rank_one_.clear();
  denominators_.clear();
  std::deque<Pair> kept;
  for (const auto& pair : pairs_) {
    const Vector r = pair.y - apply(pair.s);
    const double rs = r.dot(pair.s);
    if (std::abs(rs) < kSkip * r.norm() * pair.s.norm() || rs == 0.0) continue;
    rank_one_.push_back(r);
    denominators_.push_back(rs);
    kept.push_back(pair);
  }
  pairs_ = std::move(kept);
}

double HessianModel::power_iteration(int steps) const {
  // Deterministic start with mixed signs so that it is not orthogonal to common structure.
  Vector v(n_);
  for (Eigen::Index i = 0; i < n_; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double estimate = std::abs(diag_);
  for (int k = 0; k < steps; ++k) {
    Vector w = apply(v);
    const double norm = w.norm();
    if (norm == 0.0 || !std::isfinite(norm)) break;
    estimate = std::max(estimate, norm);
    v = w / norm;
  }
  return estimate;
}

}  // namespace ir2n
