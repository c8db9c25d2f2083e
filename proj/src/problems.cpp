#include "ir2n/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace ir2n {

// ---------------------------------------------------------------------------------------------
// BPDN

BpdnProblem bpdn_generate(std::uint64_t seed, double noise_scale, Eigen::Index rows, Eigen::Index cols,
                          Eigen::Index nonzeros) {
  require(rows >= 1 && rows <= cols, "bpdn_generate requires 1 <= rows <= cols");
  require(nonzeros >= 0 && nonzeros <= cols, "bpdn_generate requires 0 <= nonzeros <= cols");
  require(noise_scale >= 0.0, "bpdn_generate requires a nonnegative noise scale");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  BpdnProblem prob;
  prob.seed = seed;
  prob.noise_scale = noise_scale;

  Matrix G(cols, rows);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) G(i, j) = gauss(rng);
  const Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(cols, rows);
  prob.A = Q.transpose();

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(cols));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  prob.x_true = Vector::Zero(cols);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index k = 0; k < nonzeros; ++k) {
    prob.x_true[perm[static_cast<std::size_t>(k)]] = coin(rng) ? 1.0 : -1.0;
  }

  Vector noise(rows);
  for (Eigen::Index i = 0; i < rows; ++i) noise[i] = gauss(rng);
  prob.b = prob.A * prob.x_true + noise_scale * noise;
  return prob;
}

LeastSquaresOracle::LeastSquaresOracle(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  require(A_.rows() == b_.size(), "LeastSquaresOracle dimension mismatch");
}

double LeastSquaresOracle::value_impl(const Vector& x, double) {
  return 0.5 * (A_ * x - b_).squaredNorm();
}

Vector LeastSquaresOracle::gradient_impl(const Vector& x, double) {
  return A_.transpose() * (A_ * x - b_);
}

// ---------------------------------------------------------------------------------------------
// Matrix completion

Matrix matcomp_image() {
  Matrix img(10, 12);
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j)
      img(i, j) = std::sin(std::numbers::pi * static_cast<double>(i) / 9.0) *
                  std::cos(std::numbers::pi * static_cast<double>(j) / 11.0);
  return img;
}

MatCompProblem matcomp_generate(std::uint64_t seed, double sampling_rate) {
  require(sampling_rate > 0.0 && sampling_rate <= 1.0, "matcomp sampling rate must lie in (0, 1]");
  MatCompProblem prob;
  prob.seed = seed;
  prob.sampling_rate = sampling_rate;
  prob.image = matcomp_image();
  prob.mask.resize(prob.image.rows(), prob.image.cols());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(sampling_rate);
  for (Eigen::Index j = 0; j < prob.mask.cols(); ++j)
    for (Eigen::Index i = 0; i < prob.mask.rows(); ++i) prob.mask(i, j) = keep(rng);
  return prob;
}

Vector MatCompProblem::image_vector() const {
  return Eigen::Map<const Vector>(image.data(), image.size());
}

Vector MatCompProblem::mask_vector() const {
  Vector m(mask.size());
  for (Eigen::Index k = 0; k < mask.size(); ++k) m[k] = mask.data()[k] ? 1.0 : 0.0;
  return m;
}

MaskedResidualOracle::MaskedResidualOracle(Vector target, Vector mask)
    : target_(std::move(target)), mask_(std::move(mask)) {
  require(target_.size() == mask_.size(), "MaskedResidualOracle dimension mismatch");
}

double MaskedResidualOracle::value_impl(const Vector& x, double) {
  return 0.5 * mask_.cwiseProduct(x - target_).squaredNorm();
}

Vector MaskedResidualOracle::gradient_impl(const Vector& x, double) {
  return mask_.cwiseProduct(x - target_);
}

// ---------------------------------------------------------------------------------------------
// FitzHugh-Nagumo

namespace {

constexpr double kMinTimeScale = 1e-6;

void check_fh_parameters(const Vector& x) {
  require(x.size() == 5, "FitzHugh-Nagumo parameters must have 5 entries");
  if (!x.allFinite()) throw NumericalFailure("FitzHugh-Nagumo parameters are not finite");
  if (std::abs(x[1]) < kMinTimeScale) {
    throw NumericalFailure("FitzHugh-Nagumo time-scale parameter x2 is too close to zero");
  }
}

IntegratorOptions fh_options(double prec) {
  require(prec > 0.0, "integration tolerance must be positive");
  IntegratorOptions opt;
  opt.rtol = prec;
  opt.atol = prec;
  return opt;
}

}  // namespace

std::vector<double> uniform_grid(double horizon, int intervals) {
  require(intervals >= 1 && horizon > 0.0, "uniform_grid requires a positive horizon and interval count");
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) t[static_cast<std::size_t>(i)] = horizon * i / intervals;
  return t;
}

FhTrajectory fh_simulate(const Vector& x, double prec, const std::vector<double>& times,
                         const FhState& initial) {
  check_fh_parameters(x);
  const double x1 = x[0], inv_x2 = 1.0 / x[1], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4];
  auto rhs = [=](double, const FhState& y) {
    const double V = y[0], W = y[1];
    return FhState((V - V * V * V / 3.0 - W + x1) * inv_x2, x2 * (x3 * V - x4 * W + x5));
  };
  FhTrajectory traj;
  const auto states = integrate_dopri5<2>(rhs, initial, std::span<const double>(times), fh_options(prec),
                                          &traj.stats);
  const auto n = static_cast<Eigen::Index>(states.size());
  traj.v.resize(n);
  traj.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    traj.v[i] = states[static_cast<std::size_t>(i)][0];
    traj.w[i] = states[static_cast<std::size_t>(i)][1];
  }
  return traj;
}

FhSensitivities fh_simulate_sensitivities(const Vector& x, double prec, const std::vector<double>& times,
                                          const FhState& initial) {
  check_fh_parameters(x);
  using Aug = Eigen::Matrix<double, 12, 1>;
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4];
  const double inv_x2 = 1.0 / x2;
  // Layout: [V, W, dV/dx1..dV/dx5, dW/dx1..dW/dx5].
  auto rhs = [=](double, const Aug& y) {
    const double V = y[0], W = y[1];
    const double core = V - V * V * V / 3.0 - W + x1;
    const double dVV = (1.0 - V * V) * inv_x2, dVW = -inv_x2;
    const double dWV = x2 * x3, dWW = -x2 * x4;
    Aug out;
    out[0] = core * inv_x2;
    out[1] = x2 * (x3 * V - x4 * W + x5);
    for (int j = 0; j < 5; ++j) {
      const double sV = y[2 + j], sW = y[7 + j];
      out[2 + j] = dVV * sV + dVW * sW;
      out[7 + j] = dWV * sV + dWW * sW;
    }
    out[2] += inv_x2;
    out[3] += -core * inv_x2 * inv_x2;
    out[8] += x3 * V - x4 * W + x5;
    out[9] += x2 * V;
    out[10] += -x2 * W;
    out[11] += x2;
    return out;
  };
  Aug y0 = Aug::Zero();
  y0[0] = initial[0];
  y0[1] = initial[1];
  FhSensitivities sens;
  const auto states = integrate_dopri5<12>(rhs, y0, std::span<const double>(times), fh_options(prec),
                                           &sens.trajectory.stats);
  const auto n = static_cast<Eigen::Index>(states.size());
  sens.trajectory.v.resize(n);
  sens.trajectory.w.resize(n);
  sens.dv.resize(n, 5);
  sens.dw.resize(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Aug& s = states[static_cast<std::size_t>(i)];
    sens.trajectory.v[i] = s[0];
    sens.trajectory.w[i] = s[1];
    sens.dv.row(i) = s.segment<5>(2).transpose();
    sens.dw.row(i) = s.segment<5>(7).transpose();
  }
  return sens;
}

FhProblem fh_generate(std::uint64_t seed, double noise_scale, int intervals, double horizon) {
  require(noise_scale >= 0.0, "fh_generate requires a nonnegative noise scale");
  FhProblem prob;
  prob.seed = seed;
  prob.noise_scale = noise_scale;
  prob.x_true = (Vector(5) << 0.0, 0.2, 1.0, 0.0, 0.0).finished();
  prob.times = uniform_grid(horizon, intervals);
  const FhTrajectory clean = fh_simulate(prob.x_true, kPrecExact, prob.times, prob.initial);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  prob.v_data = clean.v;
  prob.w_data = clean.w;
  for (Eigen::Index i = 0; i < prob.v_data.size(); ++i) prob.v_data[i] += noise_scale * gauss(rng);
  for (Eigen::Index i = 0; i < prob.w_data.size(); ++i) prob.w_data[i] += noise_scale * gauss(rng);
  return prob;
}

FhOracle::FhOracle(const FhProblem& problem, bool exact) : problem_(problem), exact_(exact) {
  require(problem_.times.size() >= 2, "FhOracle requires at least two sample times");
}

Vector FhOracle::residual(const Vector& x, double prec) const {
  const FhTrajectory traj = fh_simulate(x, exact_ ? kPrecExact : prec, problem_.times, problem_.initial);
  Vector F(problem_.residual_size());
  const Eigen::Index m = traj.v.size();
  F.head(m) = traj.v - problem_.v_data;
  F.tail(m) = traj.w - problem_.w_data;
  return F;
}

double FhOracle::value_impl(const Vector& x, double prec) {
  const FhTrajectory traj = fh_simulate(x, prec, problem_.times, problem_.initial);
  work_.accepted += traj.stats.accepted;
  work_.rejected += traj.stats.rejected;
  work_.rhs_evals += traj.stats.rhs_evals;
  return 0.5 * ((traj.v - problem_.v_data).squaredNorm() + (traj.w - problem_.w_data).squaredNorm());
}

Vector FhOracle::gradient_impl(const Vector& x, double prec) {
  const FhSensitivities sens = fh_simulate_sensitivities(x, prec, problem_.times, problem_.initial);
  work_.accepted += sens.trajectory.stats.accepted;
  work_.rejected += sens.trajectory.stats.rejected;
  work_.rhs_evals += sens.trajectory.stats.rhs_evals;
  const Vector rv = sens.trajectory.v - problem_.v_data;
  const Vector rw = sens.trajectory.w - problem_.w_data;
  return sens.dv.transpose() * rv + sens.dw.transpose() * rw;
}

void write_columns(std::ostream& os, const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "write_columns requires equal lengths");
  os.precision(17);
  for (Eigen::Index i = 0; i < a.size(); ++i) os << a[i] << ' ' << b[i] << '\n';
}

}  // namespace ir2n
