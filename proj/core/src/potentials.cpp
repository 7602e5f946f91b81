#include "entlab/potentials.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "entlab/errors.hpp"

namespace entlab {

namespace {
thread_local std::vector<double> tl_weights;

double* scratch(int n) {
  if (static_cast<int>(tl_weights.size()) < n) tl_weights.resize(n);
  return tl_weights.data();
}
}  // namespace

InterpolatedPotential::InterpolatedPotential(double T, PotentialSide side, Eigen::MatrixXd atoms,
                                             Eigen::VectorXd log_mass)
    : T_(T), side_(side), atoms_(std::move(atoms)), log_mass_(std::move(log_mass)) {
  if (!(T_ > 0)) throw InvalidArgument("InterpolatedPotential: T must be positive");
  if (atoms_.rows() < 1 || atoms_.rows() > kMaxDim)
    throw UnsupportedInstance("InterpolatedPotential: dimension must be 1..3");
  if (atoms_.cols() < 1 || log_mass_.size() != atoms_.cols())
    throw InvalidArgument("InterpolatedPotential: atom/log-mass size mismatch");
  // Zero-weight atoms (log mass -inf) are dropped.
  int keep = 0;
  for (int j = 0; j < log_mass_.size(); ++j) {
    if (std::isnan(log_mass_[j]) || log_mass_[j] == std::numeric_limits<double>::infinity())
      throw NonFinite("InterpolatedPotential: log mass not finite");
    if (std::isfinite(log_mass_[j])) {
      atoms_.col(keep) = atoms_.col(j);
      log_mass_[keep] = log_mass_[j];
      ++keep;
    }
  }
  if (keep == 0) throw InvalidArgument("InterpolatedPotential: no atom with positive mass");
  atoms_.conservativeResize(Eigen::NoChange, keep);
  log_mass_.conservativeResize(keep);
}

InterpolatedPotential InterpolatedPotential::forward(const EotProblem& p, const DualVariables& d) {
  return InterpolatedPotential(p.T, PotentialSide::Forward, p.mu.atoms,
                               p.mu.weights.array().log().matrix() + d.log_g);
}

InterpolatedPotential InterpolatedPotential::backward(const EotProblem& p, const DualVariables& d) {
  return InterpolatedPotential(p.T, PotentialSide::Backward, p.rho.atoms,
                               p.rho.weights.array().log().matrix() + d.log_f);
}

double InterpolatedPotential::horizon(double s) const {
  if (s < 0) throw DomainError("InterpolatedPotential: s must be >= 0");
  const double h = T_ - s;
  if (h < h_min()) throw HorizonTooClose("InterpolatedPotential: T - s below h_min");
  return h;
}

double InterpolatedPotential::softmax(double s, const Vec& z, double* w) const {
  const double h = horizon(s);
  const int m = size(), d = dim();
  const double c = -0.5 / h;
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = z[k] - atoms_(k, j);
      r2 += t * t;
    }
    w[j] = log_mass_[j] + c * r2;
    mx = std::max(mx, w[j]);
  }
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    w[j] = std::exp(w[j] - mx);
    sum += w[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < m; ++j) w[j] *= inv;
  return mx + std::log(sum);
}

Vec InterpolatedPotential::softmax_mean(double s, const Vec& z) const {
  const int m = size(), d = dim();
  double* w = scratch(m);
  softmax(s, z, w);
  Vec mean = Vec::Zero(d);
  for (int j = 0; j < m; ++j) mean += w[j] * atoms_.col(j);
  return mean;
}

SoftmaxMoments InterpolatedPotential::softmax_moments(double s, const Vec& z) const {
  const int m = size(), d = dim();
  double* w = scratch(m);
  softmax(s, z, w);
  SoftmaxMoments mo;
  mo.dim = d;
  mo.weights = Eigen::Map<const Eigen::VectorXd>(w, m);
  mo.mean = Vec::Zero(d);
  for (int j = 0; j < m; ++j) mo.mean += w[j] * atoms_.col(j);
  mo.cov = Mat::Zero(d, d);
  for (int j = 0; j < m; ++j) {
    const Vec dv = atoms_.col(j) - mo.mean;
    mo.cov.noalias() += w[j] * dv * dv.transpose();
    for (int k = 0; k < d; ++k)
      for (int jj = 0; jj < d; ++jj)
        for (int i = 0; i < d; ++i) mo.m3[i + d * (jj + d * k)] += w[j] * dv[i] * dv[jj] * dv[k];
  }
  return mo;
}

double InterpolatedPotential::value(double s, const Vec& z) const {
  const double h = horizon(s);
  const double lognorm = softmax(s, z, scratch(size()));
  return -lognorm + 0.5 * dim() * std::log(2.0 * std::numbers::pi * h);
}

Vec InterpolatedPotential::gradient(double s, const Vec& z) const {
  const double h = horizon(s);
  return (z - softmax_mean(s, z)) / h;
}

Mat InterpolatedPotential::hessian(double s, const Vec& z) const {
  const double h = horizon(s);
  const int m = size(), d = dim();
  double* w = scratch(m);
  softmax(s, z, w);
  Vec mean = Vec::Zero(d);
  for (int j = 0; j < m; ++j) mean += w[j] * atoms_.col(j);
  Mat cov = Mat::Zero(d, d);
  for (int j = 0; j < m; ++j) {
    const Vec dv = atoms_.col(j) - mean;
    cov.noalias() += w[j] * dv * dv.transpose();
  }
  return Mat::Identity(d, d) / h - cov / (h * h);
}

Evaluation InterpolatedPotential::evaluate(double s, const Vec& z) const {
  const double h = horizon(s);
  const int d = dim();
  const double lognorm = softmax(s, z, scratch(size()));
  // moments recompute the same softmax; the log normalizer comes from above
  const SoftmaxMoments mo = softmax_moments(s, z);
  Evaluation e;
  e.s = s;
  e.z = z;
  e.value = -lognorm + 0.5 * d * std::log(2.0 * std::numbers::pi * h);
  e.gradient = (z - mo.mean) / h;
  e.hessian = Mat::Identity(d, d) / h - mo.cov / (h * h);
  return e;
}

Mat InterpolatedPotential::third_derivative(double s, const Vec& z, const Vec& v) const {
  const double h = horizon(s);
  const SoftmaxMoments mo = softmax_moments(s, z);
  const int d = dim();
  Mat out = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) out(i, j) -= mo.m3_at(i, j, k) * v[k];
  return out / (h * h * h);
}

namespace {
void check_pair(const DiscreteMeasure& base, const InterpolatedPotential& a,
                const InterpolatedPotential& b) {
  if (a.T() != b.T()) throw InvalidArgument("potential pair: horizons differ");
  if (a.side() != b.side()) throw InvalidArgument("potential pair: sides differ");
  if (a.dim() != b.dim() || base.dim() != a.dim()) throw InvalidArgument("potential pair: dimension mismatch");
}
}  // namespace

double grad_diff_l2(const DiscreteMeasure& base, const InterpolatedPotential& a,
                    const InterpolatedPotential& b, double s) {
  check_pair(base, a, b);
  const double h = a.horizon(s);
  double acc = 0.0;
  for (int i = 0; i < base.size(); ++i) {
    const Vec z = base.atoms.col(i);
    // grad A - grad B = (mean_B - mean_A) / h
    const Vec diff = (b.softmax_mean(s, z) - a.softmax_mean(s, z)) / h;
    acc += base.weights[i] * diff.squaredNorm();
  }
  return std::sqrt(acc);
}

double hess_diff_l1(const DiscreteMeasure& base, const InterpolatedPotential& a,
                    const InterpolatedPotential& b, double s) {
  check_pair(base, a, b);
  double acc = 0.0;
  for (int i = 0; i < base.size(); ++i) {
    const Vec z = base.atoms.col(i);
    acc += base.weights[i] * hs_norm(a.hessian(s, z) - b.hessian(s, z));
  }
  return acc;
}

double hs_norm(const Mat& m) { return std::sqrt(m.cwiseAbs2().sum()); }

double min_eigenvalue(const Mat& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

HessianExtremes hessian_extremes(const InterpolatedPotential& ip, const Eigen::MatrixXd& probes,
                                 const std::vector<double>& s_grid) {
  if (probes.cols() == 0 || s_grid.empty()) throw InvalidArgument("hessian_extremes: empty probe set");
  HessianExtremes ex;
  ex.min_eig = std::numeric_limits<double>::infinity();
  for (double s : s_grid)
    for (int p = 0; p < probes.cols(); ++p) {
      const Mat hm = ip.hessian(s, probes.col(p));
      ex.min_eig = std::min(ex.min_eig, min_eigenvalue(hm));
      ex.max_hs = std::max(ex.max_hs, hs_norm(hm));
    }
  return ex;
}

}  // namespace entlab
