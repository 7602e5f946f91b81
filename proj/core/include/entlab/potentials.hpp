#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "entlab/eot.hpp"
#include "entlab/types.hpp"

namespace entlab {

// Evaluation cutoff near the horizon, relative to T.
inline constexpr double kHMinRel = 1e-6;

enum class PotentialSide { Forward, Backward };

struct SoftmaxMoments {
  Eigen::VectorXd weights;
  Vec mean;
  Mat cov;
  // Full symmetric tensor, index (i, j, k) -> i + d * (j + d * k).
  std::array<double, kMaxDim * kMaxDim * kMaxDim> m3{};
  int dim = 1;
  double m3_at(int i, int j, int k) const { return m3[i + dim * (j + dim * k)]; }
};

struct Evaluation {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
  double s = 0.0;
  Vec z;
};

// exp(-h_s(z)) = sum_j exp(l_j) N(z; y_j, (T - s) I), a log-Gaussian mixture.
// Forward side: psi_s with targets on mu; backward side: phi_s with targets on rho.
class InterpolatedPotential {
 public:
  InterpolatedPotential(double T, PotentialSide side, Eigen::MatrixXd atoms, Eigen::VectorXd log_mass);

  // psi from (mu, log b + log g).
  static InterpolatedPotential forward(const EotProblem& p, const DualVariables& d);
  // phi from (rho, log a + log f).
  static InterpolatedPotential backward(const EotProblem& p, const DualVariables& d);

  double T() const { return T_; }
  double h_min() const { return kHMinRel * T_; }
  PotentialSide side() const { return side_; }
  int dim() const { return static_cast<int>(atoms_.rows()); }
  int size() const { return static_cast<int>(atoms_.cols()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& log_mass() const { return log_mass_; }

  SoftmaxMoments softmax_moments(double s, const Vec& z) const;
  Evaluation evaluate(double s, const Vec& z) const;
  double value(double s, const Vec& z) const;
  // Softmax mean only; gradient = (z - mean) / (T - s).
  Vec softmax_mean(double s, const Vec& z) const;
  Vec gradient(double s, const Vec& z) const;
  Mat hessian(double s, const Vec& z) const;
  // (grad^3 h_s(z)[v])_{ij} = -sum_k M3_ijk v_k / (T - s)^3.
  Mat third_derivative(double s, const Vec& z, const Vec& v) const;

  // Horizon remaining, validated against h_min.
  double horizon(double s) const;

 private:
  // Fills thread-local softmax weights; returns log normalizer.
  double softmax(double s, const Vec& z, double* w) const;

  double T_;
  PotentialSide side_;
  Eigen::MatrixXd atoms_;
  Eigen::VectorXd log_mass_;
};

// sqrt(sum_i a_i |grad A(x_i) - grad B(x_i)|^2).
double grad_diff_l2(const DiscreteMeasure& base, const InterpolatedPotential& a,
                    const InterpolatedPotential& b, double s);
// sum_i a_i ||hess A(x_i) - hess B(x_i)||_HS at s = 0.
double hess_diff_l1(const DiscreteMeasure& base, const InterpolatedPotential& a,
                    const InterpolatedPotential& b, double s = 0.0);

struct HessianExtremes {
  double min_eig = 0.0;
  double max_hs = 0.0;
};
// Probes are columns of a d x P matrix.
HessianExtremes hessian_extremes(const InterpolatedPotential& ip, const Eigen::MatrixXd& probes,
                                 const std::vector<double>& s_grid);

double hs_norm(const Mat& m);
double min_eigenvalue(const Mat& m);

}  // namespace entlab
