#pragma once

// Independent reference computations for the tests. Deliberately naive: plain
// loops, scaling-form Sinkhorn, dense trapezoid integrals, finite differences.
// Nothing here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "entlab/measures.hpp"
#include "entlab/rng.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

// Scaling-form Sinkhorn on 1D atoms, fixed iteration count.
inline std::vector<std::vector<double>> sinkhorn_plan(const std::vector<double>& x, const std::vector<double>& a,
                                                      const std::vector<double>& y, const std::vector<double>& b,
                                                      double T, int iters = 5000) {
  const std::size_t n = x.size(), m = y.size();
  std::vector<std::vector<double>> K(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) K[i][j] = std::exp(-(x[i] - y[j]) * (x[i] - y[j]) / (2 * T));
  std::vector<double> u(n, 1.0), v(m, 1.0);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += K[i][j] * b[j] * v[j];
      u[i] = 1.0 / s;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += K[i][j] * a[i] * u[i];
      v[j] = 1.0 / s;
    }
  }
  std::vector<std::vector<double>> P(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) P[i][j] = a[i] * b[j] * u[i] * v[j] * K[i][j];
  return P;
}

// -log sum_j m_j N(z; y_j, h) in 1D, direct summation.
inline double mixture_potential(const std::vector<double>& y, const std::vector<double>& mass, double h, double z) {
  double s = 0;
  for (std::size_t j = 0; j < y.size(); ++j)
    s += mass[j] * std::exp(-(z - y[j]) * (z - y[j]) / (2 * h)) / std::sqrt(2 * kPi * h);
  return -std::log(s);
}

inline double central_diff(const std::function<double(double)>& f, double z, double step) {
  return (f(z + step) - f(z - step)) / (2 * step);
}

// Five-point stencil, fourth order.
inline double central_diff5(const std::function<double(double)>& f, double z, double step) {
  return (-f(z + 2 * step) + 8 * f(z + step) - 8 * f(z - step) + f(z - 2 * step)) / (12 * step);
}

// W2^2 between two uniform measures of equal size by trying every permutation.
inline double brute_w2_sq_uniform(std::vector<double> x, const std::vector<double>& y) {
  std::sort(x.begin(), x.end());
  double best = 1e300;
  do {
    double c = 0;
    for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - y[i]) * (x[i] - y[i]);
    best = std::min(best, c / static_cast<double>(x.size()));
  } while (std::next_permutation(x.begin(), x.end()));
  return best;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

// KL between two 1D Gaussian mixtures of common variance v, dense trapezoid rule.
inline double mixture_kl_1d(const std::vector<double>& wa, const std::vector<double>& ma, const std::vector<double>& wb,
                            const std::vector<double>& mb, double v, int n = 200000) {
  const double sd = std::sqrt(v);
  double lo = 1e300, hi = -1e300;
  for (double m : ma) lo = std::min(lo, m), hi = std::max(hi, m);
  for (double m : mb) lo = std::min(lo, m), hi = std::max(hi, m);
  lo -= 14 * sd;
  hi += 14 * sd;
  auto dens = [&](const std::vector<double>& w, const std::vector<double>& m, double z) {
    double s = 0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * std::exp(-(z - m[k]) * (z - m[k]) / (2 * v));
    return s / std::sqrt(2 * kPi * v);
  };
  const double dz = (hi - lo) / n;
  double acc = 0;
  for (int k = 0; k <= n; ++k) {
    const double z = lo + k * dz;
    const double pa = dens(wa, ma, z), pb = dens(wb, mb, z);
    const double f = pa > 1e-300 ? pa * std::log(pa / pb) : 0.0;
    acc += (k == 0 || k == n ? 0.5 : 1.0) * f;
  }
  return acc * dz;
}

// Closed-form cross-covariance of the 1D Gaussian entropic plan with cost |x-y|^2/2
// and regularization T: c = -T/2 + sqrt(T^2/4 + var_rho var_nu).
inline double gaussian_cross_cov(double var_rho, double var_nu, double T) {
  return -0.5 * T + std::sqrt(0.25 * T * T + var_rho * var_nu);
}

// Random 1D discrete measure on [-scale, scale], one jittered atom per stratum,
// so neighbouring atoms are at least 0.6 scale / n apart.
inline entlab::DiscreteMeasure random_measure_1d(entlab::CounterRng& rng, int n, double scale) {
  Eigen::MatrixXd x(1, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    x(0, i) = scale * (2 * (i + 0.15 + 0.7 * rng.uniform()) / n - 1);
    w[i] = 0.2 + rng.uniform();
  }
  return entlab::DiscreteMeasure(x, w / w.sum());
}

inline entlab::DiscreteMeasure measure_1d(const std::vector<double>& x, const std::vector<double>& w) {
  Eigen::MatrixXd a(1, x.size());
  Eigen::VectorXd b(w.size());
  for (std::size_t i = 0; i < x.size(); ++i) a(0, i) = x[i];
  for (std::size_t i = 0; i < w.size(); ++i) b[i] = w[i];
  return entlab::DiscreteMeasure(a, b);
}

}  // namespace oracle
