#include "entlab/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "entlab/errors.hpp"

namespace entlab {

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_statistic_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double kolmogorov_pvalue(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  // Q(l) = 2 sum (-1)^{k-1} exp(-2 k^2 l^2)
  double sum = 0.0, sign = 1.0, prev = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-12 * std::abs(prev) || std::abs(term) < 1e-300) break;
    prev = term;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical(double alpha, double n_eff) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_pvalue(mid, n_eff) > alpha) lo = mid; else hi = mid;
  }
  return hi;
}

double chi_square_pvalue(double statistic, double dof) {
  if (dof <= 0) throw InvalidArgument("chi_square_pvalue: dof must be positive");
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InsufficientData("fit_line: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

std::vector<double> nnls(const std::vector<std::vector<double>>& columns,
                         const std::vector<double>& y) {
  const int k = static_cast<int>(columns.size());
  const int n = static_cast<int>(y.size());
  if (k == 0 || k > 10) throw InvalidArgument("nnls: 1..10 columns supported");
  Eigen::MatrixXd a(n, k);
  for (int c = 0; c < k; ++c) {
    if (static_cast<int>(columns[c].size()) != n) throw InvalidArgument("nnls: ragged columns");
    for (int r = 0; r < n; ++r) a(r, c) = columns[c][r];
  }
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  // Exhaustive active-set search; exact for the handful of columns used here.
  std::vector<double> best(k, 0.0);
  double best_res = b.squaredNorm();
  for (int mask = 1; mask < (1 << k); ++mask) {
    std::vector<int> idx;
    for (int c = 0; c < k; ++c) if (mask & (1 << c)) idx.push_back(c);
    Eigen::MatrixXd sub(n, idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(c) = a.col(idx[c]);
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
    if ((sol.array() < 0).any() || !sol.allFinite()) continue;
    const double res = (sub * sol - b).squaredNorm();
    if (res < best_res) {
      best_res = res;
      std::fill(best.begin(), best.end(), 0.0);
      for (std::size_t c = 0; c < idx.size(); ++c) best[idx[c]] = sol[c];
    }
  }
  return best;
}

double r_squared(const std::vector<double>& y, const std::vector<double>& yhat) {
  const std::size_t n = y.size();
  double my = 0;
  for (double v : y) my += v;
  my /= n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
}

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  const double n = static_cast<double>(v.size());
  for (double x : v) r.mean += x;
  r.mean /= n;
  if (v.size() < 2) return r;
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / (n - 1) / n);
  return r;
}

}  // namespace entlab
