#pragma once

#include <functional>
#include <vector>

namespace entlab {

// Kolmogorov-Smirnov statistics. Inputs are copied and sorted internally.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic P(sqrt(n) D > x) with the small-sample correction
// lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D; n_eff = n*m/(n+m) for two samples.
double kolmogorov_pvalue(double d, double n_eff);
// Critical D at level alpha (inverts kolmogorov_pvalue).
double ks_critical(double alpha, double n_eff);

// Upper tail of the chi-square distribution.
double chi_square_pvalue(double statistic, double dof);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// min |A c - y|^2 subject to c >= 0, A given column-wise (small column count).
std::vector<double> nnls(const std::vector<std::vector<double>>& columns,
                         const std::vector<double>& y);

// Coefficient of determination of a prediction.
double r_squared(const std::vector<double>& y, const std::vector<double>& yhat);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(const std::vector<double>& v);

}  // namespace entlab
