#include <gtest/gtest.h>

#include <cmath>

#include "entlab/mixture.hpp"
#include "entlab/quadrature.hpp"
#include "entlab/stats.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

MixtureLaw mix1(std::vector<double> w, std::vector<double> m, double v) {
  MixtureLaw l;
  l.weights = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  l.means = Eigen::Map<Eigen::MatrixXd>(m.data(), 1, m.size());
  l.variance = v;
  return l;
}

Plan frozen_plan() {
  return solve(oracle::measure_1d({-1, 0.2, 1.5}, {0.2, 0.5, 0.3}),
               oracle::measure_1d({-0.5, 0.7, 1.1}, {0.4, 0.35, 0.25}), 0.7)
      .plan;
}

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  const auto q = gauss_legendre(8, 0.0, 2.0);
  double acc = 0;
  for (int k = 0; k < q.size(); ++k) acc += q.weights[k] * std::pow(q.nodes[k], 15);
  EXPECT_NEAR(acc, std::pow(2.0, 16) / 16.0, 1e-9);
}

TEST(Quadrature, GaussHermiteNormalMoments) {
  const auto q = gauss_hermite_normal(20);
  double m0 = 0, m2 = 0, m4 = 0;
  for (int k = 0; k < q.size(); ++k) {
    m0 += q.weights[k];
    m2 += q.weights[k] * q.nodes[k] * q.nodes[k];
    m4 += q.weights[k] * std::pow(q.nodes[k], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-14);
  EXPECT_NEAR(m2, 1.0, 1e-13);
  EXPECT_NEAR(m4, 3.0, 1e-12);
}

TEST(Quadrature, AdaptiveHandlesEndpointSingularity) {
  const auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10, 50);
  EXPECT_NEAR(r.value, 2.0, 1e-7);
}

TEST(MixtureKl, EqualLawsGiveZero) {
  const auto a = mix1({0.3, 0.7}, {-1, 1}, 0.2);
  EXPECT_NEAR(mixture_kl(a, a).value, 0.0, 1e-13);
}

TEST(MixtureKl, SingleComponentsMatchGaussianFormula) {
  const auto a = mix1({1}, {0.0}, 0.5), b = mix1({1}, {0.6}, 0.5);
  EXPECT_NEAR(mixture_kl(a, b).value, 0.36 / (2 * 0.5), 1e-12);
}

TEST(MixtureKl, AgreesWithDenseTrapezoid) {
  const auto a = mix1({0.2, 0.5, 0.3}, {-1, 0.1, 1.2}, 0.15);
  const auto b = mix1({0.4, 0.6}, {-0.6, 0.9}, 0.15);
  const double ref = oracle::mixture_kl_1d({0.2, 0.5, 0.3}, {-1, 0.1, 1.2}, {0.4, 0.6}, {-0.6, 0.9}, 0.15);
  EXPECT_NEAR(mixture_kl(a, b).value, ref, 1e-8);
}

TEST(MixtureKl, TwoDimensionalDecouplesOnProductLaws) {
  // same first coordinate, shifted second: KL = shift^2 / 2v
  MixtureLaw a, b;
  a.weights = b.weights = Eigen::VectorXd::Ones(1);
  a.means = Eigen::MatrixXd{{0.0}, {0.0}};
  b.means = Eigen::MatrixXd{{0.0}, {0.5}};
  a.variance = b.variance = 0.25;
  EXPECT_NEAR(mixture_kl(a, b).value, 0.25 / 0.5, 1e-10);
}

TEST(MixtureKl, UnequalVariancesRejected) {
  EXPECT_THROW(mixture_kl(mix1({1}, {0}, 0.1), mix1({1}, {0}, 0.2)), DomainError);
}

TEST(BridgeLaws, EndpointsAreMarginals) {
  const Plan p = frozen_plan();
  const auto l0 = forward_law(p, 0.0), lT = forward_law(p, p.T);
  EXPECT_EQ(l0.variance, 0.0);
  EXPECT_EQ(lT.variance, 0.0);
  for (double z : {-0.9, 0.0, 0.8}) {
    double want0 = 0, wantT = 0;
    for (int i = 0; i < 3; ++i) want0 += p.x(0, i) <= z ? p.row_marginal[i] : 0.0;
    for (int j = 0; j < 3; ++j) wantT += p.y(0, j) <= z ? p.col_marginal[j] : 0.0;
    EXPECT_NEAR(mixture_cdf(l0, z), want0, 1e-12);
    EXPECT_NEAR(mixture_cdf(lT, z), wantT, 1e-12);
  }
}

TEST(BridgeLaws, BackwardIsForwardAtReflectedTime) {
  const Plan p = frozen_plan();
  const auto f = forward_law(p, 0.7 * 0.3), b = backward_law(p, 0.7 * 0.7);
  for (double z : {-1.0, 0.0, 0.6}) EXPECT_NEAR(mixture_cdf(f, z), mixture_cdf(b, z), 1e-14);
}

TEST(BridgeLaws, VarianceOfBrownianBridge) {
  const Plan p = frozen_plan();
  const double t = 0.25;
  EXPECT_NEAR(forward_law(p, t).variance, t * (p.T - t) / p.T, 1e-15);
}

TEST(BridgeLaws, ConditionalForwardStartsAtAtom) {
  const Plan p = frozen_plan();
  const auto c = conditional_forward_law(p, 1, 1e-9);
  EXPECT_NEAR(c.means.row(0).dot(c.weights), p.x(0, 1), 1e-8);
  EXPECT_NEAR(c.weights.sum(), 1.0, 1e-14);
}

TEST(Stats, KolmogorovCriticalInvertsPvalue) {
  for (double a : {0.01, 0.05}) EXPECT_NEAR(kolmogorov_pvalue(ks_critical(a, 500), 500), a, 1e-8);
}

TEST(Stats, LineFitOnExactLine) {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
}

TEST(Stats, NnlsClampsNegativeCoefficient) {
  // y = 2 a - b: the constrained optimum drops b
  const std::vector<double> a{1, 2, 3}, b{1, 1, 1};
  std::vector<double> y(3);
  for (int k = 0; k < 3; ++k) y[k] = 2 * a[k] - b[k];
  const auto c = nnls({a, b}, y);
  EXPECT_GE(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
}

TEST(Stats, ChiSquareUpperTail) {
  EXPECT_NEAR(chi_square_pvalue(2.0, 2.0), std::exp(-1.0), 1e-12);
}
