#include <gtest/gtest.h>

#include <cmath>

#include "entlab/gaussian_oracle.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

GaussianMeasure g1(double m, double v) {
  return GaussianMeasure(Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, v));
}

}  // namespace

TEST(GaussianOracle, UnitVarianceCrossCovarianceIsGoldenRatioConjugate) {
  const auto s = solve_gaussian(g1(0, 1), g1(0, 1), 1.0);
  EXPECT_NEAR(s.c, 0.61803398874989485, 1e-13);
}

TEST(GaussianOracle, CrossCovarianceMatchesClosedForm) {
  for (double vr : {0.5, 1.0, 3.0})
    for (double vn : {0.25, 2.0})
      for (double T : {0.1, 1.0, 4.0}) {
        const auto s = solve_gaussian(g1(0.3, vr), g1(-0.2, vn), T);
        EXPECT_NEAR(s.c, oracle::gaussian_cross_cov(vr, vn, T), 1e-12);
        EXPECT_LT(s.residual, 1e-12);
      }
}

TEST(GaussianOracle, PlanMarginalsFromTerminalPotentials) {
  // joint precision [[p_phi + 1/T, -1/T], [-1/T, p_psi + 1/T]] inverts to the plan covariance
  const auto s = solve_gaussian(g1(0.3, 1.0), g1(-0.2, 0.5), 0.7);
  const double a = s.p_phi + 1 / s.T, b = s.p_psi + 1 / s.T, c = -1 / s.T;
  const double det = a * b - c * c;
  EXPECT_NEAR(b / det, s.var_rho, 1e-12);
  EXPECT_NEAR(a / det, s.var_nu, 1e-12);
  EXPECT_NEAR(-c / det, s.c, 1e-12);
}

TEST(GaussianOracle, InterpolatedCurvatureFollowsBackpropagation) {
  const auto s = solve_gaussian(g1(0, 2.0), g1(0, 0.5), 1.5);
  for (int k = 0; k < 20; ++k) {
    const double t = 1.5 * k / 20.0;
    EXPECT_NEAR(interpolated(s, PotentialSide::Forward, t).curvature, backprop_curvature(s.p_psi, 1.5, t), 1e-12);
    EXPECT_NEAR(interpolated(s, PotentialSide::Backward, t).curvature, backprop_curvature(s.p_phi, 1.5, t), 1e-12);
  }
}

TEST(GaussianOracle, BackpropCurvatureAtZeroTerminal) {
  EXPECT_EQ(backprop_curvature(0.0, 1.0, 0.3), 0.0);
  EXPECT_NEAR(backprop_curvature(2.0, 1.0, 0.0), 1.0 / (0.5 + 1.0), 1e-15);
}

TEST(GaussianOracle, DiscretizationHasRightMoments) {
  const auto d = discretize_gaussian(g1(0.5, 2.0), 256, 8.0);
  EXPECT_NEAR(d.mean()[0], 0.5, 1e-12);
  double v = 0;
  for (int i = 0; i < d.size(); ++i) v += d.weights[i] * std::pow(d.atoms(0, i) - 0.5, 2);
  // conditional means lose the within-bin variance
  EXPECT_LT(v, 2.0);
  EXPECT_GT(v, 1.98);
}

TEST(GaussianOracle, DiscretizationErrorShrinks) {
  const auto s = solve_gaussian(g1(0.3, 1.0), g1(-0.2, 0.5), 1.0);
  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    const auto r = crosscheck_discretization(s, n);
    EXPECT_LT(r.error, prev);
    prev = r.error;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(GaussianOracle, RejectsMultivariateInput) {
  GaussianMeasure m(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(solve_gaussian(m, m, 1.0), UnsupportedInstance);
}

TEST(GaussianOracle, TooFewAtomsRejected) {
  const auto s = solve_gaussian(g1(0, 1), g1(0, 1), 1.0);
  EXPECT_THROW(crosscheck_discretization(s, 8), InvalidArgument);
}
