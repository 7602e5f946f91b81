#include <gtest/gtest.h>

#include <cmath>

#include "entlab/assignment.hpp"
#include "entlab/errors.hpp"
#include "entlab/measures.hpp"
#include "entlab/rng.hpp"
#include "oracles.hpp"

using namespace entlab;

TEST(DiscreteMeasure, RejectsNegativeWeights) {
  EXPECT_THROW(oracle::measure_1d({0, 1}, {1.2, -0.2}), InvalidArgument);
}

TEST(DiscreteMeasure, RejectsWeightsNotSummingToOne) {
  EXPECT_THROW(oracle::measure_1d({0, 1}, {0.5, 0.4}), InvalidArgument);
}

TEST(DiscreteMeasure, RejectsDuplicateAtoms) {
  EXPECT_THROW(oracle::measure_1d({0.3, 0.3}, {0.5, 0.5}), InvalidArgument);
}

TEST(DiscreteMeasure, MeanOfUniformMeasure) {
  const auto m = DiscreteMeasure::uniform(Eigen::MatrixXd{{0.0, 1.0, 2.0}});
  EXPECT_NEAR(m.mean()[0], 1.0, 1e-15);
}

TEST(Wasserstein, DiracToDiracIsDistance) {
  const auto a = DiscreteMeasure::dirac(Eigen::VectorXd::Constant(1, 0.0));
  const auto b = DiscreteMeasure::dirac(Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(wasserstein2(a, b), 3.0, 1e-14);
}

TEST(Wasserstein, UniformThreeAtomsKnownValue) {
  // unif{0,1,2} vs unif{0,1,3}: only the last atom moves by 1
  const auto a = oracle::measure_1d({0, 1, 2}, {1. / 3, 1. / 3, 1. / 3});
  const auto b = oracle::measure_1d({0, 1, 3}, {1. / 3, 1. / 3, 1. / 3});
  EXPECT_NEAR(wasserstein2(a, b), std::sqrt(1.0 / 3.0), 1e-14);
}

TEST(Wasserstein, QuantileCouplingMatchesBruteForce) {
  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(6), y(6), w(6, 1.0 / 6);
    for (int i = 0; i < 6; ++i) x[i] = 4 * rng.uniform() - 2, y[i] = 4 * rng.uniform() - 2;
    const double brute = oracle::brute_w2_sq_uniform(x, y);
    EXPECT_NEAR(std::pow(wasserstein2(oracle::measure_1d(x, w), oracle::measure_1d(y, w)), 2), brute, 1e-12);
  }
}

TEST(Wasserstein, TwoDimensionalLatticeAgainstPermutations) {
  // 4 equal-weight atoms in R^2; brute force over all 24 matchings
  Eigen::MatrixXd x{{0, 1, 0, 1}, {0, 0, 1, 1}};
  Eigen::MatrixXd y{{0.5, 2, -1, 0.3}, {0.1, 0.4, 1.5, 2}};
  std::vector<int> perm{0, 1, 2, 3};
  double best = 1e300;
  do {
    double c = 0;
    for (int i = 0; i < 4; ++i) c += (x.col(i) - y.col(perm[i])).squaredNorm();
    best = std::min(best, c / 4);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double w = wasserstein2(DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y));
  EXPECT_NEAR(w * w, best, 1e-12);
}

TEST(Wasserstein, TwoDimensionalIrrationalWeightsUnsupported) {
  Eigen::MatrixXd x{{0, 1}, {0, 0}};
  Eigen::VectorXd w(2);
  w << 1 / std::sqrt(2.0), 1 - 1 / std::sqrt(2.0);
  const DiscreteMeasure a(x, w);
  EXPECT_THROW(wasserstein2(a, DiscreteMeasure::uniform(x)), UnsupportedInstance);
}

TEST(Assignment, HungarianMatchesPermutationSearch) {
  CounterRng rng(17);
  Eigen::MatrixXd c(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) c(i, j) = rng.uniform();
  std::vector<int> perm{0, 1, 2, 3, 4};
  double best = 1e300;
  do {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_NEAR(solve_assignment(c).cost, best, 1e-14);
}

TEST(RelativeEntropy, KnownTwoPointValue) {
  const auto a = oracle::measure_1d({0, 1}, {0.5, 0.5});
  const auto b = oracle::measure_1d({0, 1}, {0.25, 0.75});
  EXPECT_NEAR(relative_entropy(a, b), 0.14384103622589046, 1e-15);
}

TEST(RelativeEntropy, InfiniteWhenSupportEscapes) {
  const auto a = oracle::measure_1d({0, 1}, {0.5, 0.5});
  const auto b = oracle::measure_1d({0, 1}, {1.0, 0.0});
  EXPECT_TRUE(std::isinf(relative_entropy(a, b)));
}

TEST(RelativeEntropy, AtomMismatchThrows) {
  const auto a = oracle::measure_1d({0, 1}, {0.5, 0.5});
  const auto b = oracle::measure_1d({0, 2}, {0.5, 0.5});
  EXPECT_THROW(relative_entropy(a, b), AtomMismatch);
}

TEST(RelativeEntropy, InvariantUnderAtomReordering) {
  const auto a = oracle::measure_1d({0, 1, 2}, {0.2, 0.3, 0.5});
  const auto b = oracle::measure_1d({2, 0, 1}, {0.4, 0.4, 0.2});
  EXPECT_NEAR(relative_entropy(a, b), oracle::kl({0.2, 0.3, 0.5}, {0.4, 0.2, 0.4}), 1e-15);
}

TEST(SupportRadius, RecenteringShiftsToZeroMean) {
  const auto m = oracle::measure_1d({1, 3}, {0.5, 0.5});
  const auto rc = recenter(m);
  EXPECT_NEAR(rc.measure.mean()[0], 0.0, 1e-15);
  EXPECT_NEAR(rc.shift[0], 2.0, 1e-15);
  EXPECT_NEAR(support_radius(rc.measure).radius, 1.0, 1e-15);
}

TEST(Gaussian, OneDimensionalW2AndKL) {
  const GaussianMeasure a(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const GaussianMeasure b(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0));
  EXPECT_NEAR(gaussian_w2(a, b), std::sqrt(1.0 + 1.0), 1e-14);
  // 0.5 (tr + m^2/s2 - 1 + log 4)
  EXPECT_NEAR(gaussian_relative_entropy(a, b), 0.5 * (0.25 + 0.25 - 1 + std::log(4.0)), 1e-14);
  EXPECT_NEAR(b.alpha(), 0.25, 1e-15);
}

TEST(Talagrand, GaussianSatisfiesWithInverseAlpha) {
  const GaussianMeasure g(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const GaussianMeasure h(Eigen::VectorXd::Constant(1, 0.7), Eigen::MatrixXd::Constant(1, 1, 0.5));
  const double w = gaussian_w2(h, g);
  EXPECT_LE(w * w, 2.0 / g.alpha() * gaussian_relative_entropy(h, g));
}

TEST(Sampling, EmpiricalMeanAndDeterminism) {
  const auto m = oracle::measure_1d({-1, 2}, {0.25, 0.75});
  CounterRng r1(3), r2(3);
  const Eigen::MatrixXd a = sample(m, 40000, r1), b = sample(m, 40000, r2);
  EXPECT_TRUE(a.isApprox(b, 0));
  EXPECT_NEAR(a.mean(), 1.25, 0.03);
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(9, 4), b(9, 4), c(9, 5);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

TEST(CounterRng, NormalMoments) {
  CounterRng r(123);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z, s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(MeasureJson, RoundTrip) {
  const auto m = oracle::measure_1d({-1, 0.5, 2}, {0.2, 0.5, 0.3});
  const auto back = discrete_from_json(to_json(m));
  EXPECT_TRUE(back.atoms.isApprox(m.atoms, 0));
  EXPECT_TRUE(back.weights.isApprox(m.weights, 0));
}
