// Randomized invariants. Each generator is a plain function of a CounterRng so
// failures reproduce from the printed seed.
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "entlab/constants.hpp"
#include "entlab/csv.hpp"
#include "entlab/gaussian_oracle.hpp"
#include "entlab/mixture.hpp"
#include "entlab/potentials.hpp"
#include "entlab/stability.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

constexpr int kCases = 40;

std::vector<double> atoms_of(const DiscreteMeasure& m) {
  return std::vector<double>(m.atoms.data(), m.atoms.data() + m.size());
}
std::vector<double> weights_of(const DiscreteMeasure& m) {
  return std::vector<double>(m.weights.data(), m.weights.data() + m.size());
}

EotProblem random_problem(CounterRng& rng) {
  const int n = 2 + static_cast<int>(rng() % 6), m = 2 + static_cast<int>(rng() % 6);
  const double T = 0.2 + 2.0 * rng.uniform();
  return EotProblem(oracle::random_measure_1d(rng, n, 2.0), oracle::random_measure_1d(rng, m, 2.0), T);
}

FamilySpec random_family(CounterRng& rng) {
  const double T = 0.25 + 3.75 * rng.uniform();
  if (rng.uniform() < 0.5) return FamilySpec::compact(std::sqrt(T) * (1.0 + 2.0 * rng.uniform()), T);
  return FamilySpec::logconcave((0.05 + 0.9 * rng.uniform()) / T, T);
}

}  // namespace

TEST(Property, SinkhornMatchesNaiveScalingAndMarginals) {
  CounterRng rng(101);
  for (int c = 0; c < kCases; ++c) {
    const auto p = random_problem(rng);
    const auto sol = solve(p.rho, p.mu, p.T);
    const auto ref = oracle::sinkhorn_plan(atoms_of(p.rho), weights_of(p.rho), atoms_of(p.mu), weights_of(p.mu), p.T,
                                           20000);
    for (int i = 0; i < p.rho.size(); ++i)
      for (int j = 0; j < p.mu.size(); ++j) ASSERT_NEAR(sol.plan.weights(i, j), ref[i][j], 1e-10) << "case " << c;
    EXPECT_LT((sol.plan.weights.rowwise().sum() - p.rho.weights).lpNorm<1>(), 1e-10);
  }
}

TEST(Property, W2IsAMetricOnTheLine) {
  CounterRng rng(202);
  for (int c = 0; c < kCases; ++c) {
    const auto a = oracle::random_measure_1d(rng, 5, 3.0), b = oracle::random_measure_1d(rng, 4, 3.0),
               d = oracle::random_measure_1d(rng, 6, 3.0);
    EXPECT_NEAR(wasserstein2(a, b), wasserstein2(b, a), 1e-13);
    EXPECT_LE(wasserstein2(a, d), wasserstein2(a, b) + wasserstein2(b, d) + 1e-12);
    EXPECT_NEAR(wasserstein2(a, a), 0.0, 1e-14);
  }
}

TEST(Property, RelativeEntropyNonNegativeAndMatchesOracle) {
  CounterRng rng(303);
  for (int c = 0; c < kCases; ++c) {
    const auto a = oracle::random_measure_1d(rng, 5, 1.0);
    Eigen::VectorXd w(5);
    for (int i = 0; i < 5; ++i) w[i] = 0.1 + rng.uniform();
    const auto b = a.with_weights(w / w.sum());
    const double h = relative_entropy(b, a);
    EXPECT_GE(h, 0.0);
    EXPECT_NEAR(h, oracle::kl(weights_of(b), weights_of(a)), 1e-14);
  }
}

TEST(Property, PotentialDerivativesConsistentWithFiniteDifferences) {
  CounterRng rng(404);
  for (int c = 0; c < kCases; ++c) {
    const auto p = random_problem(rng);
    const auto sol = solve(p.rho, p.mu, p.T);
    const auto psi = InterpolatedPotential::forward(p, sol.duals);
    const double s = p.T * 0.9 * rng.uniform();
    const double z = 4 * rng.uniform() - 2;
    auto f = [&](double u) { return psi.value(s, Vec::Constant(1, u)); };
    auto g = [&](double u) { return psi.gradient(s, Vec::Constant(1, u))[0]; };
    const double step = 1e-3 * std::sqrt(p.T - s);
    const Vec zv = Vec::Constant(1, z);
    EXPECT_NEAR(oracle::central_diff5(f, z, step), psi.gradient(s, zv)[0], 1e-7 * (1 + std::abs(psi.gradient(s, zv)[0])));
    EXPECT_NEAR(oracle::central_diff5(g, z, step), psi.hessian(s, zv)(0, 0), 1e-6 * (1 + 1 / (p.T - s)));
    EXPECT_NEAR(psi.value(s, zv), oracle::mixture_potential(atoms_of(p.mu),
                                                            [&] {
                                                              std::vector<double> m(p.mu.size());
                                                              for (int j = 0; j < p.mu.size(); ++j)
                                                                m[j] = std::exp(psi.log_mass()[j]);
                                                              return m;
                                                            }(),
                                                            p.T - s, z),
                1e-11 * (1 + std::abs(psi.value(s, zv))));
  }
}

TEST(Property, HessianNeverExceedsInverseHorizon) {
  CounterRng rng(505);
  for (int c = 0; c < kCases; ++c) {
    const auto p = random_problem(rng);
    const auto sol = solve(p.rho, p.mu, p.T);
    const auto phi = InterpolatedPotential::backward(p, sol.duals);
    const double s = p.T * 0.95 * rng.uniform();
    const Vec z = Vec::Constant(1, 6 * rng.uniform() - 3);
    EXPECT_LE(phi.hessian(s, z)(0, 0), 1.0 / (p.T - s) * (1 + 1e-12));
  }
}

TEST(Property, MixtureKlNonNegativeAndBelowPlanEntropy) {
  // data processing: the time-t marginal cannot separate the plans more than the plans themselves
  CounterRng rng(606);
  for (int c = 0; c < 15; ++c) {
    const auto p = random_problem(rng);
    Eigen::VectorXd w(p.mu.size());
    for (int j = 0; j < w.size(); ++j) w[j] = 0.5 + rng.uniform();
    const auto nu = p.mu.with_weights(w / w.sum());
    const auto a = solve(p.rho, p.mu, p.T), b = solve(p.rho, nu, p.T);
    const double t = p.T * (0.1 + 0.8 * rng.uniform());
    const double k = mixture_kl(forward_law(a.plan, t), forward_law(b.plan, t)).value;
    EXPECT_GE(k, -1e-12);
    EXPECT_LE(k, plan_relative_entropy(a.plan, b.plan) + 1e-10);
  }
}

TEST(Property, GaussianCrossCovarianceClosedForm) {
  CounterRng rng(707);
  for (int c = 0; c < kCases; ++c) {
    const double vr = 0.1 + 3 * rng.uniform(), vn = 0.1 + 3 * rng.uniform(), T = 0.05 + 4 * rng.uniform();
    const auto s = solve_gaussian(GaussianMeasure(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, vr)),
                                  GaussianMeasure(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, vn)), T);
    EXPECT_NEAR(s.c, oracle::gaussian_cross_cov(vr, vn, T), 1e-11 * (1 + s.c));
  }
}

TEST(Property, IntegralClosedFormMatchesQuadrature) {
  CounterRng rng(808);
  for (int c = 0; c < kCases; ++c) {
    const auto f = random_family(rng);
    const double l = 0.6 * f.T * rng.uniform(), u = l + (f.T - l) * (0.05 + 0.9 * rng.uniform());
    EXPECT_NEAR(I_integral_quadrature(f, l, u) / I_integral(f, l, u), 1.0, 1e-10) << f.name();
  }
}

TEST(Property, ExactDeltaConstantsBelowPrintedBounds) {
  CounterRng rng(909);
  for (int c = 0; c < kCases; ++c) {
    const auto f = random_family(rng);
    const auto r = make_report(f);
    EXPECT_LE(r.C_delta_psi, r.C_delta_psi_printed * (1 + 1e-10)) << f.name();
    EXPECT_LE(r.C_deltap_delta_psi, r.C_deltap_delta_psi_upper * (1 + 1e-10)) << f.name();
    EXPECT_LE(r.sup_int.quadrature, r.sup_int.bound * (1 + 1e-9)) << f.name();
  }
}

TEST(Property, EntropicStabilityOnRandomWeightPerturbations) {
  CounterRng rng(1001);
  const StabilityOptions o;
  for (int c = 0; c < 10; ++c) {
    const auto p = random_problem(rng);
    Eigen::VectorXd w(p.mu.size());
    for (int j = 0; j < w.size(); ++j) w[j] = p.mu.weights[j] * (1 + 0.3 * (2 * rng.uniform() - 1));
    StabilityInstance inst{"prop" + std::to_string(c), p.rho, p.mu, p.mu.with_weights(w / w.sum()), p.T};
    const auto ctx = prepare(inst, o);
    for (const auto& r : {check_entropic(ctx, o), check_conditional(ctx, o), check_grad_eta(ctx, o)})
      EXPECT_TRUE(r.pass) << r.check << " case " << c << ": " << r.lhs << " > " << r.rhs;
  }
}

TEST(Property, CsvNumbersRoundTrip) {
  CounterRng rng(1111);
  for (int c = 0; c < 200; ++c) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng() % 200) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}
