#include <gtest/gtest.h>

#include <cmath>

#include "entlab/convergence.hpp"
#include "entlab/potentials.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

EotProblem compact_problem() {
  return EotProblem(oracle::measure_1d({-1.0, -0.6, -0.1, 0.3, 0.8, 1.0}, {0.1, 0.2, 0.2, 0.2, 0.2, 0.1}),
                    oracle::measure_1d({-0.9, -0.2, 0.4, 0.95}, {0.25, 0.25, 0.3, 0.2}), 0.1);
}

}  // namespace

TEST(PredictedContraction, KnownValues) {
  EXPECT_NEAR(predicted_contraction(1.0, 0.25, 4.0), 0.5, 1e-15);
  EXPECT_NEAR(predicted_contraction(1.0, 2.0, 4.0), 8.0 / 9.0, 1e-15);
  EXPECT_THROW(predicted_contraction(1.0, 0.0, 4.0), InvalidArgument);
}

TEST(FitSeries, RecoversExactGeometricRate) {
  std::vector<double> n, kl, g, h;
  for (int k = 0; k < 20; ++k) {
    n.push_back(k);
    kl.push_back(3.0 * std::pow(0.7, k));
    g.push_back(0.5 * std::pow(0.7, k));
    h.push_back(2.0 * std::pow(0.7, 0.5 * k) + 0.1 * std::pow(0.7, k));
  }
  const auto v = fit_series(n, kl, g, h, 0.8);
  EXPECT_NEAR(v.c_hat, 0.7, 1e-12);
  EXPECT_NEAR(v.kl_r2, 1.0, 1e-12);
  EXPECT_NEAR(v.grad_prefactor, 0.5, 1e-10);
  EXPECT_NEAR(v.hess_c1, 2.0, 1e-8);
  EXPECT_NEAR(v.hess_c2, 0.1, 1e-8);
  EXPECT_TRUE(v.pass());
}

TEST(FitSeries, RateAbovePredictionFails) {
  std::vector<double> n, kl;
  for (int k = 0; k < 10; ++k) n.push_back(k), kl.push_back(std::pow(0.9, k));
  const auto v = fit_series(n, kl, kl, kl, 0.5);
  EXPECT_FALSE(v.rate_ok);
  EXPECT_FALSE(v.pass());
}

TEST(FitSeries, FewerThanEightPointsIsInsufficient) {
  std::vector<double> n{0, 1, 2, 3, 4, 5, 6}, y{1, .5, .25, .125, .0625, .03, .015};
  EXPECT_THROW(fit_series(n, y, y, y, 0.9), InsufficientData);
}

TEST(Convergence, CompactInstanceFitsWell) {
  const auto run = run_convergence(compact_problem());
  ASSERT_GE(run.records.size(), 10u);
  EXPECT_TRUE(run.kl_monotone);
  const auto v = fit_and_compare(run, run.tau_hat, run.Lambda);
  EXPECT_GE(v.kl_r2, 0.99);
  EXPECT_GE(v.grad_r2, 0.99);
  EXPECT_GE(v.hess_r2, 0.98);
  EXPECT_TRUE(v.rate_ok) << v.c_hat << " vs " << v.predicted;
}

TEST(Convergence, TableHasOneRowPerIterate) {
  ConvergenceOptions o;
  o.n_max = 12;
  const auto run = run_convergence(compact_problem(), o);
  EXPECT_EQ(convergence_table(run).rows(), run.records.size());
  EXPECT_LE(run.records.size(), 13u);  // n = 0 .. n_max
}

TEST(Convergence, FastInstanceIsInsufficientData) {
  // well-mixed problem: Sinkhorn hits the floor in a handful of steps
  const auto u = oracle::measure_1d({-0.1, 0.1}, {0.5, 0.5});
  const auto run = run_convergence(EotProblem(u, oracle::measure_1d({-0.05, 0.05}, {0.4, 0.6}), 4.0));
  EXPECT_THROW(fit_and_compare(run, 1.0, run.Lambda), InsufficientData);
}

TEST(Convergence, VerdictJsonCarriesPass) {
  std::vector<double> n, kl;
  for (int k = 0; k < 10; ++k) n.push_back(k), kl.push_back(std::pow(0.5, k));
  const auto j = to_json(fit_series(n, kl, kl, kl, 0.6));
  EXPECT_TRUE(j.at("pass").is_boolean());
}

TEST(FitSeries, SyntheticRatioPointEight) {
  std::vector<double> n, kl;
  for (int k = 2; k < 30; ++k) n.push_back(k), kl.push_back(0.3 * std::pow(0.8, k));
  EXPECT_NEAR(fit_series(n, kl, kl, kl, 0.9).c_hat, 0.8, 1e-6);
}

TEST(Convergence, TauHatBoundsEveryPostBurnInIterate) {
  const auto run = run_convergence(compact_problem());
  for (const auto& r : run.records) {
    if (r.n < run.burn_in || r.plan_kl < 1e-13 || !(r.marginal_kl > 0)) continue;
    EXPECT_LE(r.w2_wrong * r.w2_wrong, 2 * run.tau_hat * r.marginal_kl * (1 + 1e-12));
  }
}

TEST(Convergence, GradientErrorIsStabilityLhsForWrongMarginal) {
  // the iterate potential is the entropic potential of (rho, wrong marginal)
  const auto p = compact_problem();
  ConvergenceOptions o;
  o.n_max = 6;
  const auto run = run_convergence(p, o);
  SinkhornOptions so;
  so.tol = 1e-300;
  so.max_iter = 6;
  so.record_duals = true;
  SinkhornTrace tr;
  try {
    tr = sinkhorn_solve(p, so).trace;
  } catch (const NotConverged& e) {
    tr = e.trace();
  }
  const int n = 4;
  const auto wm = p.mu.with_weights(tr.wrong_marginal[n]);
  const auto a = solve(p.rho, wm, p.T, 1e-13), b = solve(p.rho, p.mu, p.T, 1e-13);
  const auto pa = InterpolatedPotential::forward(a.problem, a.duals), pb = InterpolatedPotential::forward(b.problem, b.duals);
  const double g = grad_diff_l2(p.rho, pa, pb, 0.0);
  EXPECT_NEAR(g * g, run.records[n].grad_err_sq, 1e-10 * (1 + g * g));
}

TEST(Convergence, EightAtomCompactInstanceAtUnitHorizonPasses) {
  Eigen::MatrixXd x(1, 8), y(1, 8);
  Eigen::VectorXd b(8);
  for (int i = 0; i < 8; ++i) {
    x(0, i) = 2.0 * (-1 + 2.0 * i / 7);
    y(0, i) = 2.0 * (-1 + 2.0 * (i + 0.4) / 7.4);
    b[i] = 1 + 0.5 * std::cos(i);
  }
  const EotProblem p(DiscreteMeasure(x, Eigen::VectorXd::Constant(8, 1.0 / 8)), DiscreteMeasure(y, b / b.sum()), 1.0);
  const auto run = run_convergence(p);
  const auto v = fit_and_compare(run, run.tau_hat, run.Lambda);
  EXPECT_TRUE(v.pass()) << to_json(v).dump();
}
