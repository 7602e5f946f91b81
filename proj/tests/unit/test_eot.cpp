#include <gtest/gtest.h>

#include <cmath>

#include "entlab/eot.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

EotProblem three_by_three() {
  return EotProblem(oracle::measure_1d({-1, 0.2, 1.5}, {0.2, 0.5, 0.3}),
                    oracle::measure_1d({-0.5, 0.7, 1.1}, {0.4, 0.35, 0.25}), 0.7);
}

}  // namespace

TEST(Sinkhorn, TwoPointSymmetricPlanKnownValue) {
  const auto u = oracle::measure_1d({-1, 1}, {0.5, 0.5});
  const auto sol = solve(u, u, 1.0);
  // p / (1/2 - p) = e^2 on the diagonal, diagonal mass 2p
  EXPECT_NEAR(sol.plan.weights(0, 0), 0.44039853898894122, 1e-12);
  EXPECT_NEAR(sol.plan.weights(0, 1), 0.5 - 0.44039853898894122, 1e-12);
}

TEST(Sinkhorn, ThreeByThreeFrozenPlan) {
  const double want[3][3] = {{0.17430294185732828, 0.020451298011385416, 0.0052457601312863047},
                             {0.2096101525670116, 0.19241293556558249, 0.097976911867405909},
                             {0.01608690557566012, 0.13713576642303209, 0.14677732800130779}};
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(sol.plan.weights(i, j), want[i][j], 1e-12);
}

TEST(Sinkhorn, AgreesWithScalingFormOracle) {
  const auto p = three_by_three();
  const auto ref = oracle::sinkhorn_plan({-1, 0.2, 1.5}, {0.2, 0.5, 0.3}, {-0.5, 0.7, 1.1}, {0.4, 0.35, 0.25}, 0.7);
  const auto sol = solve(p.rho, p.mu, p.T);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(sol.plan.weights(i, j), ref[i][j], 2e-12);
}

TEST(Sinkhorn, MarginalsAndSchrodingerResidual) {
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  EXPECT_LT((sol.plan.weights.rowwise().sum() - p.rho.weights).lpNorm<1>(), 1e-11);
  EXPECT_LT((sol.plan.weights.colwise().sum().transpose() - p.mu.weights).lpNorm<1>(), 1e-11);
  EXPECT_LT(schrodinger_residual(p, sol.duals), 1e-10);
}

TEST(Sinkhorn, GaugeCentersSecondDual) {
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  EXPECT_EQ(sol.duals.gauge, kGaugeTag);
  EXPECT_NEAR(sol.duals.log_g.dot(p.mu.weights), 0.0, 1e-13);
}

TEST(Sinkhorn, ResidualTraceIsNonIncreasingOnSmallInstance) {
  const auto p = three_by_three();
  SinkhornOptions o;
  o.tol = 1e-13;
  const auto r = sinkhorn_solve(p, o);
  ASSERT_GT(r.trace.residual.size(), 3u);
  for (std::size_t k = 1; k < r.trace.residual.size(); ++k)
    EXPECT_LE(r.trace.residual[k], r.trace.residual[k - 1] * (1 + 1e-9) + 1e-15);
}

TEST(Sinkhorn, NotConvergedCarriesTrace) {
  const auto p = three_by_three();
  SinkhornOptions o;
  o.tol = 1e-300;
  o.max_iter = 5;
  try {
    sinkhorn_solve(p, o);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_EQ(e.exit_code(), 3);
    EXPECT_EQ(e.trace().iterations, 5);
    EXPECT_GE(e.trace().residual.size(), 5u);
    EXPECT_FALSE(e.trace().converged);
  }
}

TEST(Sinkhorn, RecordedDualsOnePerRhoFit) {
  const auto p = three_by_three();
  SinkhornOptions o;
  o.record_duals = true;
  const auto r = sinkhorn_solve(p, o);
  EXPECT_EQ(r.trace.duals.size(), r.trace.residual.size());
  EXPECT_EQ(r.trace.wrong_marginal.size(), r.trace.residual.size());
}

TEST(Sinkhorn, WallTimeZeroUnlessRequested) {
  const auto p = three_by_three();
  const auto r = sinkhorn_solve(p, {});
  for (auto ns : r.trace.wall_ns) EXPECT_EQ(ns, 0);
}

TEST(Plan, EntropyOfPlanAgainstItselfIsZero) {
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  EXPECT_NEAR(plan_relative_entropy(sol.plan, sol.plan), 0.0, 1e-15);
  EXPECT_NEAR(conditional_entropy_term(sol.plan, sol.plan), 0.0, 1e-15);
}

TEST(Plan, ObjectiveBelowIndependentCoupling) {
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  Plan indep = sol.plan;
  indep.weights = p.rho.weights * p.mu.weights.transpose();
  EXPECT_LT(eot_objective(sol.plan, p), eot_objective(indep, p));
}

TEST(Plan, WrongMarginalOfSolvedPlanIsMu) {
  const auto p = three_by_three();
  const auto sol = solve(p.rho, p.mu, p.T);
  const auto m = wrong_marginal(sol.plan, Side::Second);
  EXPECT_LT((m.weights - p.mu.weights).lpNorm<1>(), 1e-11);
}

TEST(EotProblem, RejectsNonPositiveHorizon) {
  const auto u = oracle::measure_1d({-1, 1}, {0.5, 0.5});
  EXPECT_THROW(EotProblem(u, u, 0.0), InvalidArgument);
  EXPECT_THROW(EotProblem(u, u, -1.0), InvalidArgument);
}

TEST(EotProblem, RejectsDimensionMismatch) {
  const auto u = oracle::measure_1d({-1, 1}, {0.5, 0.5});
  const auto v = DiscreteMeasure::uniform(Eigen::MatrixXd{{0, 1}, {0, 1}});
  EXPECT_THROW(EotProblem(u, v, 1.0), InvalidArgument);
}
