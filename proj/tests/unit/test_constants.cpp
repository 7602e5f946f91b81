#include <gtest/gtest.h>

#include <cmath>

#include "entlab/constants.hpp"
#include "entlab/gaussian_oracle.hpp"

using namespace entlab;

TEST(CompactFamily, WorkedExampleRadiusTwoHorizonOne) {
  const auto r = make_report(FamilySpec::compact(2.0, 1.0));
  EXPECT_DOUBLE_EQ(r.Lambda_phi0, 4.0);
  EXPECT_DOUBLE_EQ(r.Lambda_psi0, 4.0);
  EXPECT_NEAR(r.C_phi, 8.0, 1e-12);
  EXPECT_NEAR(r.delta.delta, 0.2, 1e-15);
  EXPECT_NEAR(r.delta.delta_p, 0.1, 1e-15);
  EXPECT_NEAR(r.delta.ratio, 0.25, 1e-15);
  EXPECT_NEAR(r.C_delta_psi_printed, 12.654, 2e-3);
  EXPECT_NEAR(r.C_delta_psi_printed, 12.655813654954611, 1e-12);
  EXPECT_NEAR(r.C_rho_nu_printed, 298.2, 0.05);
  EXPECT_NEAR(r.lambda_bar, 4.0 / 0.81 - 1.0 / 0.9, 1e-12);
  EXPECT_NEAR(r.lambda_bar, 3.8272, 1e-4);
  EXPECT_TRUE(r.regime_ok);
}

TEST(CompactFamily, GammaFormsForRadiusSquaredFourT) {
  const auto r = make_report(FamilySpec::compact(2.0, 1.0), 1);
  EXPECT_NEAR(r.gamma_bound, 1.25, 1e-15);
  EXPECT_NEAR(r.gamma_simplified, 2.0, 1e-15);
  // the two-sided form also covers the negative end of the spectrum
  EXPECT_GE(r.gamma_two_sided, r.lambda_bar);
}

TEST(CompactFamily, ExactDeltaConstantBelowPrintedForm) {
  for (double R : {1.0, 2.0, 3.0})
    for (double T : {0.5, 1.0}) {
      const auto r = make_report(FamilySpec::compact(R, T));
      EXPECT_LE(r.C_delta_psi, r.C_delta_psi_printed * (1 + 1e-12));
      EXPECT_LE(r.C_deltap_delta_psi, r.C_deltap_delta_psi_upper * (1 + 1e-12));
      EXPECT_LE(r.lambda_bar, r.lambda_bar_upper);
      EXPECT_LE(r.sup_int.quadrature, r.sup_int.bound * (1 + 1e-10));
    }
}

TEST(LogConcaveFamily, WorkedExampleAlphaHalfHorizonOne) {
  const auto r = make_report(FamilySpec::logconcave(0.5, 1.0));
  EXPECT_NEAR(r.Lambda_phi0, 2.0, 1e-15);
  EXPECT_NEAR(r.C_phi, 2.0, 1e-12);
  EXPECT_NEAR(r.C_deltap_delta_psi_printed, 16.0 * 1.5 / 3.5, 1e-12);
  EXPECT_NEAR(r.C_deltap_delta_psi_printed, 6.857, 1e-3);
  EXPECT_NEAR(r.gamma_simplified, 1.5, 1e-15);
  EXPECT_NEAR(r.lambda_bar, 1.0, 1e-14);
  EXPECT_NEAR(r.sup_int.envelope, 4.0, 1e-14);
  EXPECT_LE(r.sup_int.quadrature, r.sup_int.bound * (1 + 1e-10));
}

TEST(LogConcaveFamily, CurvatureAtTimeZero) {
  EXPECT_NEAR(backprop_curvature(0.5, 1.0, 0.0), 1.0 / 3.0, 1e-15);
}

TEST(LogConcaveFamily, RejectsAlphaAtOrAboveInverseHorizon) {
  EXPECT_THROW(FamilySpec::logconcave(1.0, 1.0), InvalidArgument);
  EXPECT_THROW(FamilySpec::logconcave(0.0, 1.0), InvalidArgument);
}

TEST(ClosedForms, AgreeWithQuadratureOnAllTabulatedFamilies) {
  const FamilySpec fams[] = {FamilySpec::compact(2, 1), FamilySpec::compact(3, 0.5), FamilySpec::compact(2, 2),
                             FamilySpec::logconcave(0.5, 1), FamilySpec::logconcave(0.25, 2)};
  for (const auto& f : fams) {
    const auto r = make_report(f);
    EXPECT_NEAR(r.C_phi_quadrature / r.C_phi, 1.0, 1e-10) << f.name();
    EXPECT_NEAR(r.I_delta_quadrature / r.I_delta, 1.0, 1e-10) << f.name();
    EXPECT_NEAR(r.I_deltap_delta_quadrature / r.I_deltap_delta, 1.0, 1e-10) << f.name();
  }
}

TEST(Schedule, LogGrowthMatchesIntegratedSchedule) {
  const FamilySpec f = FamilySpec::compact(1.5, 1.0);
  const LambdaSchedule lam(f);
  // trapezoid on a fine grid
  const double l = 0.1, s = 0.6;
  const int n = 20000;
  double acc = 0;
  for (int k = 0; k <= n; ++k) acc += (k == 0 || k == n ? 1.0 : 2.0) * lam(l + (s - l) * k / n);
  EXPECT_NEAR(lam.log_growth(l, s), acc * (s - l) / (2.0 * n) * 2.0, 1e-6);
}

TEST(Schedule, OutsideHorizonIsDomainError) {
  const LambdaSchedule lam(FamilySpec::compact(1.0, 1.0));
  EXPECT_THROW(lam(1.0), DomainError);
  EXPECT_THROW(lam(-0.1), DomainError);
}

TEST(Semiconcavity, TerminalCurvatureForm) {
  EXPECT_NEAR(semiconcavity_from_curvature(1.0, 1.0), 0.5, 1e-15);
  EXPECT_THROW(semiconcavity_from_curvature(-1.0, 1.0), DomainError);
}

TEST(ChooseDelta, RatiosFollowFromLambda) {
  const auto c = choose_delta(3.0);
  EXPECT_NEAR(c.ratio, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(c.ratio_p, 1.0 / 7.0, 1e-15);
  EXPECT_THROW(choose_delta(0.0), InvalidArgument);
}

TEST(Envelopes, TableEntriesForBothFamilies) {
  const auto c = make_report(FamilySpec::compact(2.0, 0.5), 2);
  EXPECT_DOUBLE_EQ(c.env.Lambda_phi0, 8.0);
  EXPECT_DOUBLE_EQ(c.env.C_deltap_delta, 64.0);
  EXPECT_DOUBLE_EQ(c.env.gamma, std::sqrt(2.0) / 0.5);
  EXPECT_DOUBLE_EQ(c.env.sup_integral, 0.25);
  EXPECT_DOUBLE_EQ(c.env.lambda_bar, 16.0);
  const auto l = make_report(FamilySpec::logconcave(0.25, 2.0));
  EXPECT_DOUBLE_EQ(l.env.Lambda_phi0, 2.0);
  EXPECT_DOUBLE_EQ(l.env.C_phi, 2.0);
}

TEST(Report, JsonCarriesFamilyAndRoundTripsSpec) {
  const auto f = FamilySpec::compact(2.0, 1.0);
  const auto back = family_from_json(to_json(f));
  EXPECT_EQ(back.kind, f.kind);
  EXPECT_EQ(back.param, f.param);
  const auto j = to_json(make_report(f));
  EXPECT_TRUE(j.contains("C_phi"));
  EXPECT_FALSE(table_report(make_report(f)).empty());
}

TEST(Report, MismatchedHorizonsRejected) {
  EXPECT_THROW(make_report(FamilySpec::compact(1, 1), FamilySpec::compact(1, 2), 1), InvalidArgument);
}
