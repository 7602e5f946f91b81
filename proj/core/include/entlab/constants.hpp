#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace entlab {

enum class FamilyKind { Compact, LogConcave };

// compact: param = R (support radius about the origin);
// logconcave: param = alpha (curvature lower bound of the negative log-density).
struct FamilySpec {
  FamilyKind kind = FamilyKind::Compact;
  double param = 1.0;
  double T = 1.0;

  static FamilySpec compact(double R, double T);
  static FamilySpec logconcave(double alpha, double T);
  void validate() const;
  // compact needs R^2 >= T for the large-radius asymptotics.
  bool regime_ok() const;
  std::string name() const;
};

// s -> lambda(s), a lower bound on the Hessian of the interpolated potential.
class LambdaSchedule {
 public:
  explicit LambdaSchedule(FamilySpec f);
  double operator()(double s) const;
  // int_l^s 2 lambda(t) dt in closed form.
  double log_growth(double l, double s) const;
  const FamilySpec& family() const { return f_; }
  // log-concave only: lambda(0) = (alpha - 1/T)/(alpha T).
  double lambda0() const;

 private:
  FamilySpec f_;
};

// Semiconcavity parameter of the time-0 potential: R^2/T or 1/(alpha T).
double semiconcavity(const FamilySpec& f);
// Generic bound 1/(1 + T a) for terminal curvature a > -1/T.
double semiconcavity_from_curvature(double terminal_curvature, double T);

// I(l, u) = int_l^u exp(int_l^s 2 lambda) ds, closed form; u == T allowed.
double I_integral(const FamilySpec& f, double l, double u);
// Same integral by nested adaptive quadrature of the schedule itself.
double I_integral_quadrature(const FamilySpec& f, double l, double u);

// T / I(0, T): 2R^2/T or 1/(alpha T).
double C_phi(const FamilySpec& f);
double C_phi_quadrature(const FamilySpec& f);

struct DeltaChoice {
  double delta = 0.0;
  double delta_p = 0.0;
  double ratio = 0.0;           // delta / (1 - delta) = 1/Lambda
  double ratio_p = 0.0;         // delta'/(1 - delta') = 1/(1 + 2 Lambda)
  double inv_one_minus = 0.0;   // 1/(1 - delta) = (1 + Lambda)/Lambda
};
DeltaChoice choose_delta(double lambda_psi);

// T / I(from T, to T).
double C_delta(const FamilySpec& f, double delta_from, double delta_to);

// sqrt(d) (1 + Lambda)/(T Lambda): bounds only the top of the Hessian spectrum.
double gamma_bound(int d, double T, double lambda_psi);
// Simplified family forms: 2 sqrt(d)/T (compact) or sqrt(d)(alpha + 1/T).
double gamma_simplified(const FamilySpec& f, int d);
// sqrt(d) max(1/(T - tau_u), -lambda(0), -lambda(tau_u)): bounds |eig| on both sides.
double gamma_two_sided(const FamilySpec& f, int d, double tau_u);

// Negative part of inf_{[0, tau_l]} lambda.
double lambda_bar(const FamilySpec& f, double tau_l);

struct SupIntegral {
  double quadrature = 0.0;  // sup over an s-grid of the integral, by quadrature
  double argmax_s = 0.0;
  double bound = 0.0;       // family closed-form upper bound
  double envelope = 0.0;    // up-to-constant table entry (T/R or 1/sqrt(alpha))
};
// sup_{s in [0, tau_l]} int_s^{tau_u} I(s, u)^{-1/2} du.
SupIntegral sup_integral(const FamilySpec& f, double tau_l, double tau_u, int s_points = 33);
// The inner integral at a single s.
double tail_integral(const FamilySpec& f, double s, double tau_u);

double K_constant(double lambda_phi, double c_phi, double c_deltap_delta, double lambda_bar,
                  double delta, double delta_p, double T);
double A_constant(double lambda_phi, double c_phi, double K, double lambda_bar, double gamma,
                  double sup_int, double delta_p, double tau_l, double tau_u, double T);
double C_rho_nu(double lambda_phi, double c_phi, double c_delta, double delta);

// Every constant for a pair of families: rho-side (phi) and nu-side (psi).
struct ConstantsReport {
  FamilySpec rho_family;
  FamilySpec nu_family;
  int d = 1;
  double T = 1.0;
  bool regime_ok = true;

  double Lambda_phi0 = 0.0;
  double Lambda_psi0 = 0.0;
  double Lambda_phi0_terminal_form = 0.0;  // 1/(1 + T a) with the terminal curvature
  double C_phi = 0.0;
  double C_phi_quadrature = 0.0;

  DeltaChoice delta;
  double tau_l = 0.0;
  double tau_u = 0.0;

  double I_delta = 0.0;              // I(0, delta T)
  double I_delta_quadrature = 0.0;
  double I_deltap_delta = 0.0;       // I(delta' T, delta T)
  double I_deltap_delta_quadrature = 0.0;

  double C_delta_psi = 0.0;          // exact T / I(0, delta T)
  double C_delta_psi_printed = 0.0;  // closed form as printed for the family
  double C_deltap_delta_psi = 0.0;
  double C_deltap_delta_psi_printed = 0.0;
  double C_deltap_delta_psi_upper = 0.0;  // simplified upper bound of the family chain

  double gamma_bound = 0.0;          // top-of-spectrum form
  double gamma_simplified = 0.0;
  double gamma_two_sided = 0.0;
  double lambda_bar = 0.0;
  double lambda_bar_upper = 0.0;     // simplified upper bound (4R^2/T^2 compact)
  SupIntegral sup_int;

  double K = 0.0;
  double A = 0.0;                    // with gamma_two_sided
  double A_top_gamma = 0.0;          // with gamma_bound
  double C_rho_nu = 0.0;
  double C_rho_nu_printed = 0.0;

  // Up-to-constant table entries.
  struct Envelopes {
    double Lambda_phi0, C_phi, Lambda_psi0, C_deltap_delta, C_delta, gamma, sup_integral, lambda_bar;
    double C_rho_nu, K, A;
  } env{};
};

ConstantsReport make_report(const FamilySpec& rho_family, const FamilySpec& nu_family, int d);
inline ConstantsReport make_report(const FamilySpec& family, int d = 1) {
  return make_report(family, family, d);
}

nlohmann::json to_json(const FamilySpec& f);
FamilySpec family_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConstantsReport& r);
// Two text tables: time-0 constants, then the Hessian-stability constants.
std::string table_report(const ConstantsReport& r);

}  // namespace entlab
