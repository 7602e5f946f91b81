#include "entlab/constants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "entlab/errors.hpp"
#include "entlab/quadrature.hpp"

namespace entlab {

FamilySpec FamilySpec::compact(double R, double T) {
  FamilySpec f{FamilyKind::Compact, R, T};
  f.validate();
  return f;
}

FamilySpec FamilySpec::logconcave(double alpha, double T) {
  FamilySpec f{FamilyKind::LogConcave, alpha, T};
  f.validate();
  return f;
}

void FamilySpec::validate() const {
  if (!(T > 0) || !std::isfinite(T)) throw InvalidArgument("FamilySpec: T must be positive");
  if (kind == FamilyKind::Compact) {
    if (!(param > 0) || !std::isfinite(param)) throw InvalidArgument("FamilySpec: R must be positive");
  } else {
    if (!(param > 0) || !(param * T < 1.0))
      throw InvalidArgument("FamilySpec: log-concave family needs 0 < alpha < 1/T");
  }
}

bool FamilySpec::regime_ok() const {
  return kind == FamilyKind::LogConcave || param * param >= T;
}

std::string FamilySpec::name() const { return kind == FamilyKind::Compact ? "compact" : "logconcave"; }

LambdaSchedule::LambdaSchedule(FamilySpec f) : f_(f) { f_.validate(); }

double LambdaSchedule::lambda0() const {
  const double a = f_.param, T = f_.T;
  return (a - 1.0 / T) / (a * T);
}

namespace {
// k = -1/lambda(0) > 0 for the log-concave schedule, lambda(s) = -1/(s + k).
double lc_k(const FamilySpec& f) {
  const double a = f.param, T = f.T;
  return a * T * T / (1.0 - a * T);
}
}  // namespace

double LambdaSchedule::operator()(double s) const {
  const double T = f_.T;
  if (s < 0 || s >= T) throw DomainError("LambdaSchedule: s outside [0, T)");
  if (f_.kind == FamilyKind::Compact) {
    const double h = T - s, R = f_.param;
    return 1.0 / h - R * R / (h * h);
  }
  return -1.0 / (s + lc_k(f_));
}

double LambdaSchedule::log_growth(double l, double s) const {
  const double T = f_.T;
  if (f_.kind == FamilyKind::Compact) {
    const double R2 = f_.param * f_.param;
    return 2.0 * std::log((T - l) / (T - s)) - 2.0 * R2 * (s - l) / ((T - s) * (T - l));
  }
  const double k = lc_k(f_);
  return -2.0 * std::log((s + k) / (l + k));
}

double semiconcavity(const FamilySpec& f) {
  f.validate();
  if (f.kind == FamilyKind::Compact) return f.param * f.param / f.T;
  return 1.0 / (f.param * f.T);
}

double semiconcavity_from_curvature(double a, double T) {
  if (!(a > -1.0 / T)) throw DomainError("semiconcavity_from_curvature: need a > -1/T");
  return 1.0 / (1.0 + T * a);
}

double I_integral(const FamilySpec& f, double l, double u) {
  f.validate();
  const double T = f.T;
  if (l < 0 || u < l) throw DomainError("I_integral: need 0 <= l <= u");
  if (u > T || l >= T) throw DomainError("I_integral: upper limit beyond T");
  if (u == l) return 0.0;
  if (f.kind == FamilyKind::Compact) {
    const double R2 = f.param * f.param;
    const double pre = (T - l) * (T - l) / (2.0 * R2);
    if (u == T) return pre;
    return pre * -std::expm1(-2.0 * R2 * (u - l) / ((T - l) * (T - u)));
  }
  const double k = lc_k(f);
  return (l + k) * (u - l) / (u + k);
}

double I_integral_quadrature(const FamilySpec& f, double l, double u) {
  f.validate();
  if (l < 0 || u < l || u > f.T) throw DomainError("I_integral_quadrature: bad limits");
  if (u == l) return 0.0;
  const LambdaSchedule lam(f);
  auto inner = [&](double s) {
    if (s <= l) return 1.0;
    if (s >= f.T) return 0.0;
    const double g = integrate_adaptive([&](double t) { return 2.0 * lam(t); }, l, s, 1e-14).value;
    return std::exp(g);
  };
  return integrate_adaptive(inner, l, u, 1e-13).value;
}

double C_phi(const FamilySpec& f) { return f.T / I_integral(f, 0.0, f.T); }

double C_phi_quadrature(const FamilySpec& f) { return f.T / I_integral_quadrature(f, 0.0, f.T); }

DeltaChoice choose_delta(double lambda_psi) {
  if (!(lambda_psi > 0)) throw InvalidArgument("choose_delta: Lambda must be positive");
  DeltaChoice c;
  c.delta = 1.0 / (1.0 + lambda_psi);
  c.delta_p = 0.5 * c.delta;
  c.ratio = c.delta / (1.0 - c.delta);
  c.ratio_p = c.delta_p / (1.0 - c.delta_p);
  c.inv_one_minus = 1.0 / (1.0 - c.delta);
  return c;
}

double C_delta(const FamilySpec& f, double from, double to) {
  if (!(from >= 0 && from < to && to < 1.0)) throw DomainError("C_delta: need 0 <= from < to < 1");
  return f.T / I_integral(f, from * f.T, to * f.T);
}

double gamma_bound(int d, double T, double lambda_psi) {
  if (d < 1) throw InvalidArgument("gamma_bound: d must be >= 1");
  return std::sqrt(static_cast<double>(d)) * (1.0 + lambda_psi) / (T * lambda_psi);
}

double gamma_simplified(const FamilySpec& f, int d) {
  const double sd = std::sqrt(static_cast<double>(d));
  if (f.kind == FamilyKind::Compact) return 2.0 * sd / f.T;
  return sd * (f.param + 1.0 / f.T);
}

double gamma_two_sided(const FamilySpec& f, int d, double tau_u) {
  const LambdaSchedule lam(f);
  const double sd = std::sqrt(static_cast<double>(d));
  return sd * std::max({1.0 / (f.T - tau_u), -lam(0.0), -lam(tau_u)});
}

double lambda_bar(const FamilySpec& f, double tau_l) {
  const LambdaSchedule lam(f);
  // lambda has at most one interior maximum on [0, T), so the infimum over an
  // interval sits at an endpoint
  return std::max(0.0, -std::min(lam(0.0), lam(tau_l)));
}

double tail_integral(const FamilySpec& f, double s, double tau_u) {
  if (tau_u <= s) return 0.0;
  // u = s + v^2 removes the (u - s)^{-1/2} endpoint singularity
  auto g = [&](double v) {
    const double u = s + v * v;
    if (v <= 0 || u <= s) return 2.0;  // I(s, u) ~ u - s
    return 2.0 * v / std::sqrt(I_integral(f, s, u) * (v * v / (u - s)));
  };
  return integrate_adaptive(g, 0.0, std::sqrt(tau_u - s), 1e-12).value;
}

SupIntegral sup_integral(const FamilySpec& f, double tau_l, double tau_u, int s_points) {
  f.validate();
  if (!(tau_l >= 0 && tau_l < tau_u && tau_u < f.T)) throw DomainError("sup_integral: need 0 <= tau_l < tau_u < T");
  SupIntegral r;
  const int n = std::max(1, s_points);
  double best = -1.0, best_s = 0.0;
  const double step = n > 1 ? tau_l / (n - 1) : 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = k * step;
    const double v = tail_integral(f, s, tau_u);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  // golden-section polish around the best grid point
  if (n > 1 && tau_l > 0) {
    double a = std::max(0.0, best_s - step), b = std::min(tau_l, best_s + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 40 && b - a > 1e-12 * f.T; ++it) {
      const double c = b - phi * (b - a), d = a + phi * (b - a);
      if (tail_integral(f, c, tau_u) >= tail_integral(f, d, tau_u)) b = d; else a = c;
    }
    const double sm = 0.5 * (a + b);
    const double vm = tail_integral(f, sm, tau_u);
    if (vm > best) {
      best = vm;
      best_s = sm;
    }
  }
  r.quadrature = best;
  r.argmax_s = best_s;
  const double T = f.T;
  if (f.kind == FamilyKind::Compact) {
    const double R = f.param;
    r.bound = std::log(4.0) / std::numbers::sqrt2 * T / R + std::numbers::sqrt2 * R * tau_u / (T - tau_l);
    r.envelope = T / R;
  } else {
    const LambdaSchedule lam(f);
    r.bound = 2.0 * std::sqrt(tau_u * (1.0 - tau_u * lam.lambda0()));
    r.envelope = 2.0 * std::numbers::sqrt2 / std::sqrt(f.param);
  }
  return r;
}

namespace {
double bracket(double lambda_phi, double c_phi, double ratio) {
  return 3.0 * lambda_phi + ratio + 2.0 * std::sqrt(lambda_phi * c_phi);
}
}  // namespace

double K_constant(double lambda_phi, double c_phi, double c_dd, double lbar, double delta,
                  double delta_p, double T) {
  return 2.0 * c_dd * bracket(lambda_phi, c_phi, delta / (1.0 - delta)) +
         4.0 * T * lbar * bracket(lambda_phi, c_phi, delta_p / (1.0 - delta_p));
}

double A_constant(double lambda_phi, double c_phi, double K, double lbar, double gamma,
                  double sup_int, double delta_p, double tau_l, double tau_u, double T) {
  if (!(tau_l > 0)) throw DomainError("A_constant: tau_l must be positive");
  const double first = (1.0 / std::sqrt(tau_l) + 2.0 * std::sqrt(tau_l) * lbar) * std::sqrt(K) / T;
  const double second = std::sqrt(bracket(lambda_phi, c_phi, delta_p / (1.0 - delta_p))) / std::sqrt(T) *
                        (1.0 / (tau_u - tau_l) + 2.0 * gamma) *
                        (2.0 * gamma * tau_l / std::sqrt(2.0 * std::numbers::pi)) * sup_int;
  return first + second;
}

double C_rho_nu(double lambda_phi, double c_phi, double c_delta, double delta) {
  return c_delta * bracket(lambda_phi, c_phi, delta / (1.0 - delta));
}

ConstantsReport make_report(const FamilySpec& rf, const FamilySpec& nf, int d) {
  rf.validate();
  nf.validate();
  if (rf.T != nf.T) throw InvalidArgument("make_report: families must share T");
  if (d < 1) throw InvalidArgument("make_report: d must be >= 1");
  ConstantsReport r;
  r.rho_family = rf;
  r.nu_family = nf;
  r.d = d;
  const double T = r.T = rf.T;
  r.regime_ok = rf.regime_ok() && nf.regime_ok();

  r.Lambda_phi0 = semiconcavity(rf);
  r.Lambda_psi0 = semiconcavity(nf);
  r.Lambda_phi0_terminal_form = 1.0 - T * LambdaSchedule(rf)(0.0);
  r.C_phi = C_phi(rf);
  r.C_phi_quadrature = C_phi_quadrature(rf);

  r.delta = choose_delta(r.Lambda_psi0);
  r.tau_u = r.delta.delta * T;
  r.tau_l = r.delta.delta_p * T;

  r.I_delta = I_integral(nf, 0.0, r.tau_u);
  r.I_delta_quadrature = I_integral_quadrature(nf, 0.0, r.tau_u);
  r.I_deltap_delta = I_integral(nf, r.tau_l, r.tau_u);
  r.I_deltap_delta_quadrature = I_integral_quadrature(nf, r.tau_l, r.tau_u);
  r.C_delta_psi = T / r.I_delta;
  r.C_deltap_delta_psi = T / r.I_deltap_delta;

  const double e1 = 1.0 - std::exp(-1.0);
  if (nf.kind == FamilyKind::Compact) {
    const double R2 = nf.param * nf.param, dp = r.delta.delta_p;
    r.C_delta_psi_printed = 2.0 / e1 * R2 / T;
    r.C_deltap_delta_psi_printed =
        2.0 * R2 / (T * (1.0 - dp) * (1.0 - dp)) / (1.0 - std::exp(-1.0 / (1.0 - dp)));
    r.C_deltap_delta_psi_upper = (1.0 + R2 / T) * (1.0 + R2 / T) * 2.0 / e1;
  } else {
    const double aT = nf.param * T;
    r.C_delta_psi_printed = 2.0 / aT;
    r.C_deltap_delta_psi_printed = 8.0 / aT * (1.0 + aT) / (3.0 + aT);
    r.C_deltap_delta_psi_upper = 8.0 / aT;
  }

  r.gamma_bound = gamma_bound(d, T, r.Lambda_psi0);
  r.gamma_simplified = gamma_simplified(nf, d);
  r.gamma_two_sided = gamma_two_sided(nf, d, r.tau_u);
  r.lambda_bar = lambda_bar(nf, r.tau_l);
  r.lambda_bar_upper = nf.kind == FamilyKind::Compact ? 4.0 * nf.param * nf.param / (T * T) : r.lambda_bar;
  r.sup_int = sup_integral(nf, r.tau_l, r.tau_u);

  r.K = K_constant(r.Lambda_phi0, r.C_phi, r.C_deltap_delta_psi, r.lambda_bar, r.delta.delta,
                   r.delta.delta_p, T);
  r.A = A_constant(r.Lambda_phi0, r.C_phi, r.K, r.lambda_bar, r.gamma_two_sided, r.sup_int.quadrature,
                   r.delta.delta_p, r.tau_l, r.tau_u, T);
  r.A_top_gamma = A_constant(r.Lambda_phi0, r.C_phi, r.K, r.lambda_bar, r.gamma_bound,
                             r.sup_int.quadrature, r.delta.delta_p, r.tau_l, r.tau_u, T);
  r.C_rho_nu = C_rho_nu(r.Lambda_phi0, r.C_phi, r.C_delta_psi, r.delta.delta);
  r.C_rho_nu_printed = C_rho_nu(r.Lambda_phi0, r.C_phi, r.C_delta_psi_printed, r.delta.delta);

  auto& e = r.env;
  const double sd = std::sqrt(static_cast<double>(d));
  if (rf.kind == FamilyKind::Compact) {
    e.Lambda_phi0 = e.C_phi = rf.param * rf.param / T;
  } else {
    e.Lambda_phi0 = e.C_phi = 1.0 / (rf.param * T);
  }
  if (nf.kind == FamilyKind::Compact) {
    const double R = nf.param, R2 = R * R;
    e.Lambda_psi0 = R2 / T;
    e.C_deltap_delta = R2 * R2 / (T * T);
    e.C_delta = R2 / T;
    e.gamma = sd / T;
    e.sup_integral = T / R;
    e.lambda_bar = R2 / (T * T);
  } else {
    const double a = nf.param;
    e.Lambda_psi0 = e.C_deltap_delta = e.C_delta = 1.0 / (a * T);
    e.gamma = sd * (a + 1.0 / T);
    e.sup_integral = 1.0 / std::sqrt(a);
    e.lambda_bar = 1.0 / (a * T * T) - 1.0 / T;
  }
  if (rf.kind == FamilyKind::Compact && nf.kind == FamilyKind::Compact) {
    const double R = std::max(rf.param, nf.param), R2 = R * R;
    e.C_rho_nu = R2 * R2 / (T * T);
    e.K = R2 * R2 * R2 / (T * T * T);
    e.A = R2 * R2 / std::pow(T, 3.5) + d / T;
  } else if (rf.kind == FamilyKind::LogConcave && nf.kind == FamilyKind::LogConcave) {
    const double ar = rf.param, an = nf.param;
    e.C_rho_nu = 1.0 / (ar * an * T * T);
    e.K = e.C_rho_nu;
    e.A = 1.0 / (an * std::sqrt(ar) * T * T * T) + d / (std::sqrt(ar) * an * T * T);
  } else {
    // mixed pair: product of the per-side table entries
    e.C_rho_nu = e.Lambda_phi0 * e.C_delta;
    e.K = e.Lambda_phi0 * e.C_deltap_delta;
    e.A = std::sqrt(e.K) / T + sd / T;
  }
  return r;
}

nlohmann::json to_json(const FamilySpec& f) {
  nlohmann::json j = {{"kind", f.name()}, {"T", f.T}};
  j[f.kind == FamilyKind::Compact ? "R" : "alpha"] = f.param;
  return j;
}

FamilySpec family_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const double T = j.at("T").get<double>();
  if (kind == "compact") return FamilySpec::compact(j.at("R").get<double>(), T);
  if (kind == "logconcave") return FamilySpec::logconcave(j.at("alpha").get<double>(), T);
  throw InvalidArgument("family kind must be 'compact' or 'logconcave'");
}

nlohmann::json to_json(const ConstantsReport& r) {
  nlohmann::json j;
  j["rho_family"] = to_json(r.rho_family);
  j["nu_family"] = to_json(r.nu_family);
  j["d"] = r.d;
  j["T"] = r.T;
  j["regime_ok"] = r.regime_ok;
  j["Lambda_phi0"] = r.Lambda_phi0;
  j["Lambda_psi0"] = r.Lambda_psi0;
  j["Lambda_phi0_terminal_form"] = r.Lambda_phi0_terminal_form;
  j["C_phi"] = r.C_phi;
  j["C_phi_quadrature"] = r.C_phi_quadrature;
  j["delta"] = r.delta.delta;
  j["delta_p"] = r.delta.delta_p;
  j["delta_ratio"] = r.delta.ratio;
  j["delta_p_ratio"] = r.delta.ratio_p;
  j["tau_l"] = r.tau_l;
  j["tau_u"] = r.tau_u;
  j["I_delta"] = r.I_delta;
  j["I_delta_quadrature"] = r.I_delta_quadrature;
  j["I_deltap_delta"] = r.I_deltap_delta;
  j["I_deltap_delta_quadrature"] = r.I_deltap_delta_quadrature;
  j["C_delta_psi"] = r.C_delta_psi;
  j["C_delta_psi_printed"] = r.C_delta_psi_printed;
  j["C_deltap_delta_psi"] = r.C_deltap_delta_psi;
  j["C_deltap_delta_psi_printed"] = r.C_deltap_delta_psi_printed;
  j["C_deltap_delta_psi_upper"] = r.C_deltap_delta_psi_upper;
  j["gamma_bound"] = r.gamma_bound;
  j["gamma_simplified"] = r.gamma_simplified;
  j["gamma_two_sided"] = r.gamma_two_sided;
  j["lambda_bar"] = r.lambda_bar;
  j["lambda_bar_upper"] = r.lambda_bar_upper;
  j["sup_integral"] = {{"quadrature", r.sup_int.quadrature},
                       {"argmax_s", r.sup_int.argmax_s},
                       {"bound", r.sup_int.bound},
                       {"envelope", r.sup_int.envelope}};
  j["K"] = r.K;
  j["A"] = r.A;
  j["A_top_gamma"] = r.A_top_gamma;
  j["C_rho_nu"] = r.C_rho_nu;
  j["C_rho_nu_printed"] = r.C_rho_nu_printed;
  const auto& e = r.env;
  j["envelopes"] = {{"Lambda_phi0", e.Lambda_phi0}, {"C_phi", e.C_phi},
                    {"Lambda_psi0", e.Lambda_psi0}, {"C_deltap_delta", e.C_deltap_delta},
                    {"C_delta", e.C_delta},         {"gamma", e.gamma},
                    {"sup_integral", e.sup_integral}, {"lambda_bar", e.lambda_bar},
                    {"C_rho_nu", e.C_rho_nu},       {"K", e.K},
                    {"A", e.A}};
  return j;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string row(const std::vector<std::string>& cells, const std::vector<int>& widths) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string c = cells[i];
    if (static_cast<int>(c.size()) < widths[i]) c.append(widths[i] - c.size(), ' ');
    s += c + (i + 1 < cells.size() ? "  " : "");
  }
  return s + "\n";
}
}  // namespace

std::string table_report(const ConstantsReport& r) {
  std::ostringstream os;
  const bool rc = r.rho_family.kind == FamilyKind::Compact;
  const bool nc = r.nu_family.kind == FamilyKind::Compact;
  os << "rho: " << r.rho_family.name() << (rc ? " R=" : " alpha=") << fmt(r.rho_family.param)
     << "  nu: " << r.nu_family.name() << (nc ? " R=" : " alpha=") << fmt(r.nu_family.param)
     << "  T=" << fmt(r.T) << "  d=" << r.d << (r.regime_ok ? "" : "  [R^2 < T: outside large-radius regime]")
     << "\n\n";

  const std::vector<int> w1 = {12, 14, 14, 16};
  os << "time-0 potential constants\n";
  os << row({"constant", "exact", "order", "order form"}, w1);
  os << row({"Lambda(phi0)", fmt(r.Lambda_phi0), fmt(r.env.Lambda_phi0), rc ? "R^2/T" : "1/(alpha T)"}, w1);
  os << row({"C^phi", fmt(r.C_phi), fmt(r.env.C_phi), rc ? "R^2/T" : "1/(alpha T)"}, w1);
  os << "\n";

  const std::vector<int> w2 = {18, 14, 14, 14, 22};
  os << "Hessian-stability constants (delta=" << fmt(r.delta.delta) << ", delta'=" << fmt(r.delta.delta_p)
     << ")\n";
  os << row({"constant", "exact", "closed form", "order", "order form"}, w2);
  os << row({"Lambda(psi0)", fmt(r.Lambda_psi0), fmt(r.Lambda_psi0), fmt(r.env.Lambda_psi0),
             nc ? "R^2/T" : "1/(alpha T)"}, w2);
  os << row({"C_{delta',delta}", fmt(r.C_deltap_delta_psi), fmt(r.C_deltap_delta_psi_printed),
             fmt(r.env.C_deltap_delta), nc ? "R^4/T^2" : "1/(alpha T)"}, w2);
  os << row({"C_delta", fmt(r.C_delta_psi), fmt(r.C_delta_psi_printed), fmt(r.env.C_delta),
             nc ? "R^2/T" : "1/(alpha T)"}, w2);
  os << row({"gamma", fmt(r.gamma_two_sided), fmt(r.gamma_bound), fmt(r.env.gamma),
             nc ? "sqrt(d)/T" : "sqrt(d)(alpha+1/T)"}, w2);
  os << row({"sup integral", fmt(r.sup_int.quadrature), fmt(r.sup_int.bound), fmt(r.env.sup_integral),
             nc ? "T/R" : "alpha^-1/2"}, w2);
  os << row({"lambda_bar", fmt(r.lambda_bar), fmt(r.lambda_bar_upper), fmt(r.env.lambda_bar),
             nc ? "R^2/T^2" : "1/(alpha T^2) - 1/T"}, w2);
  os << "\n";
  const std::vector<int> w3 = {12, 14, 14};
  os << row({"assembled", "value", "order"}, w3);
  os << row({"C_rho_nu", fmt(r.C_rho_nu), fmt(r.env.C_rho_nu)}, w3);
  os << row({"K", fmt(r.K), fmt(r.env.K)}, w3);
  os << row({"A", fmt(r.A), fmt(r.env.A)}, w3);
  os << "\ngamma: exact column is the two-sided spectral bound, closed-form column the\n"
        "top-of-spectrum bound; C_delta closed form is the printed family value.\n";
  return os.str();
}

}  // namespace entlab
