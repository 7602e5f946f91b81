#include "entlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <thread>

#include "entlab/bridge.hpp"
#include "entlab/errors.hpp"
#include "entlab/gaussian_oracle.hpp"
#include "entlab/potentials.hpp"
#include "entlab/rng.hpp"
#include "entlab/stats.hpp"

namespace entlab {

bool inequality_holds(double lhs, double rhs, double extra) {
  return lhs <= rhs + 1e-8 * std::max(1.0, std::abs(rhs)) + extra;
}

namespace {

double radius_about_mean(const DiscreteMeasure& m, double T) {
  const Eigen::VectorXd c = m.mean();
  const double r = (m.atoms.colwise() - c).colwise().norm().maxCoeff();
  return std::max(r, 1e-6 * std::sqrt(T));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

char* fmt_frac(char* buf, std::size_t n, const char* key, double v) {
  std::snprintf(buf, n, "[%s=%.4g]", key, v);
  return buf;
}

StabilityReport make_report_row(const StabilityContext& c, const StabilityOptions& o, std::string check, double lhs,
                                double rhs, double extra = 0.0) {
  StabilityReport r;
  r.instance_id = c.inst.id;
  r.check = std::move(check);
  if (o.sign_flip) rhs = -rhs;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tolerance = extra;
  r.pass = std::isfinite(lhs) && inequality_holds(lhs, rhs, extra);
  r.w2 = c.w2;
  r.T = c.inst.T;
  r.R_or_alpha = std::max(c.R_rho, c.R_nu);
  return r;
}

// Among gridded evaluations keep the one closest to violation; pass only if all pass.
struct Worst {
  double lhs = 0.0, rhs = 0.0, extra = 0.0, score = -std::numeric_limits<double>::infinity();
  bool all_pass = true;
  bool any = false;

  void add(double l, double r, double e = 0.0) {
    all_pass = all_pass && std::isfinite(l) && inequality_holds(l, r, e);
    const double s = (l - r - e) / std::max({std::abs(r), 1e-300});
    if (!any || s > score) {
      lhs = l;
      rhs = r;
      extra = e;
      score = s;
      any = true;
    }
  }
};

StabilityReport from_worst(const StabilityContext& c, const StabilityOptions& o, std::string check, const Worst& w) {
  StabilityReport r = make_report_row(c, o, std::move(check), w.lhs, w.rhs, w.extra);
  if (!o.sign_flip) r.pass = w.all_pass;
  return r;
}

struct Potentials {
  InterpolatedPotential psi_mu, psi_nu, phi_mu, phi_nu;
  explicit Potentials(const StabilityContext& c)
      : psi_mu(InterpolatedPotential::forward(c.sol_mu.problem, c.sol_mu.duals)),
        psi_nu(InterpolatedPotential::forward(c.sol_nu.problem, c.sol_nu.duals)),
        phi_mu(InterpolatedPotential::backward(c.sol_mu.problem, c.sol_mu.duals)),
        phi_nu(InterpolatedPotential::backward(c.sol_nu.problem, c.sol_nu.duals)) {}
};

// int_a^b E_{law(s)}[g(s, z)] ds by Gauss-Legendre in s and Gauss-Hermite per
// mixture component; error is the spread against the coarse orders.
template <class G>
QuadResult law_integral(const Plan& plan, bool backward, double a, double b, const QuadratureOrders& q, G&& g) {
  const int d = static_cast<int>(plan.x.rows());
  auto once = [&](const QuadratureOrders& o) {
    const QuadratureRule gl = gauss_legendre(o.legendre, a, b);
    double acc = 0.0;
    for (int k = 0; k < gl.size(); ++k) {
      const double s = gl.nodes[k];
      const MixtureLaw law = backward ? backward_law(plan, s, o.prune) : forward_law(plan, s, o.prune);
      const QuadNodes nodes = mixture_nodes(law, o.hermite(d), o.prune);
      acc += gl.weights[k] * expectation(nodes, [&](const Vec& z) { return g(s, z); });
    }
    return acc;
  };
  QuadResult r;
  if (!(b > a)) return r;
  r.value = once(q);
  r.error = std::abs(r.value - once(q.coarse()));
  return r;
}

template <class G>
QuadResult law_expectation(const MixtureLaw& law, const QuadratureOrders& q, G&& g) {
  const int d = law.dim();
  QuadResult r;
  r.value = expectation(mixture_nodes(law, q.hermite(d), q.prune), g);
  r.error = std::abs(r.value - expectation(mixture_nodes(law, q.coarse().hermite(d), q.prune), g));
  return r;
}

double drift_gap_sq(const InterpolatedPotential& a, const InterpolatedPotential& b, double s, const Vec& z) {
  const double h = a.horizon(s);
  return (a.softmax_mean(s, z) - b.softmax_mean(s, z)).squaredNorm() / (h * h);
}

// 3 Lambda + ratio + 2 sqrt(Lambda C^phi), the recurring bracket.
double bracket(const ConstantsReport& k, double ratio) {
  return 3.0 * k.Lambda_phi0 + ratio + 2.0 * std::sqrt(k.Lambda_phi0 * k.C_phi);
}

}  // namespace

StabilityContext prepare(const StabilityInstance& inst, const StabilityOptions& opt, PerturbationMode mode) {
  if (!(inst.T > 0)) throw InvalidArgument("stability: T must be positive");
  if (inst.rho.dim() != inst.mu.dim() || inst.mu.dim() != inst.nu.dim())
    throw InvalidArgument("stability: marginal dimensions differ");
  if (mode == PerturbationMode::Weight && !same_atoms(inst.mu, inst.nu))
    throw GridMismatch("stability: weight mode needs mu and nu on shared atoms");
  StabilityContext c;
  c.inst = inst;
  c.mode = mode;
  if (mode == PerturbationMode::Weight) {
    // keep nu's atoms in mu's order so plan comparisons line up
    const std::vector<int> idx = match_atoms(inst.mu, inst.nu);
    Eigen::VectorXd w(inst.mu.size());
    for (int j = 0; j < inst.mu.size(); ++j) w[j] = inst.nu.weights[idx[j]];
    c.inst.nu = inst.mu.with_weights(w);
  }
  c.sol_mu = solve(c.inst.rho, c.inst.mu, inst.T, opt.solve_tol);
  c.sol_nu = solve(c.inst.rho, c.inst.nu, inst.T, opt.solve_tol);
  c.w2 = wasserstein2(c.inst.mu, c.inst.nu);
  c.w2sq = c.w2 * c.w2;
  c.h_mu_nu = mode == PerturbationMode::Weight ? relative_entropy(c.inst.mu, c.inst.nu)
                                               : std::numeric_limits<double>::infinity();
  c.R_rho = radius_about_mean(c.inst.rho, inst.T);
  c.R_nu = radius_about_mean(c.inst.nu, inst.T);
  c.constants = make_report(FamilySpec::compact(c.R_rho, inst.T), FamilySpec::compact(c.R_nu, inst.T), c.inst.rho.dim());
  return c;
}

StabilityReport check_entropic(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const double lhs = plan_relative_entropy(c.sol_mu.plan, c.sol_nu.plan);
  const double rhs = c.h_mu_nu + c.constants.Lambda_phi0 / (2.0 * T) * c.w2sq;
  return make_report_row(c, o, "entropic", lhs, rhs);
}

StabilityReport check_conditional(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const double lhs = conditional_entropy_term(c.sol_mu.plan, c.sol_nu.plan);
  return make_report_row(c, o, "conditional", lhs, c.constants.Lambda_phi0 / (2.0 * T) * c.w2sq);
}

StabilityReport check_grad_eta(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const Potentials p(c);
  const double g = grad_diff_l2(c.inst.mu, p.phi_mu, p.phi_nu, 0.0);
  const double rhs = c.constants.Lambda_phi0 * c.constants.C_phi / (T * T) * c.w2sq;
  return make_report_row(c, o, "grad_eta", g * g, rhs);
}

StabilityReport check_pointwise(const StabilityContext& c, const StabilityOptions& o) {
  const Plan& pl = c.sol_nu.plan;
  const double T = c.inst.T, lam = c.constants.Lambda_phi0;
  Worst w;
  for (int j = 0; j < pl.cols(); ++j) {
    const double mj = pl.weights.col(j).sum();
    for (int k = 0; k < pl.cols(); ++k) {
      if (k == j) continue;
      const double mk = pl.weights.col(k).sum();
      double kl = 0.0;
      for (int i = 0; i < pl.rows(); ++i) {
        const double p = pl.weights(i, j) / mj, q = pl.weights(i, k) / mk;
        if (p > 0) kl += p * std::log(p / q);
      }
      const double rhs = lam / (2.0 * T) * (pl.y.col(j) - pl.y.col(k)).squaredNorm();
      w.add(std::max(0.0, kl), rhs);
    }
  }
  return from_worst(c, o, "pointwise", w);
}

std::vector<StabilityReport> check_pointwise_time_s(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T, lam = c.constants.Lambda_phi0;
  const Potentials p(c);
  const int m = c.inst.mu.size();
  std::vector<StabilityReport> out;
  for (double frac : o.s_fractions) {
    const double s = frac * T;
    Worst w;
    for (int q = 0; q < std::min(o.pointwise_pairs, m); ++q) {
      const int jy = q, jz = (2 * q + 1) % m;
      const Vec y = c.inst.mu.atoms.col(jy), z = c.inst.nu.atoms.col(jz);
      const MixtureLaw la = conditional_backward_law(c.sol_mu.plan, jy, s);
      const MixtureLaw lb = conditional_backward_law(c.sol_nu.plan, jz, s);
      const QuadResult kl = mixture_kl(la, lb, o.orders);
      const QuadResult eta_s =
          law_expectation(la, o.orders, [&](const Vec& x) { return p.phi_nu.value(s, x) - p.phi_mu.value(s, x); });
      const double eta0 = p.phi_nu.value(0.0, y) - p.phi_mu.value(0.0, y);
      const Vec geta0 = p.phi_nu.gradient(0.0, y) - p.phi_mu.gradient(0.0, y);
      const double d2 = (z - y).squaredNorm();
      const double rhs = lam / (2.0 * T) * d2 + (1.0 / s - 1.0 / T) * d2 / 2.0 + eta_s.value - eta0 - geta0.dot(z - y);
      w.add(kl.value, rhs, kl.error + eta_s.error);
    }
    char buf[48];
    out.push_back(from_worst(c, o, std::string("pointwise_time_s") + fmt_frac(buf, sizeof buf, "s/T", frac), w));
  }
  return out;
}

std::vector<StabilityReport> check_time_s_entropy(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const auto& k = c.constants;
  std::vector<StabilityReport> out;
  for (double frac : o.s_fractions) {
    const double s = frac * T;
    const QuadResult kl = mixture_kl(backward_law(c.sol_mu.plan, s, o.orders.prune),
                                     backward_law(c.sol_nu.plan, s, o.orders.prune), o.orders);
    const double rhs =
        (k.Lambda_phi0 / T + (1.0 / s - 1.0 / T) / 2.0 + std::sqrt(k.Lambda_phi0 * k.C_phi) / T) * c.w2sq;
    char buf[48];
    out.push_back(
        make_report_row(c, o, std::string("time_s_entropy") + fmt_frac(buf, sizeof buf, "s/T", frac), kl.value, rhs, kl.error));
  }
  return out;
}

std::vector<StabilityReport> check_theta_energy(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const Potentials p(c);
  std::vector<double> ds = o.deltas;
  std::sort(ds.begin(), ds.end());
  std::vector<StabilityReport> out;
  double acc = 0.0, err = 0.0, prev = 0.0;
  for (double delta : ds) {
    if (!(delta > 0 && delta < 1)) throw DomainError("check_theta_energy: delta must lie in (0, 1)");
    const QuadResult piece = law_integral(c.sol_mu.plan, false, prev * T, delta * T, o.orders,
                                          [&](double s, const Vec& z) { return drift_gap_sq(p.psi_nu, p.psi_mu, s, z); });
    acc += piece.value;
    err += piece.error;
    prev = delta;
    const double rhs = bracket(c.constants, delta / (1.0 - delta)) / T * c.w2sq;
    char buf[48];
    out.push_back(make_report_row(c, o, std::string("theta_energy") + fmt_frac(buf, sizeof buf, "delta", delta), acc, rhs, err));
  }
  return out;
}

std::vector<StabilityReport> check_gradient_stability(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const auto& k = c.constants;
  const Potentials p(c);
  const double g = grad_diff_l2(c.inst.rho, p.psi_mu, p.psi_nu, 0.0);
  std::vector<StabilityReport> out;
  out.push_back(make_report_row(c, o, "gradient_stability", g * g, k.C_rho_nu / (T * T) * c.w2sq));

  // plan-entropy form: time-s entropy at (1 - delta)T plus the backward tail energy
  const double s0 = (1.0 - k.delta.delta) * T;
  const QuadResult h = mixture_kl(backward_law(c.sol_mu.plan, s0, o.orders.prune),
                                  backward_law(c.sol_nu.plan, s0, o.orders.prune), o.orders);
  const QuadResult tail = law_integral(c.sol_mu.plan, true, s0, T, o.orders,
                                       [&](double s, const Vec& z) { return drift_gap_sq(p.phi_nu, p.phi_mu, s, z); });
  const double pre = k.C_delta_psi / T;
  out.push_back(make_report_row(c, o, "gradient_stability_entropy_form", g * g, pre * (2.0 * h.value + tail.value),
                                pre * (2.0 * h.error + tail.error)));
  return out;
}

std::vector<StabilityReport> check_hessian_lemmas(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const auto& k = c.constants;
  const Potentials p(c);
  const double tl = k.tau_l, delta = k.delta.delta;
  std::vector<StabilityReport> out;

  // drift gap at the lower time
  const QuadResult y2 = law_expectation(forward_law(c.sol_mu.plan, tl, o.orders.prune), o.orders,
                                        [&](const Vec& z) { return drift_gap_sq(p.psi_nu, p.psi_mu, tl, z); });
  const double rhs_y = k.C_deltap_delta_psi / T * bracket(k, delta / (1.0 - delta)) / T * c.w2sq;
  out.push_back(make_report_row(c, o, "theta_gap_at_tau_l", y2.value, rhs_y, y2.error));

  // integrated squared Hessian gap
  const QuadResult J = law_integral(c.sol_mu.plan, false, 0.0, tl, o.orders, [&](double s, const Vec& z) {
    const double h = hs_norm(p.psi_nu.hessian(s, z) - p.psi_mu.hessian(s, z));
    return h * h;
  });
  out.push_back(make_report_row(c, o, "hessian_gap_energy", J.value, k.K / (T * T) * c.w2sq, J.error));

  // Hessian gap at 0 against its Ito decomposition
  const QuadResult Q = law_integral(c.sol_mu.plan, false, 0.0, tl, o.orders, [&](double s, const Vec& z) {
    const Vec v = p.psi_nu.gradient(s, z) - p.psi_mu.gradient(s, z);
    return hs_norm(p.psi_nu.third_derivative(s, z, v));
  });
  const double lhs = hess_diff_l1(c.inst.rho, p.psi_mu, p.psi_nu, 0.0);
  const double coef = 1.0 / std::sqrt(tl) + 2.0 * std::sqrt(tl) * k.lambda_bar;
  const double rhs = coef * std::sqrt(J.value) + J.value + Q.value;
  out.push_back(make_report_row(c, o, "hessian_decomposition", lhs, rhs, coef * std::sqrt(J.error) + J.error + Q.error));
  return out;
}

StabilityReport check_hessian_stability(const StabilityContext& c, const StabilityOptions& o) {
  const double T = c.inst.T;
  const Potentials p(c);
  const double lhs = hess_diff_l1(c.inst.rho, p.psi_mu, p.psi_nu, 0.0);
  const double rhs = c.constants.A * c.w2 + c.constants.K / (T * T) * c.w2sq;
  return make_report_row(c, o, "hessian_stability", lhs, rhs);
}

StabilityReport check_third_derivative(const StabilityContext& c, const StabilityOptions& o) {
  const auto& k = c.constants;
  const InterpolatedPotential psi = InterpolatedPotential::forward(c.sol_nu.problem, c.sol_nu.duals);
  const int d = c.inst.rho.dim();
  const double tu = k.tau_u, gam = k.gamma_two_sided;

  // probes: rho atoms, midpoints of consecutive atoms, random points in the rho ball
  const DiscreteMeasure& rho = c.inst.rho;
  std::vector<Vec> probes;
  for (int i = 0; i < rho.size(); ++i) probes.emplace_back(rho.atoms.col(i));
  for (int i = 0; i + 1 < rho.size(); ++i) probes.emplace_back(0.5 * (rho.atoms.col(i) + rho.atoms.col(i + 1)));
  CounterRng rng(o.seed, fnv1a(c.inst.id));
  const Eigen::VectorXd center = rho.mean();
  for (int q = 0; q < o.random_probes; ++q) {
    Vec z(d);
    for (int a = 0; a < d; ++a) z[a] = center[a] + c.R_rho * (2.0 * rng.uniform() - 1.0);
    probes.push_back(z);
  }
  std::vector<Vec> dirs;
  for (int a = 0; a < d; ++a) dirs.push_back(Vec::Unit(d, a));
  for (int q = 0; q < 2; ++q) {
    Vec v(d);
    for (int a = 0; a < d; ++a) v[a] = rng.normal();
    dirs.push_back(v);
  }

  Worst w;
  const FamilySpec& nf = k.nu_family;
  for (int n = 0; n < o.t_points; ++n) {
    const double t = n * tu / o.t_points;
    const double tail = tail_integral(nf, t, tu);
    const double factor = (1.0 / (tu - t) + 2.0 * gam) * (2.0 * gam / std::sqrt(2.0 * std::numbers::pi)) * tail;
    for (const Vec& z : probes)
      for (const Vec& v : dirs) w.add(hs_norm(psi.third_derivative(t, z, v)), v.norm() * factor);
  }
  return from_worst(c, o, "third_derivative", w);
}

double disintegration_defect(const StabilityContext& c) {
  const double cond = conditional_entropy_term(c.sol_mu.plan, c.sol_nu.plan);
  const double full = plan_relative_entropy(c.sol_mu.plan, c.sol_nu.plan);
  return std::abs(cond - (full - c.h_mu_nu));
}

std::vector<StabilityReport> run_checks(const StabilityContext& c, const StabilityOptions& o) {
  std::vector<StabilityReport> out;
  auto append = [&](std::vector<StabilityReport> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (c.mode == PerturbationMode::Location) {
    out.push_back(check_pointwise(c, o));
    out.push_back(check_third_derivative(c, o));
    return out;
  }
  out.push_back(check_entropic(c, o));
  out.push_back(check_conditional(c, o));
  out.push_back(check_grad_eta(c, o));
  out.push_back(check_pointwise(c, o));
  append(check_pointwise_time_s(c, o));
  append(check_time_s_entropy(c, o));
  append(check_theta_energy(c, o));
  append(check_gradient_stability(c, o));
  append(check_hessian_lemmas(c, o));
  out.push_back(check_hessian_stability(c, o));
  out.push_back(check_third_derivative(c, o));
  return out;
}

StabilityInstance generate_instance(const CampaignSpec& spec, int k) {
  CounterRng rng(spec.seed, static_cast<std::uint64_t>(k));
  auto unif = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  auto count = [&](int lo, int hi) { return std::min(hi, lo + static_cast<int>(rng.uniform() * (hi - lo + 1))); };

  const int d = rng.uniform() < spec.fraction_2d ? 2 : 1;
  StabilityInstance inst;
  char id[32];
  std::snprintf(id, sizeof id, "inst-%04d", k);
  inst.id = id;
  inst.T = std::exp(unif(std::log(spec.T_min), std::log(spec.T_max)));
  const double eps = unif(spec.eps_min, spec.eps_max);
  const double scale = unif(0.5, 2.0);
  const int max_atoms = d == 1 ? spec.max_atoms_1d : spec.max_atoms_2d;
  const int n = count(2, max_atoms), m = count(2, max_atoms);

  auto cloud = [&](int cnt) {
    Eigen::MatrixXd a(d, cnt);
    for (int j = 0; j < cnt; ++j)
      for (int b = 0; b < d; ++b) a(b, j) = scale * unif(-1.0, 1.0);
    return a;
  };
  auto weights = [&](int cnt) {
    Eigen::VectorXd w(cnt);
    for (int j = 0; j < cnt; ++j) w[j] = unif(0.2, 1.2);
    return Eigen::VectorXd(w / w.sum());
  };
  inst.rho = DiscreteMeasure(cloud(n), weights(n));
  const Eigen::MatrixXd ym = cloud(m);

  if (spec.mode == PerturbationMode::Location) {
    const Eigen::VectorXd w = d == 1 ? weights(m) : Eigen::VectorXd::Constant(m, 1.0 / m);
    inst.mu = DiscreteMeasure(ym, w);
    Eigen::MatrixXd yn = ym;
    for (int j = 0; j < m; ++j)
      for (int b = 0; b < d; ++b) yn(b, j) += eps * scale * unif(-1.0, 1.0);
    inst.nu = DiscreteMeasure(yn, w);
    return inst;
  }
  if (d == 1) {
    const Eigen::VectorXd wm = weights(m);
    Eigen::VectorXd wn(m);
    for (int j = 0; j < m; ++j) wn[j] = wm[j] * (1.0 + eps * unif(-1.0, 1.0));
    inst.mu = DiscreteMeasure(ym, wm);
    inst.nu = DiscreteMeasure(ym, wn / wn.sum());
    return inst;
  }
  // d >= 2: counts on a 1/N lattice so W2 is an exact assignment
  const int N = 8 * m;
  std::vector<int> cm(m, 1);
  for (int u = m; u < N; ++u) cm[std::min(m - 1, static_cast<int>(rng.uniform() * m))]++;
  std::vector<int> cn = cm;
  const int moves = std::max(1, static_cast<int>(std::lround(eps * N)));
  for (int u = 0; u < moves; ++u) {
    const int from = std::min(m - 1, static_cast<int>(rng.uniform() * m));
    const int to = std::min(m - 1, static_cast<int>(rng.uniform() * m));
    if (from == to || cn[from] <= 1) continue;
    cn[from]--;
    cn[to]++;
  }
  if (cn == cm) {
    // guarantee a perturbation
    const int from = static_cast<int>(std::max_element(cm.begin(), cm.end()) - cm.begin());
    cn[from]--;
    cn[(from + 1) % m]++;
  }
  Eigen::VectorXd wm(m), wn(m);
  for (int j = 0; j < m; ++j) {
    wm[j] = static_cast<double>(cm[j]) / N;
    wn[j] = static_cast<double>(cn[j]) / N;
  }
  inst.mu = DiscreteMeasure(ym, wm);
  inst.nu = DiscreteMeasure(ym, wn);
  return inst;
}

namespace {
std::vector<StabilityReport> run_one(const CampaignSpec& spec, const StabilityOptions& opt, int k) {
  const StabilityInstance inst = generate_instance(spec, k);
  try {
    const StabilityContext c = prepare(inst, opt, spec.mode);
    return run_checks(c, opt);
  } catch (const Error& e) {
    StabilityReport r;
    r.instance_id = inst.id;
    r.check = "error";
    r.lhs = std::numeric_limits<double>::quiet_NaN();
    r.rhs = std::numeric_limits<double>::quiet_NaN();
    r.slack = std::numeric_limits<double>::quiet_NaN();
    r.pass = false;
    r.T = inst.T;
    return {r};
  }
}
}  // namespace

CampaignResult run_campaign(const CampaignSpec& spec, const StabilityOptions& opt, int jobs) {
  const int n = spec.n_instances;
  std::vector<std::vector<StabilityReport>> per(n);
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) per[k] = run_one(spec, opt, k);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        for (int k = t; k < n; k += jobs) per[k] = run_one(spec, opt, k);
      });
    for (auto& th : pool) th.join();
  }
  CampaignResult r;
  r.instances = n;
  for (auto& v : per)
    for (auto& rep : v) {
      if (!rep.pass) ++r.violations;
      r.reports.push_back(std::move(rep));
    }
  return r;
}

CsvTable stability_table(const std::vector<StabilityReport>& reports) {
  CsvTable t({"instance_id", "check", "lhs", "rhs", "slack", "pass", "w2", "T", "R_or_alpha"});
  for (const auto& r : reports) t.add_row({r.instance_id, r.check, r.lhs, r.rhs, r.slack, r.pass, r.w2, r.T, r.R_or_alpha});
  return t;
}

nlohmann::json to_json(const StabilityReport& r) {
  return {{"instance_id", r.instance_id}, {"check", r.check}, {"lhs", r.lhs}, {"rhs", r.rhs},
          {"slack", r.slack},             {"pass", r.pass},   {"w2", r.w2},   {"T", r.T},
          {"R_or_alpha", r.R_or_alpha},   {"tolerance", r.tolerance}};
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0 && hi > lo) || n < 2) throw InvalidArgument("geometric_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  return g;
}

namespace {

// Symmetric base instance in 1D: nu reweights mu symmetrically, so the means agree.
StabilityInstance sweep_instance(double R, double T, double eps) {
  StabilityInstance inst;
  inst.T = T;
  const int n = 9, m = 8;
  Eigen::MatrixXd x(1, n), y(1, m);
  for (int i = 0; i < n; ++i) x(0, i) = R * (-1.0 + 2.0 * i / (n - 1));
  for (int j = 0; j < m; ++j) y(0, j) = R * (-1.0 + 2.0 * j / (m - 1));
  Eigen::VectorXd wm(m), wn(m);
  for (int j = 0; j < m; ++j) {
    const double u = -1.0 + 2.0 * j / (m - 1);
    wm[j] = 1.0 + 0.5 * std::cos(std::numbers::pi * u);
    wn[j] = wm[j] * (1.0 + eps * (u * u - 0.5));
  }
  inst.rho = DiscreteMeasure::uniform(x);
  inst.mu = DiscreteMeasure(y, wm / wm.sum());
  inst.nu = DiscreteMeasure(y, wn / wn.sum());
  char id[48];
  std::snprintf(id, sizeof id, "sweep-R%.4g-T%.4g", R, T);
  inst.id = id;
  return inst;
}

SweepRow compact_row(double R, double T, double eps, const StabilityOptions& opt) {
  const StabilityContext c = prepare(sweep_instance(R, T, eps), opt);
  const Potentials p(c);
  const auto& k = c.constants;
  SweepRow r;
  r.family = "compact";
  r.T = T;
  r.param = R;
  r.w2 = c.w2;
  const double g = grad_diff_l2(c.inst.rho, p.psi_mu, p.psi_nu, 0.0);
  r.grad_ratio = g * g / c.w2sq;
  r.grad_bound = k.C_rho_nu / (T * T);
  r.grad_envelope = k.env.C_rho_nu / (T * T);
  r.hess_lhs = hess_diff_l1(c.inst.rho, p.psi_mu, p.psi_nu, 0.0);
  r.hess_bound = k.A * c.w2 + k.K / (T * T) * c.w2sq;
  r.hess_envelope = k.env.A * c.w2 + k.env.K / (T * T) * c.w2sq;
  return r;
}

void finish_sweep(SweepResult& res, std::size_t n_T) {
  for (const auto& r : res.rows) res.prefactor = std::max(res.prefactor, r.grad_bound / r.grad_envelope);
  std::vector<double> lt, lb, lm;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    res.below_envelope = res.below_envelope && r.grad_ratio <= res.prefactor * r.grad_envelope * (1.0 + 1e-12);
    res.hessian_ok = res.hessian_ok && inequality_holds(r.hess_lhs, r.hess_bound);
    if (i < n_T) {
      lt.push_back(std::log(r.T));
      lb.push_back(std::log(r.grad_bound));
      lm.push_back(std::log(r.grad_ratio));
    }
  }
  res.constant_slope = fit_line(lt, lb).slope;
  res.measured_slope = fit_line(lt, lm).slope;
}

}  // namespace

SweepResult compact_sweep(const SweepSpec& spec, const StabilityOptions& opt) {
  SweepResult res;
  for (double T : spec.T_grid) res.rows.push_back(compact_row(spec.R, T, spec.eps, opt));
  for (double R : spec.R_grid) {
    res.rows.push_back(compact_row(R, spec.R_grid_T, spec.eps, opt));
    res.rows.back().grid = "R";
  }
  finish_sweep(res, spec.T_grid.size());
  return res;
}

SweepResult logconcave_sweep(const SweepSpec& spec) {
  SweepResult res;
  const double a = spec.alpha, var = 1.0 / a;
  auto gauss = [](double m, double v) {
    return GaussianMeasure(Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, v));
  };
  const GaussianMeasure rho = gauss(0.0, var), mu = gauss(0.0, var);
  const GaussianMeasure nu = gauss(0.5 * spec.eps * std::sqrt(var), var * (1.0 - spec.eps) * (1.0 - spec.eps));
  const double w2 = gaussian_w2(mu, nu);
  for (double T : spec.T_grid) {
    const GaussianEotSolution sm = solve_gaussian(rho, mu, T), sn = solve_gaussian(rho, nu, T);
    const QuadraticPotential qm = interpolated(sm, PotentialSide::Forward, 0.0);
    const QuadraticPotential qn = interpolated(sn, PotentialSide::Forward, 0.0);
    const double dp = qn.curvature - qm.curvature, dl = qn.linear - qm.linear;
    const double lhs = (dp * rho.mean[0] + dl) * (dp * rho.mean[0] + dl) + dp * dp * var;
    const ConstantsReport k = make_report(FamilySpec::logconcave(a, T), FamilySpec::logconcave(a, T), 1);
    SweepRow r;
    r.family = "logconcave";
    r.T = T;
    r.param = a;
    r.w2 = w2;
    r.grad_ratio = lhs / (w2 * w2);
    r.grad_bound = k.C_rho_nu / (T * T);
    r.grad_envelope = k.env.C_rho_nu / (T * T);
    r.hess_lhs = std::abs(dp);
    r.hess_bound = k.A * w2 + k.K / (T * T) * w2 * w2;
    r.hess_envelope = k.env.A * w2 + k.env.K / (T * T) * w2 * w2;
    res.rows.push_back(r);
  }
  finish_sweep(res, spec.T_grid.size());
  return res;
}

CsvTable sweep_table(const SweepResult& r) {
  CsvTable t({"family", "grid", "T", "R_or_alpha", "w2", "grad_ratio", "grad_bound", "grad_envelope", "hess_lhs",
              "hess_bound", "hess_envelope"});
  for (const auto& x : r.rows)
    t.add_row({x.family, x.grid, x.T, x.param, x.w2, x.grad_ratio, x.grad_bound, x.grad_envelope, x.hess_lhs, x.hess_bound,
               x.hess_envelope});
  return t;
}

}  // namespace entlab
