#include "entlab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "entlab/errors.hpp"
#include "entlab/potentials.hpp"
#include "entlab/stats.hpp"

namespace entlab {

namespace {

double radius_about_mean(const DiscreteMeasure& m) {
  const Eigen::VectorXd c = m.mean();
  return (m.atoms.colwise() - c).colwise().norm().maxCoeff();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

ConvergenceRun run_convergence(const EotProblem& problem, const ConvergenceOptions& opt) {
  if (opt.n_max < 1 || opt.burn_in < 0) throw InvalidArgument("run_convergence: need n_max >= 1, burn_in >= 0");
  const EotSolution ref = solve(problem.rho, problem.mu, problem.T, opt.reference_tol);
  const InterpolatedPotential psi_ref = InterpolatedPotential::forward(problem, ref.duals);

  SinkhornOptions so;
  so.tol = std::numeric_limits<double>::min();
  so.max_iter = opt.n_max;
  so.record_duals = true;
  SinkhornTrace trace;
  try {
    trace = sinkhorn_solve(problem, so).trace;
  } catch (const NotConverged& e) {
    trace = e.trace();
  }

  ConvergenceRun run;
  run.problem = problem;
  run.burn_in = opt.burn_in;
  const double T = problem.T;
  const double R = std::max(radius_about_mean(problem.rho), radius_about_mean(problem.mu));
  run.Lambda = R * R / T;
  const bool one_d = problem.mu.dim() == 1;

  for (std::size_t n = 0; n < trace.duals.size(); ++n) {
    const DualVariables& d = trace.duals[n];
    IterateRecord r;
    r.n = static_cast<int>(n);
    const InterpolatedPotential psi_n = InterpolatedPotential::forward(problem, d);
    const double g = grad_diff_l2(problem.rho, psi_n, psi_ref, 0.0);
    r.grad_err_sq = g * g;
    r.hess_err_l1 = hess_diff_l1(problem.rho, psi_n, psi_ref, 0.0);
    const Plan pn = assemble_plan(problem, d);
    r.plan_kl = plan_relative_entropy(ref.plan, pn);
    const DiscreteMeasure wm = problem.mu.with_weights(trace.wrong_marginal[n]);
    r.marginal_kl = relative_entropy(problem.mu, wm);
    r.w2_wrong = one_d ? wasserstein2(problem.mu, wm) : kNaN;
    r.tau_hat_n = (one_d && r.marginal_kl > 0) ? r.w2_wrong * r.w2_wrong / (2.0 * r.marginal_kl) : kNaN;
    if (!std::isfinite(r.grad_err_sq) || !std::isfinite(r.hess_err_l1) || !std::isfinite(r.plan_kl))
      throw NonFinite("run_convergence: non-finite iterate record");
    run.records.push_back(r);
    if (r.plan_kl < opt.floor) break;
  }

  for (std::size_t k = 1; k < run.records.size(); ++k) {
    const auto &a = run.records[k - 1], &b = run.records[k];
    if (a.n >= opt.burn_in && b.plan_kl >= opt.floor && b.plan_kl > a.plan_kl * (1.0 + 1e-9)) run.kl_monotone = false;
  }
  try {
    run.tau_hat = estimate_tau(run, opt.floor);
    run.predicted_factor = predicted_contraction(T, run.tau_hat, run.Lambda);
  } catch (const DegenerateRun&) {
    run.tau_hat = kNaN;
    run.predicted_factor = kNaN;
  }
  return run;
}

double estimate_tau(const ConvergenceRun& run, double floor) {
  double tau = -1.0;
  for (const auto& r : run.records) {
    if (r.n < run.burn_in || !(r.marginal_kl > 0) || r.plan_kl < floor || !std::isfinite(r.tau_hat_n)) continue;
    tau = std::max(tau, r.tau_hat_n);
  }
  if (tau < 0) throw DegenerateRun("estimate_tau: no post-burn-in iterate with positive entropy");
  return tau;
}

double predicted_contraction(double T, double tau, double Lambda) {
  if (!(T > 0 && tau > 0 && Lambda > 0)) throw InvalidArgument("predicted_contraction: T, tau, Lambda must be positive");
  return 1.0 - T / (T + tau * Lambda);
}

ConvergenceVerdict fit_series(const std::vector<double>& n, const std::vector<double>& plan_kl,
                              const std::vector<double>& grad_err_sq, const std::vector<double>& hess_err_l1,
                              double predicted) {
  const std::size_t m = n.size();
  if (m < 8) throw InsufficientData("fit_and_compare: fewer than 8 iterates above the floor");
  ConvergenceVerdict v;
  v.points = static_cast<int>(m);
  v.predicted = predicted;

  std::vector<double> lk(m);
  for (std::size_t k = 0; k < m; ++k) lk[k] = std::log(plan_kl[k]);
  const LineFit kf = fit_line(n, lk);
  v.c_hat = std::exp(kf.slope);
  v.kl_r2 = kf.r2;

  if (!grad_err_sq.empty()) {
    // slope pinned at log c_hat; intercept is the mean residual
    std::vector<double> lg(m), fit(m);
    double icpt = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      lg[k] = std::log(grad_err_sq[k]);
      icpt += lg[k] - kf.slope * n[k];
    }
    icpt /= static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) fit[k] = icpt + kf.slope * n[k];
    v.grad_prefactor = std::exp(icpt);
    v.grad_r2 = r_squared(lg, fit);
  }
  if (!hess_err_l1.empty()) {
    std::vector<double> a(m), b(m), y(m), lh(m), fit(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double w = 1.0 / hess_err_l1[k];
      a[k] = std::pow(v.c_hat, 0.5 * n[k]) * w;
      b[k] = std::pow(v.c_hat, n[k]) * w;
      y[k] = 1.0;
      lh[k] = std::log(hess_err_l1[k]);
    }
    const std::vector<double> c = nnls({a, b}, y);
    v.hess_c1 = c[0];
    v.hess_c2 = c[1];
    for (std::size_t k = 0; k < m; ++k)
      fit[k] = std::log(std::max(1e-300, c[0] * std::pow(v.c_hat, 0.5 * n[k]) + c[1] * std::pow(v.c_hat, n[k])));
    v.hess_r2 = r_squared(lh, fit);
  }
  v.rate_ok = v.c_hat <= predicted + 0.02;
  v.kl_fit_ok = v.kl_r2 >= 0.99;
  v.grad_ok = v.grad_r2 >= 0.99;
  v.hess_ok = v.hess_r2 >= 0.98;
  return v;
}

ConvergenceVerdict fit_and_compare(const ConvergenceRun& run, double tau_hat, double Lambda, double floor) {
  std::vector<double> n, kl, g, h;
  for (const auto& r : run.records) {
    if (r.n < run.burn_in || r.plan_kl < floor || !(r.grad_err_sq > 0) || !(r.hess_err_l1 > 0)) continue;
    n.push_back(r.n);
    kl.push_back(r.plan_kl);
    g.push_back(r.grad_err_sq);
    h.push_back(r.hess_err_l1);
  }
  return fit_series(n, kl, g, h, predicted_contraction(run.problem.T, tau_hat, Lambda));
}

CsvTable convergence_table(const ConvergenceRun& run) {
  CsvTable t({"n", "grad_err_sq", "hess_err_l1", "plan_kl", "w2_wrong", "tau_hat_n", "predicted_factor"});
  for (const auto& r : run.records)
    t.add_row({static_cast<std::int64_t>(r.n), r.grad_err_sq, r.hess_err_l1, r.plan_kl, r.w2_wrong, r.tau_hat_n,
               run.predicted_factor});
  return t;
}

nlohmann::json to_json(const ConvergenceVerdict& v) {
  return {{"points", v.points},       {"c_hat", v.c_hat},         {"kl_r2", v.kl_r2},
          {"predicted", v.predicted}, {"grad_r2", v.grad_r2},     {"grad_prefactor", v.grad_prefactor},
          {"hess_r2", v.hess_r2},     {"hess_c1", v.hess_c1},     {"hess_c2", v.hess_c2},
          {"rate_ok", v.rate_ok},     {"kl_fit_ok", v.kl_fit_ok}, {"grad_ok", v.grad_ok},
          {"hess_ok", v.hess_ok},     {"pass", v.pass()}};
}

}  // namespace entlab
