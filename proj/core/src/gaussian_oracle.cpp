#include "entlab/gaussian_oracle.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "entlab/eot.hpp"
#include "entlab/errors.hpp"

namespace entlab {

namespace {

double scalar_variance(const GaussianMeasure& g, const char* who) {
  if (g.dim() != 1) throw UnsupportedInstance(std::string(who) + ": the Gaussian oracle is one-dimensional");
  const double v = g.covariance(0, 0);
  if (!(v > 0)) throw DomainError(std::string(who) + ": variance must be positive");
  return v;
}

}  // namespace

GaussianEotSolution solve_gaussian(const GaussianMeasure& rho, const GaussianMeasure& nu, double T) {
  if (!(T > 0)) throw InvalidArgument("solve_gaussian: T must be positive");
  GaussianEotSolution s;
  s.T = T;
  s.var_rho = scalar_variance(rho, "solve_gaussian");
  s.var_nu = scalar_variance(nu, "solve_gaussian");
  s.mean_rho = rho.mean[0];
  s.mean_nu = nu.mean[0];

  // Marginal precision of x under the plan: p_phi + p_psi / (1 + T p_psi), and symmetrically.
  auto phi_of = [&](double pp) { return 1.0 / s.var_rho - pp / (1.0 + T * pp); };
  auto psi_of = [&](double pf) { return 1.0 / s.var_nu - pf / (1.0 + T * pf); };
  double p_psi = 0.0, p_phi = phi_of(p_psi);
  int it = 0;
  for (; it < 10000; ++it) {
    p_phi = phi_of(p_psi);
    const double next = psi_of(p_phi);
    const double step = std::abs(next - p_psi);
    p_psi = next;
    if (step <= 1e-15 * std::max(1.0, std::abs(p_psi))) break;
  }
  p_phi = phi_of(p_psi);
  s.iterations = it;
  s.residual = std::max(std::abs(p_phi - phi_of(p_psi)), std::abs(p_psi - psi_of(p_phi)));
  if (!(s.residual <= 1e-12) || !(1.0 + T * p_phi > 0) || !(1.0 + T * p_psi > 0))
    throw NoConvergence("solve_gaussian: scalar fixed point did not settle");
  s.p_phi = p_phi;
  s.p_psi = p_psi;

  const double a = 1.0 / T + p_phi, b = 1.0 / T + p_psi, off = -1.0 / T;
  const double det = a * b - off * off;
  s.c = (1.0 / T) / det;
  s.l_phi = a * s.mean_rho + off * s.mean_nu;
  s.l_psi = off * s.mean_rho + b * s.mean_nu;
  return s;
}

double backprop_curvature(double terminal, double T, double s) {
  const double h = T - s;
  return terminal / (1.0 + h * terminal);
}

QuadraticPotential interpolated(const GaussianEotSolution& sol, PotentialSide side, double s) {
  if (!(s >= 0 && s < sol.T)) throw DomainError("interpolated: s must lie in [0, T)");
  const double p = side == PotentialSide::Forward ? sol.p_psi : sol.p_phi;
  const double l = side == PotentialSide::Forward ? sol.l_psi : sol.l_phi;
  const double h = sol.T - s;
  const double k = 1.0 + h * p;
  if (!(k > 0)) throw DomainError("interpolated: terminal curvature below -1/(T - s)");
  QuadraticPotential q;
  q.curvature = p / k;
  q.linear = -l / k;
  q.constant = 0.5 * std::log(k) - h * l * l / (2.0 * k);
  return q;
}

DiscreteMeasure discretize_gaussian(const GaussianMeasure& g, int n, double truncation) {
  const double v = scalar_variance(g, "discretize_gaussian");
  if (n < 1 || !(truncation > 0)) throw InvalidArgument("discretize_gaussian: need n >= 1 and truncation > 0");
  const boost::math::normal_distribution<double> std_normal;
  const double sd = std::sqrt(v);
  const double lo = boost::math::cdf(std_normal, -truncation);
  const double mass = 1.0 - 2.0 * lo;
  Eigen::MatrixXd atoms(1, n);
  auto pdf = [&](double z) { return std::isinf(z) ? 0.0 : boost::math::pdf(std_normal, z); };
  double za = -truncation;
  for (int k = 0; k < n; ++k) {
    const double zb = k + 1 == n ? truncation : boost::math::quantile(std_normal, lo + mass * (k + 1) / n);
    atoms(0, k) = g.mean[0] + sd * (pdf(za) - pdf(zb)) / (mass / n);
    za = zb;
  }
  return DiscreteMeasure(atoms, Eigen::VectorXd::Constant(n, 1.0 / n));
}

DiscretizationReport crosscheck_discretization(const GaussianEotSolution& sol, int n_atoms, double truncation,
                                               double tol) {
  if (n_atoms < 16) throw InvalidArgument("crosscheck_discretization: need at least 16 atoms");
  GaussianMeasure rho(Eigen::VectorXd::Constant(1, sol.mean_rho), Eigen::MatrixXd::Constant(1, 1, sol.var_rho));
  GaussianMeasure nu(Eigen::VectorXd::Constant(1, sol.mean_nu), Eigen::MatrixXd::Constant(1, 1, sol.var_nu));
  const DiscreteMeasure dr = discretize_gaussian(rho, n_atoms, truncation);
  const DiscreteMeasure dn = discretize_gaussian(nu, n_atoms, truncation);
  const EotSolution es = solve(dr, dn, sol.T, tol);

  DiscretizationReport r;
  r.n_atoms = n_atoms;
  const double mx = es.plan.x.row(0).dot(es.plan.row_marginal);
  const double my = es.plan.y.row(0).dot(es.plan.col_marginal);
  double c = 0.0;
  for (int j = 0; j < es.plan.cols(); ++j)
    for (int i = 0; i < es.plan.rows(); ++i)
      c += es.plan.weights(i, j) * (es.plan.x(0, i) - mx) * (es.plan.y(0, j) - my);
  r.c_discrete = c;
  r.c_error = std::abs(c - sol.c);

  const InterpolatedPotential psi = InterpolatedPotential::forward(es.problem, es.duals);
  const QuadraticPotential q = interpolated(sol, PotentialSide::Forward, 0.0);
  const double sd = std::sqrt(sol.var_rho);
  for (double k : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    Vec z(1);
    z[0] = sol.mean_rho + k * sd;
    r.grad_error = std::max(r.grad_error, std::abs(psi.gradient(0.0, z)[0] - q.gradient(z[0])));
  }
  r.error = std::max(r.c_error, r.grad_error);
  return r;
}

nlohmann::json to_json(const GaussianEotSolution& s) {
  return {{"T", s.T},         {"mean_rho", s.mean_rho}, {"mean_nu", s.mean_nu}, {"var_rho", s.var_rho},
          {"var_nu", s.var_nu}, {"c", s.c},             {"p_phi", s.p_phi},     {"p_psi", s.p_psi},
          {"l_phi", s.l_phi},   {"l_psi", s.l_psi},     {"residual", s.residual}};
}

}  // namespace entlab
