#include "entlab/eot.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace entlab {

EotProblem::EotProblem(DiscreteMeasure r, DiscreteMeasure m, double t)
    : rho(std::move(r)), mu(std::move(m)), T(t) {
  if (rho.dim() != mu.dim()) throw InvalidArgument("EotProblem: dimension mismatch");
  if (!(T > 0) || !std::isfinite(T)) throw InvalidArgument("EotProblem: T must be positive");
}

void apply_gauge(DualVariables& d, const Eigen::VectorXd& mu_weights) {
  const double c = mu_weights.dot(d.log_g);
  d.log_g.array() -= c;
  d.log_f.array() += c;
  d.gauge = kGaugeTag;
}

Eigen::MatrixXd gibbs_log_kernel(const EotProblem& p) {
  const int n = p.rho.size(), m = p.mu.size();
  Eigen::MatrixXd k(n, m);
  const double s = -0.5 / p.T;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) k(i, j) = s * (p.rho.atoms.col(i) - p.mu.atoms.col(j)).squaredNorm();
  return k;
}

namespace {

// log sum_k exp(v_k), max-subtracted.
template <class V>
double lse(const V& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

// out_j = log sum_i exp(c_i + k(i, j)) over columns of k.
void column_lse(const Eigen::MatrixXd& k, const Eigen::VectorXd& c, Eigen::VectorXd& out) {
  const int n = static_cast<int>(k.rows()), m = static_cast<int>(k.cols());
  out.resize(m);
  for (int j = 0; j < m; ++j) {
    const double* col = k.col(j).data();
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) mx = std::max(mx, c[i] + col[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(c[i] + col[i] - mx);
    out[j] = mx + std::log(s);
  }
}

Eigen::VectorXd log_weights(const Eigen::VectorXd& w) { return w.array().log().matrix(); }

struct Workspace {
  Eigen::MatrixXd k;   // n x m
  Eigen::MatrixXd kt;  // m x n
  Eigen::VectorXd log_a, log_b;
};

Workspace make_workspace(const EotProblem& p, const Eigen::MatrixXd* log_k = nullptr) {
  Workspace w;
  w.k = log_k ? *log_k : gibbs_log_kernel(p);
  w.kt = w.k.transpose();
  w.log_a = log_weights(p.rho.weights);
  w.log_b = log_weights(p.mu.weights);
  return w;
}

Eigen::VectorXd rho_fit_ws(const Workspace& w, const Eigen::VectorXd& log_g) {
  Eigen::VectorXd l;
  column_lse(w.kt, w.log_b + log_g, l);
  return -l;
}

}  // namespace

Eigen::VectorXd rho_fit(const EotProblem& p, const Eigen::MatrixXd& log_k, const Eigen::VectorXd& log_g) {
  return rho_fit_ws(make_workspace(p, &log_k), log_g);
}

Eigen::VectorXd mu_fit(const EotProblem& p, const Eigen::MatrixXd& log_k, const Eigen::VectorXd& log_f) {
  Eigen::VectorXd l;
  column_lse(log_k, log_weights(p.rho.weights) + log_f, l);
  return -l;
}

SinkhornResult sinkhorn_solve(const EotProblem& p, const SinkhornOptions& opt) {
  if (!(opt.tol > 0)) throw InvalidArgument("sinkhorn_solve: tol must be positive");
  if (opt.max_iter < 0) throw InvalidArgument("sinkhorn_solve: max_iter must be >= 0");
  const int m = p.mu.size();
  const Workspace w = make_workspace(p);
  SinkhornResult res;
  SinkhornTrace& tr = res.trace;
  DualVariables& d = res.duals;
  d.log_g = opt.init_log_g ? *opt.init_log_g : Eigen::VectorXd::Zero(m);
  if (d.log_g.size() != m) throw InvalidArgument("sinkhorn_solve: init_log_g has wrong length");
  Eigen::VectorXd l, col;
  using clock = std::chrono::steady_clock;
  for (int n = 0;; ++n) {
    const auto t0 = clock::now();
    d.log_f = rho_fit_ws(w, d.log_g);
    ++tr.updates;
    column_lse(w.k, w.log_a + d.log_f, l);
    col = (w.log_b + d.log_g + l).array().exp().matrix();
    const double r = (col - p.mu.weights).cwiseAbs().sum();
    if (!std::isfinite(r) || !d.log_f.allFinite()) throw NonFinite("sinkhorn_solve: non-finite iterate");
    tr.residual.push_back(r);
    if (opt.record_duals) {
      DualVariables snap = d;
      apply_gauge(snap, p.mu.weights);
      tr.duals.push_back(std::move(snap));
      tr.wrong_marginal.push_back(col / col.sum());
    }
    if (opt.record_w2) {
      const DiscreteMeasure wm = p.mu.with_weights(col / col.sum());
      tr.w2_wrong.push_back(wasserstein2(p.mu, wm));
    }
    if (r <= opt.tol) {
      tr.converged = true;
      if (opt.record_timing)
        tr.wall_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
      break;
    }
    if (n >= opt.max_iter) {
      apply_gauge(d, p.mu.weights);
      throw NotConverged("sinkhorn_solve: no convergence within max_iter", std::move(tr));
    }
    d.log_g = -l;
    ++tr.updates;
    ++tr.iterations;
    if (opt.record_timing)
      tr.wall_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
  }
  apply_gauge(d, p.mu.weights);
  return res;
}

Plan assemble_plan(const EotProblem& p, const DualVariables& d) {
  if (!d.log_f.allFinite() || !d.log_g.allFinite()) throw NonFinite("assemble_plan: non-finite duals");
  const Eigen::MatrixXd k = gibbs_log_kernel(p);
  const Eigen::VectorXd la = log_weights(p.rho.weights) + d.log_f;
  const Eigen::VectorXd lb = log_weights(p.mu.weights) + d.log_g;
  Eigen::MatrixXd logw = k;
  logw.colwise() += la;
  logw.rowwise() += lb.transpose();
  const double z = lse(logw.reshaped());
  Plan plan;
  plan.weights = (logw.array() - z).exp().matrix();
  plan.row_marginal = plan.weights.rowwise().sum();
  plan.col_marginal = plan.weights.colwise().sum().transpose();
  plan.x = p.rho.atoms;
  plan.y = p.mu.atoms;
  plan.T = p.T;
  return plan;
}

DiscreteMeasure wrong_marginal(const Plan& plan, Side side) {
  Eigen::VectorXd w = side == Side::First ? plan.row_marginal : plan.col_marginal;
  w /= w.sum();
  DiscreteMeasure m;
  m.atoms = side == Side::First ? plan.x : plan.y;
  m.weights = std::move(w);
  return m;
}

namespace {
void check_grid(const Plan& p, const Plan& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.x.rows() != q.x.rows() ||
      ((p.x - q.x).colwise().norm().array() > kAtomTol).any() ||
      ((p.y - q.y).colwise().norm().array() > kAtomTol).any())
    throw GridMismatch("plans are defined on different atom grids");
}
}  // namespace

double plan_relative_entropy(const Plan& p, const Plan& q) {
  check_grid(p, q);
  double h = 0.0;
  for (int j = 0; j < p.cols(); ++j)
    for (int i = 0; i < p.rows(); ++i) {
      const double a = p.weights(i, j);
      if (a > 0) h += a * std::log(a / q.weights(i, j));
    }
  return std::max(0.0, h);
}

double conditional_entropy_term(const Plan& p, const Plan& q) {
  check_grid(p, q);
  double h = 0.0;
  for (int j = 0; j < p.cols(); ++j) {
    const double pj = p.col_marginal[j], qj = q.col_marginal[j];
    if (pj <= 0) continue;
    for (int i = 0; i < p.rows(); ++i) {
      const double a = p.weights(i, j);
      if (a > 0) h += a * std::log((a / pj) / (q.weights(i, j) / qj));
    }
  }
  return std::max(0.0, h);
}

double schrodinger_residual(const EotProblem& p, const DualVariables& d) {
  const Workspace w = make_workspace(p);
  Eigen::VectorXd l;
  column_lse(w.kt, w.log_b + d.log_g, l);
  double r = (d.log_f + l).cwiseAbs().maxCoeff();
  column_lse(w.k, w.log_a + d.log_f, l);
  r = std::max(r, (d.log_g + l).cwiseAbs().maxCoeff());
  return r;
}

double eot_objective(const Plan& plan, const EotProblem& p) {
  double cost = 0.0, ent = 0.0;
  for (int j = 0; j < plan.cols(); ++j)
    for (int i = 0; i < plan.rows(); ++i) {
      const double w = plan.weights(i, j);
      if (w <= 0) continue;
      cost += 0.5 * w * (plan.x.col(i) - plan.y.col(j)).squaredNorm();
      ent += w * std::log(w / (p.rho.weights[i] * p.mu.weights[j]));
    }
  return cost + p.T * ent;
}

EotSolution solve(const DiscreteMeasure& rho, const DiscreteMeasure& mu, double T, double tol,
                  int max_iter) {
  EotSolution s;
  s.problem = EotProblem(rho, mu, T);
  SinkhornOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  SinkhornResult r = sinkhorn_solve(s.problem, opt);
  s.duals = std::move(r.duals);
  s.trace = std::move(r.trace);
  s.plan = assemble_plan(s.problem, s.duals);
  return s;
}

nlohmann::json to_json(const DualVariables& d) {
  return {{"log_f", std::vector<double>(d.log_f.data(), d.log_f.data() + d.log_f.size())},
          {"log_g", std::vector<double>(d.log_g.data(), d.log_g.data() + d.log_g.size())},
          {"gauge", d.gauge}};
}

nlohmann::json to_json(const Plan& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < p.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (int j = 0; j < p.cols(); ++j) r.push_back(p.weights(i, j));
    rows.push_back(r);
  }
  return {{"T", p.T}, {"weights", rows}};
}

}  // namespace entlab
