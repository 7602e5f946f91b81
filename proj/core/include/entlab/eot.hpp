#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entlab/errors.hpp"
#include "entlab/measures.hpp"

namespace entlab {

struct EotProblem {
  DiscreteMeasure rho;
  DiscreteMeasure mu;
  double T = 1.0;

  EotProblem() = default;
  EotProblem(DiscreteMeasure rho, DiscreteMeasure mu, double T);
};

inline constexpr const char* kGaugeTag = "mu_mean_zero";

// Log-domain scalings: pi_ij = a_i b_j exp(log_f_i + log_g_j - |x_i - y_j|^2 / 2T).
struct DualVariables {
  Eigen::VectorXd log_f;
  Eigen::VectorXd log_g;
  std::string gauge = kGaugeTag;
};

// Shift (f + c, g - c) so that sum_j b_j g_j = 0.
void apply_gauge(DualVariables& d, const Eigen::VectorXd& mu_weights);

struct Plan {
  Eigen::MatrixXd weights;  // rows: rho atoms, cols: mu atoms
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
  Eigen::MatrixXd x;  // rho atoms, d x n
  Eigen::MatrixXd y;  // mu atoms, d x m
  double T = 1.0;

  int rows() const { return static_cast<int>(weights.rows()); }
  int cols() const { return static_cast<int>(weights.cols()); }
};

struct SinkhornTrace {
  // One entry per rho-fit n = 0, 1, ...: L1 distance of the second marginal of
  // pi^{n+1,n} to mu.
  std::vector<double> residual;
  // Duals right after each rho-fit, i.e. (f^{n+1}, g^n); gauged. Optional.
  std::vector<DualVariables> duals;
  // Second marginal weights of pi^{n+1,n}. Recorded with duals.
  std::vector<Eigen::VectorXd> wrong_marginal;
  std::vector<double> w2_wrong;
  std::vector<std::int64_t> wall_ns;
  int iterations = 0;  // mu-updates performed
  int updates = 0;     // half-steps performed
  bool converged = false;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, SinkhornTrace trace)
      : Error(what, 3), trace_(std::move(trace)) {}
  const SinkhornTrace& trace() const { return trace_; }

 private:
  SinkhornTrace trace_;
};

struct SinkhornOptions {
  double tol = 1e-10;
  int max_iter = 100000;
  std::optional<Eigen::VectorXd> init_log_g;
  bool record_duals = false;
  bool record_w2 = false;
  // Wall time per iteration; off by default so traces stay deterministic.
  bool record_timing = false;
};

struct SinkhornResult {
  DualVariables duals;
  SinkhornTrace trace;
};

// -|x_i - y_j|^2 / (2T), n x m.
Eigen::MatrixXd gibbs_log_kernel(const EotProblem& p);

SinkhornResult sinkhorn_solve(const EotProblem& p, const SinkhornOptions& opt = {});

// Half-steps. log_k is gibbs_log_kernel(p).
Eigen::VectorXd rho_fit(const EotProblem& p, const Eigen::MatrixXd& log_k, const Eigen::VectorXd& log_g);
Eigen::VectorXd mu_fit(const EotProblem& p, const Eigen::MatrixXd& log_k, const Eigen::VectorXd& log_f);

Plan assemble_plan(const EotProblem& p, const DualVariables& d);

enum class Side { First, Second };
DiscreteMeasure wrong_marginal(const Plan& plan, Side side);

double plan_relative_entropy(const Plan& p, const Plan& q);
// E_mu[ H(p(.|Y) | q(.|Y)) ], conditioning on the second coordinate.
double conditional_entropy_term(const Plan& p, const Plan& q);
// Sup-norm log-domain defect of both equations of the discrete Schrodinger system.
double schrodinger_residual(const EotProblem& p, const DualVariables& d);

// sum pi |x-y|^2/2 + T H(pi | rho x mu).
double eot_objective(const Plan& plan, const EotProblem& p);

// The entropic plan of (rho, mu) at horizon T, solved at tolerance tol.
struct EotSolution {
  EotProblem problem;
  DualVariables duals;
  Plan plan;
  SinkhornTrace trace;
};
EotSolution solve(const DiscreteMeasure& rho, const DiscreteMeasure& mu, double T,
                  double tol = 1e-12, int max_iter = 100000);

nlohmann::json to_json(const DualVariables& d);
nlohmann::json to_json(const Plan& p);

}  // namespace entlab
