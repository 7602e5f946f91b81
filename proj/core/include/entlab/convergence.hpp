#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "entlab/csv.hpp"
#include "entlab/eot.hpp"

namespace entlab {

// One Sinkhorn iterate n, measured on the intermediate plan pi^{n+1,n}.
struct IterateRecord {
  int n = 0;
  double grad_err_sq = 0.0;   // |grad psi^n - grad psi^mu|^2 in L2(rho), s = 0
  double hess_err_l1 = 0.0;   // rho-average HS distance of the Hessians
  double plan_kl = 0.0;       // H(pi^mu | pi^{n+1,n})
  double marginal_kl = 0.0;   // H(mu | mu^{n+1,n})
  double w2_wrong = 0.0;      // W2(mu, mu^{n+1,n}); nan for d >= 2
  double tau_hat_n = 0.0;     // W2^2 / (2 H(mu | mu^{n+1,n})); nan when undefined
};

struct ConvergenceRun {
  EotProblem problem;
  int burn_in = 2;
  std::vector<IterateRecord> records;
  double Lambda = 0.0;           // R^2/T with R the larger support radius about the means
  double tau_hat = 0.0;
  double predicted_factor = 0.0;
  bool kl_monotone = true;       // monitored only
};

struct ConvergenceOptions {
  int n_max = 400;
  int burn_in = 2;
  double reference_tol = 1e-12;
  double floor = 1e-13;  // plan_kl below this is numerical noise
};

// Iterates until n_max or until plan_kl drops below the floor.
ConvergenceRun run_convergence(const EotProblem& problem, const ConvergenceOptions& opt = {});

// max over n >= N of W2^2 / (2 H); DegenerateRun if no iterate has H > 0.
double estimate_tau(const ConvergenceRun& run, double floor = 1e-13);

// 1 - T / (T + tau Lambda).
double predicted_contraction(double T, double tau, double Lambda);

struct ConvergenceVerdict {
  int points = 0;
  double c_hat = 0.0;
  double kl_r2 = 0.0;
  double predicted = 0.0;
  double grad_r2 = 0.0;
  double grad_prefactor = 0.0;
  double hess_r2 = 0.0;
  double hess_c1 = 0.0, hess_c2 = 0.0;
  bool rate_ok = false;   // c_hat <= predicted + 0.02
  bool kl_fit_ok = false; // R^2 >= 0.99
  bool grad_ok = false;   // R^2 >= 0.99
  bool hess_ok = false;   // R^2 >= 0.98
  bool pass() const { return rate_ok && kl_fit_ok && grad_ok && hess_ok; }
};

// Fits over iterates n >= N with plan_kl above the floor. InsufficientData
// below 8 such iterates.
ConvergenceVerdict fit_and_compare(const ConvergenceRun& run, double tau_hat, double Lambda,
                                   double floor = 1e-13);
// Same fits on raw series (index n, values); exposed for synthetic controls.
ConvergenceVerdict fit_series(const std::vector<double>& n, const std::vector<double>& plan_kl,
                              const std::vector<double>& grad_err_sq, const std::vector<double>& hess_err_l1,
                              double predicted);

CsvTable convergence_table(const ConvergenceRun& run);
nlohmann::json to_json(const ConvergenceVerdict& v);

}  // namespace entlab
