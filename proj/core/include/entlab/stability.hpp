#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "entlab/constants.hpp"
#include "entlab/csv.hpp"
#include "entlab/eot.hpp"
#include "entlab/mixture.hpp"

namespace entlab {

// rho fixed; mu and nu share atoms (weight mode) or share weights (location mode).
struct StabilityInstance {
  std::string id;
  DiscreteMeasure rho, mu, nu;
  double T = 1.0;
};

enum class PerturbationMode { Weight, Location };

struct StabilityReport {
  std::string instance_id;
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
  double w2 = 0.0;
  double T = 1.0;
  double R_or_alpha = 0.0;
  double tolerance = 0.0;  // quadrature error added to the threshold
};

// lhs <= rhs + 1e-8 max(1, rhs) + extra.
bool inequality_holds(double lhs, double rhs, double extra = 0.0);

struct StabilityOptions {
  QuadratureOrders orders{24, 48, 20};  // campaign budget; coarse() halves these
  std::vector<double> s_fractions{0.25, 0.5, 0.75};
  std::vector<double> deltas{0.25, 0.5, 0.8};
  double solve_tol = 1e-12;
  int pointwise_pairs = 3;   // (y, z) pairs per s for the pinned-start bound
  int t_points = 10;         // third-derivative grid in t
  int random_probes = 8;
  std::uint64_t seed = 0;
  bool sign_flip = false;    // fault hook: negates every RHS
};

// Everything both sides of the checks draw on, computed once per instance.
struct StabilityContext {
  StabilityInstance inst;
  PerturbationMode mode = PerturbationMode::Weight;
  EotSolution sol_mu;  // (rho, mu)
  EotSolution sol_nu;  // (rho, nu)
  double w2 = 0.0;
  double w2sq = 0.0;
  double h_mu_nu = 0.0;  // +inf in location mode
  double R_rho = 0.0;    // support radius about the mean
  double R_nu = 0.0;
  ConstantsReport constants;
};

StabilityContext prepare(const StabilityInstance& inst, const StabilityOptions& opt,
                         PerturbationMode mode = PerturbationMode::Weight);

// Individual checks. Each returns one row (the worst case for gridded checks).
StabilityReport check_entropic(const StabilityContext& c, const StabilityOptions& o);
StabilityReport check_conditional(const StabilityContext& c, const StabilityOptions& o);
StabilityReport check_grad_eta(const StabilityContext& c, const StabilityOptions& o);
StabilityReport check_pointwise(const StabilityContext& c, const StabilityOptions& o);
std::vector<StabilityReport> check_pointwise_time_s(const StabilityContext& c, const StabilityOptions& o);
std::vector<StabilityReport> check_time_s_entropy(const StabilityContext& c, const StabilityOptions& o);
std::vector<StabilityReport> check_theta_energy(const StabilityContext& c, const StabilityOptions& o);
std::vector<StabilityReport> check_gradient_stability(const StabilityContext& c, const StabilityOptions& o);
std::vector<StabilityReport> check_hessian_lemmas(const StabilityContext& c, const StabilityOptions& o);
StabilityReport check_hessian_stability(const StabilityContext& c, const StabilityOptions& o);
StabilityReport check_third_derivative(const StabilityContext& c, const StabilityOptions& o);

// Disintegration identity: conditional term = plan entropy - marginal entropy.
double disintegration_defect(const StabilityContext& c);

// Every check that applies in the context's mode.
std::vector<StabilityReport> run_checks(const StabilityContext& c, const StabilityOptions& o);

struct CampaignSpec {
  int n_instances = 200;
  std::uint64_t seed = 1;
  double eps_min = 0.01, eps_max = 0.3;
  double T_min = 0.25, T_max = 4.0;
  int max_atoms_1d = 32;
  int max_atoms_2d = 12;
  double fraction_2d = 0.25;
  PerturbationMode mode = PerturbationMode::Weight;
};

// Instance k depends only on (seed, k).
StabilityInstance generate_instance(const CampaignSpec& spec, int k);

struct CampaignResult {
  std::vector<StabilityReport> reports;
  int violations = 0;
  int instances = 0;
};
CampaignResult run_campaign(const CampaignSpec& spec, const StabilityOptions& opt, int jobs = 1);

CsvTable stability_table(const std::vector<StabilityReport>& reports);
nlohmann::json to_json(const StabilityReport& r);

// Scaling sweeps.
struct SweepRow {
  std::string family;
  std::string grid = "T";  // which axis the row belongs to: "T" or "R"
  double T = 0.0;
  double param = 0.0;       // R or alpha
  double w2 = 0.0;
  double grad_ratio = 0.0;  // gradient LHS / W2^2
  double grad_bound = 0.0;  // C_rho_nu / T^2
  double grad_envelope = 0.0;
  double hess_lhs = 0.0;
  double hess_bound = 0.0;  // A W2 + K W2^2 / T^2
  double hess_envelope = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double prefactor = 0.0;        // max over the grid of grad_bound / grad_envelope
  double constant_slope = 0.0;   // log-log slope in T of grad_bound
  double measured_slope = 0.0;   // log-log slope in T of grad_ratio
  bool below_envelope = true;
  bool hessian_ok = true;
};

struct SweepSpec {
  std::vector<double> T_grid;   // geometric
  std::vector<double> R_grid;   // compact only, at T = R_grid_T
  double R = 2.0;               // compact radius along the T-grid
  double R_grid_T = 1.0;
  double alpha = 0.2;           // log-concave curvature
  double eps = 0.1;
};
std::vector<double> geometric_grid(double lo, double hi, int n);
SweepResult compact_sweep(const SweepSpec& spec, const StabilityOptions& opt);
SweepResult logconcave_sweep(const SweepSpec& spec);
CsvTable sweep_table(const SweepResult& r);

}  // namespace entlab
