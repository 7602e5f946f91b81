#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "entlab/eot.hpp"
#include "entlab/mixture.hpp"
#include "entlab/potentials.hpp"

namespace entlab {

// Forward runs rho -> mu with drift -grad psi_s; backward runs mu -> rho with
// drift -grad phi_s.
enum class Direction { Forward, Backward };

struct BridgeSpec {
  EotProblem problem;
  DualVariables duals;
  Direction direction = Direction::Forward;
  std::vector<double> time_grid;

  // Grid strictly increasing, starting at 0, ending at most T - h_min.
  void validate() const;
};

struct PathEnsemble {
  int n_paths = 0;
  int n_times = 0;
  int dim = 1;
  std::uint64_t seed = 0;
  std::string method = "exact";
  double dt = 0.0;
  std::vector<double> times;
  // Path-major: ((p * n_times) + k) * dim + a.
  std::vector<double> data;

  double at(int p, int k, int a = 0) const { return data[(static_cast<std::size_t>(p) * n_times + k) * dim + a]; }
  double& at(int p, int k, int a = 0) { return data[(static_cast<std::size_t>(p) * n_times + k) * dim + a]; }
  std::vector<double> slice(int k, int a = 0) const;
};

// Draw (i, j) from the plan, then a Brownian bridge between the two endpoints
// sampled sequentially on the grid. Path p uses stream (seed, p).
PathEnsemble sample_exact(const Plan& plan, const std::vector<double>& grid, int n_paths,
                          std::uint64_t seed, Direction dir = Direction::Forward);

// Euler-Maruyama with step at most dt between grid points. drift_sign = -1
// flips the drift (negative control only).
PathEnsemble simulate_em(const BridgeSpec& spec, int n_paths, double dt, std::uint64_t seed,
                         double drift_sign = 1.0);

struct CheckReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = true;
  nlohmann::json detail = nlohmann::json::object();
};
nlohmann::json to_json(const CheckReport& r);

// Forward slice at s against backward slice at T - s, two-sample KS per
// coordinate at level alpha.
CheckReport time_reversal_check(const Plan& plan, double s, int n_paths, std::uint64_t seed,
                                double alpha = 0.01);

// One-sample KS of EM slices against the exact mixture CDF.
CheckReport em_vs_exact_check(const BridgeSpec& spec, const Plan& plan, int n_paths, double dt,
                              std::uint64_t seed, double alpha = 0.01);

struct WeakOrderReport {
  std::vector<double> dts;
  std::vector<double> errors;  // |Q(dt) - Q(dt/2)|, mean plus second moment
  double slope = 0.0;
};
// Self-convergence with common random numbers: coarse increments are sums of
// the finest ones. Q is taken at the last grid time.
WeakOrderReport em_weak_order(const BridgeSpec& spec, int n_paths, const std::vector<double>& dts,
                              std::uint64_t seed);

struct MartingaleOptions {
  bool use_em = false;
  double dt = 1e-3;
  double drift_sign = 1.0;
};
// Paths started at atom `start` (a mu atom on the backward side, a rho atom on
// the forward side); compares E[grad h_s(X_s)] with grad h_0(start) at every
// time. statistic is the largest |difference| / SE, threshold 3.
CheckReport martingale_check(const EotProblem& problem, const DualVariables& duals, Direction side,
                             int start, const std::vector<double>& times, int n_paths,
                             std::uint64_t seed, const MartingaleOptions& opt = {});

// E|(m_a(z) - m_b(z)) / (T - s)|^2 over a mixture law: the squared drift gap of
// two interpolated potentials of the same side.
double drift_gap_energy(const MixtureLaw& law, const InterpolatedPotential& a,
                        const InterpolatedPotential& b, double s, int order, double prune = 1e-14);

// 1/2 int_0^{delta T} E|drift gap|^2 ds by Gauss-Legendre in s and mixture
// quadrature in space. Backward: phi^nu - phi^mu along the backward mu-law;
// forward: psi^nu - psi^mu along the forward mu-law. Error is the spread
// against the coarse orders.
QuadResult girsanov_energy(const EotSolution& sol_mu, const EotSolution& sol_nu, double delta,
                           Direction dir, const QuadratureOrders& q = {});

// Binary ensemble: four u64 (n_paths, n_times, d, seed) then doubles, path-major.
// The sidecar <path>.json carries times, method and dt.
void write_ensemble(const std::string& path, const PathEnsemble& e);
PathEnsemble read_ensemble(const std::string& path);

}  // namespace entlab
