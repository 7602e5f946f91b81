#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "entlab/measures.hpp"
#include "entlab/potentials.hpp"

namespace entlab {

// Closed-form entropic problem between two 1D Gaussians. Terminal potentials
// phi_T = -log(rho f), psi_T = -log(nu g) are quadratics
//   phi_T(x) = p_phi x^2 / 2 - l_phi x,   psi_T(y) = p_psi y^2 / 2 - l_psi y,
// with zero constants (the module gauge), so the plan density is
// proportional to exp(-phi_T(x) - psi_T(y) - (x - y)^2 / 2T).
struct GaussianEotSolution {
  double T = 1.0;
  double mean_rho = 0.0, mean_nu = 0.0;
  double var_rho = 1.0, var_nu = 1.0;
  double c = 0.0;  // plan cross-covariance
  double p_phi = 0.0, p_psi = 0.0;
  double l_phi = 0.0, l_psi = 0.0;
  double residual = 0.0;  // fixed-point residual of the scalar system
  int iterations = 0;
};

GaussianEotSolution solve_gaussian(const GaussianMeasure& rho, const GaussianMeasure& nu, double T);

// h(z) = curvature z^2 / 2 + linear z + constant.
struct QuadraticPotential {
  double curvature = 0.0;
  double linear = 0.0;
  double constant = 0.0;

  double value(double z) const { return 0.5 * curvature * z * z + linear * z + constant; }
  double gradient(double z) const { return curvature * z + linear; }
  double hessian() const { return curvature; }
};

// psi_s (forward) or phi_s (backward): -log of the heat semigroup over T - s
// applied to exp(-terminal), same normalization as InterpolatedPotential.
QuadraticPotential interpolated(const GaussianEotSolution& sol, PotentialSide side, double s);

// (a^{-1} + (T - s))^{-1} for terminal curvature a, written to stay finite at a = 0.
double backprop_curvature(double terminal, double T, double s);

// Equal-mass discretization of N(mean, var) truncated at +-truncation sd;
// atoms are bin conditional means, weights 1/n.
DiscreteMeasure discretize_gaussian(const GaussianMeasure& g, int n, double truncation);

struct DiscretizationReport {
  int n_atoms = 0;
  double c_discrete = 0.0;
  double c_error = 0.0;
  double grad_error = 0.0;  // max over probes of |psi_0' discrete - oracle|
  double error = 0.0;       // max of the two
};

DiscretizationReport crosscheck_discretization(const GaussianEotSolution& sol, int n_atoms,
                                               double truncation = 8.0, double tol = 1e-11);

nlohmann::json to_json(const GaussianEotSolution& s);

}  // namespace entlab
