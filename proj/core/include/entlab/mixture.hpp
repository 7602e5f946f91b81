#pragma once

#include <Eigen/Core>

#include "entlab/eot.hpp"
#include "entlab/quadrature.hpp"
#include "entlab/types.hpp"

namespace entlab {

// Isotropic Gaussian mixture sum_k w_k N(m_k, v I). v = 0 is a discrete law.
struct MixtureLaw {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;  // d x K
  double variance = 0.0;

  int dim() const { return static_cast<int>(means.rows()); }
  int size() const { return static_cast<int>(means.cols()); }
};

// Law of the bridge at time t in [0, T]: components (i, j) with weight pi_ij,
// mean x_i + (t/T)(y_j - x_i), variance t(T - t)/T. Components lighter than
// prune are dropped and the rest renormalized.
MixtureLaw forward_law(const Plan& plan, double t, double prune = 0.0);
// Backward bridge (started from the second marginal) at backward time s:
// the forward law at T - s.
MixtureLaw backward_law(const Plan& plan, double s, double prune = 0.0);
// Backward bridge pinned at y_j at backward time 0, seen at backward time s.
MixtureLaw conditional_backward_law(const Plan& plan, int j, double s);
// Forward bridge pinned at x_i at time 0, seen at time t.
MixtureLaw conditional_forward_law(const Plan& plan, int i, double t);

double mixture_log_density(const MixtureLaw& law, const Vec& z);
// CDF of coordinate `coord`.
double mixture_cdf(const MixtureLaw& law, double z, int coord = 0);

struct QuadNodes {
  Eigen::MatrixXd points;  // d x N
  Eigen::VectorXd weights;
  int size() const { return static_cast<int>(weights.size()); }
};
// Tensor Gauss-Hermite nodes (order per axis) around every component;
// node weights below prune are dropped.
QuadNodes mixture_nodes(const MixtureLaw& law, int order, double prune = 1e-14);

template <class F>
double expectation(const QuadNodes& q, F&& f) {
  double acc = 0.0;
  for (int k = 0; k < q.size(); ++k) acc += q.weights[k] * f(Vec(q.points.col(k)));
  return acc;
}

struct QuadratureOrders {
  int legendre = 64;     // nodes in time
  int hermite_1d = 128;  // nodes per component, d = 1
  int hermite_2d = 64;   // nodes per axis and component, d >= 2
  double prune = 1e-14;

  int hermite(int d) const { return d == 1 ? hermite_1d : hermite_2d; }
  // Half-order companion used for error estimates.
  QuadratureOrders coarse() const;
};

// KL(a | b) between mixtures with equal positive variance. d = 1 by adaptive
// Gauss-Kronrod over the union of component supports; d >= 2 by per-component
// Hermite quadrature, error from the coarse order.
QuadResult mixture_kl(const MixtureLaw& a, const MixtureLaw& b, const QuadratureOrders& q = {});

}  // namespace entlab
