#pragma once

#include <functional>
#include <vector>

namespace entlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// n-point Gauss-Hermite rule for expectations under N(0, 1):
// E f(Z) ~ sum_k w_k f(x_k), sum_k w_k = 1.
QuadratureRule gauss_hermite_normal(int n);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Globally adaptive Gauss-Kronrod (31 point) on a finite interval: bisects
// the piece with the largest error until the summed error is below
// max(abs_tol, rel_tol |value|) or a piece reaches max_depth.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-13, unsigned max_depth = 30, double abs_tol = 0.0);

}  // namespace entlab
