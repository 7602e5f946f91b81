#include "entlab/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <numbers>

#include "entlab/errors.hpp"

namespace entlab {

namespace {

QuadratureRule legendre_unit(int n) {
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Physicists' Hermite nodes via the orthonormal three-term recurrence, then
// rescaled to the standard normal weight.
QuadratureRule hermite_normal(int n) {
  std::vector<double> x(n), w(n);
  const double pim4 = 0.7511255444649425;
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 1.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[n - 1 - i] = std::numbers::sqrt2 * x[i];
    rule.weights[n - 1 - i] = w[i] / std::sqrt(std::numbers::pi);
    total += rule.weights[n - 1 - i];
  }
  for (double& wi : rule.weights) wi /= total;
  return rule;
}

template <class Build>
const QuadratureRule& cached(std::map<int, QuadratureRule>& cache, std::mutex& mu, int n,
                             Build build) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be positive");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  QuadratureRule rule = cached(cache, mu, n, legendre_unit);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite_normal(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite_normal: n must be positive");
  static std::map<int, QuadratureRule> cache;
  static std::mutex mu;
  return cached(cache, mu, n, hermite_normal);
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, unsigned max_depth, double abs_tol) {
  QuadResult r;
  if (a == b) return r;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Piece {
    double a, b, value, error;
    unsigned depth;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto eval = [&](double lo, double hi, unsigned depth) {
    double err = 0.0;
    const double v = GK::integrate(f, lo, hi, 0, 0.0, &err);
    // boost reports the Kronrod-Gauss gap on the unit interval
    return Piece{lo, hi, v, err * 0.5 * std::abs(hi - lo), depth};
  };
  // global adaptive bisection of the worst piece
  std::priority_queue<Piece> heap;
  heap.push(eval(a, b, 0));
  double value = heap.top().value, error = heap.top().error;
  const std::size_t max_pieces = std::size_t{1} << std::min(max_depth, 16u);
  while (error > std::max(abs_tol, rel_tol * std::abs(value)) && heap.size() < max_pieces) {
    Piece p = heap.top();
    if (p.depth >= max_depth) break;
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    const Piece l = eval(p.a, mid, p.depth + 1), h = eval(mid, p.b, p.depth + 1);
    value += l.value + h.value - p.value;
    error += l.error + h.error - p.error;
    heap.push(l);
    heap.push(h);
  }
  // re-sum to avoid drift from incremental updates
  r.value = 0.0;
  r.error = 0.0;
  while (!heap.empty()) {
    r.value += heap.top().value;
    r.error += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(r.value)) throw NonFinite("integrate_adaptive: non-finite integral");
  return r;
}

}  // namespace entlab
