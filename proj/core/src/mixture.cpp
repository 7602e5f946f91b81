#include "entlab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "entlab/errors.hpp"

namespace entlab {

namespace {

MixtureLaw finish(std::vector<double>& w, std::vector<Vec>& m, int d, double var, double prune) {
  double kept = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] > prune) {
      kept += w[k];
      ++n;
    }
  if (n == 0 || !(kept > 0)) throw DegenerateRun("mixture law: every component pruned");
  MixtureLaw law;
  law.variance = var;
  law.weights.resize(n);
  law.means.resize(d, n);
  int c = 0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] > prune) {
      law.weights[c] = w[k] / kept;
      law.means.col(c) = m[k];
      ++c;
    }
  return law;
}

void check_time(double t, double T) {
  if (!(t >= 0.0 && t <= T)) throw DomainError("mixture law: time outside [0, T]");
}

}  // namespace

MixtureLaw forward_law(const Plan& plan, double t, double prune) {
  const double T = plan.T;
  check_time(t, T);
  const double r = t / T;
  const int d = static_cast<int>(plan.x.rows());
  std::vector<double> w;
  std::vector<Vec> m;
  w.reserve(plan.weights.size());
  m.reserve(plan.weights.size());
  for (int j = 0; j < plan.cols(); ++j)
    for (int i = 0; i < plan.rows(); ++i) {
      w.push_back(plan.weights(i, j));
      m.emplace_back((1.0 - r) * plan.x.col(i) + r * plan.y.col(j));
    }
  return finish(w, m, d, t * (T - t) / T, prune);
}

MixtureLaw backward_law(const Plan& plan, double s, double prune) {
  check_time(s, plan.T);
  return forward_law(plan, plan.T - s, prune);
}

MixtureLaw conditional_backward_law(const Plan& plan, int j, double s) {
  const double T = plan.T;
  check_time(s, T);
  if (j < 0 || j >= plan.cols()) throw InvalidArgument("conditional_backward_law: atom index out of range");
  const double r = s / T;
  const double mass = plan.weights.col(j).sum();
  std::vector<double> w;
  std::vector<Vec> m;
  for (int i = 0; i < plan.rows(); ++i) {
    w.push_back(plan.weights(i, j) / mass);
    m.emplace_back((1.0 - r) * plan.y.col(j) + r * plan.x.col(i));
  }
  return finish(w, m, static_cast<int>(plan.x.rows()), s * (T - s) / T, 0.0);
}

MixtureLaw conditional_forward_law(const Plan& plan, int i, double t) {
  const double T = plan.T;
  check_time(t, T);
  if (i < 0 || i >= plan.rows()) throw InvalidArgument("conditional_forward_law: atom index out of range");
  const double r = t / T;
  const double mass = plan.weights.row(i).sum();
  std::vector<double> w;
  std::vector<Vec> m;
  for (int j = 0; j < plan.cols(); ++j) {
    w.push_back(plan.weights(i, j) / mass);
    m.emplace_back((1.0 - r) * plan.x.col(i) + r * plan.y.col(j));
  }
  return finish(w, m, static_cast<int>(plan.x.rows()), t * (T - t) / T, 0.0);
}

double mixture_log_density(const MixtureLaw& law, const Vec& z) {
  if (!(law.variance > 0)) throw DomainError("mixture_log_density: law has no density");
  const int d = law.dim(), K = law.size();
  const double c = -0.5 / law.variance;
  double mx = -std::numeric_limits<double>::infinity();
  // two passes keep this allocation free
  for (int k = 0; k < K; ++k) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double t = z[a] - law.means(a, k);
      r2 += t * t;
    }
    mx = std::max(mx, std::log(law.weights[k]) + c * r2);
  }
  double s = 0.0;
  for (int k = 0; k < K; ++k) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double t = z[a] - law.means(a, k);
      r2 += t * t;
    }
    s += std::exp(std::log(law.weights[k]) + c * r2 - mx);
  }
  return mx + std::log(s) - 0.5 * d * std::log(2.0 * std::numbers::pi * law.variance);
}

double mixture_cdf(const MixtureLaw& law, double z, int coord) {
  if (coord < 0 || coord >= law.dim()) throw InvalidArgument("mixture_cdf: coordinate out of range");
  double acc = 0.0;
  if (law.variance > 0) {
    const double sd = std::sqrt(law.variance);
    for (int k = 0; k < law.size(); ++k)
      acc += law.weights[k] * 0.5 * std::erfc(-(z - law.means(coord, k)) / (sd * std::numbers::sqrt2));
  } else {
    for (int k = 0; k < law.size(); ++k)
      if (law.means(coord, k) <= z) acc += law.weights[k];
  }
  return std::min(1.0, acc);
}

QuadNodes mixture_nodes(const MixtureLaw& law, int order, double prune) {
  const int d = law.dim(), K = law.size();
  QuadNodes q;
  if (!(law.variance > 0)) {
    q.points = law.means;
    q.weights = law.weights;
    return q;
  }
  const QuadratureRule gh = gauss_hermite_normal(order);
  const double sd = std::sqrt(law.variance);
  int per = 1;
  for (int a = 0; a < d; ++a) per *= order;
  std::vector<double> w;
  std::vector<Vec> pts;
  w.reserve(static_cast<std::size_t>(K) * per);
  pts.reserve(static_cast<std::size_t>(K) * per);
  std::array<int, kMaxDim> idx{};
  for (int k = 0; k < K; ++k) {
    for (int flat = 0; flat < per; ++flat) {
      int rem = flat;
      double wt = law.weights[k];
      for (int a = 0; a < d; ++a) {
        idx[a] = rem % order;
        rem /= order;
        wt *= gh.weights[idx[a]];
      }
      if (wt < prune) continue;
      Vec p(d);
      for (int a = 0; a < d; ++a) p[a] = law.means(a, k) + sd * gh.nodes[idx[a]];
      w.push_back(wt);
      pts.push_back(p);
    }
  }
  q.points.resize(d, static_cast<int>(w.size()));
  q.weights.resize(static_cast<int>(w.size()));
  for (std::size_t n = 0; n < w.size(); ++n) {
    q.points.col(static_cast<int>(n)) = pts[n];
    q.weights[static_cast<int>(n)] = w[n];
  }
  return q;
}

QuadratureOrders QuadratureOrders::coarse() const {
  QuadratureOrders c = *this;
  c.legendre = std::max(4, legendre / 2);
  c.hermite_1d = std::max(4, hermite_1d / 2);
  c.hermite_2d = std::max(4, hermite_2d / 2);
  return c;
}

QuadResult mixture_kl(const MixtureLaw& a, const MixtureLaw& b, const QuadratureOrders& q) {
  if (a.dim() != b.dim()) throw InvalidArgument("mixture_kl: dimension mismatch");
  if (!(a.variance > 0) || std::abs(a.variance - b.variance) > 1e-14 * a.variance)
    throw DomainError("mixture_kl: laws need equal positive variance");
  const int d = a.dim();
  if (d == 1) {
    const double sd = std::sqrt(a.variance);
    const double lo = a.means.minCoeff() - 12.0 * sd, hi = a.means.maxCoeff() + 12.0 * sd;
    // split at component spacing so the adaptive rule sees every bump
    const int pieces = std::clamp(static_cast<int>((hi - lo) / (2.0 * sd)), 1, 4096);
    QuadResult total;
    for (int p = 0; p < pieces; ++p) {
      const double l = lo + (hi - lo) * p / pieces, h = lo + (hi - lo) * (p + 1) / pieces;
      const QuadResult r = integrate_adaptive(
          [&](double x) {
            Vec z(1);
            z[0] = x;
            const double la = mixture_log_density(a, z);
            return std::exp(la) * (la - mixture_log_density(b, z));
          },
          l, h, 1e-12, 20, 1e-16);
      total.value += r.value;
      total.error += r.error;
    }
    return total;
  }
  auto kl_at = [&](int order) {
    const QuadNodes n = mixture_nodes(a, order, q.prune);
    return expectation(n, [&](const Vec& z) { return mixture_log_density(a, z) - mixture_log_density(b, z); });
  };
  QuadResult r;
  r.value = kl_at(q.hermite(d));
  r.error = std::abs(r.value - kl_at(q.coarse().hermite(d)));
  return r;
}

}  // namespace entlab
