#include "entlab/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "entlab/errors.hpp"
#include "entlab/rng.hpp"
#include "entlab/stats.hpp"

namespace entlab {

void BridgeSpec::validate() const {
  if (time_grid.empty() || time_grid.front() != 0.0) throw InvalidArgument("bridge: time grid must start at 0");
  for (std::size_t k = 1; k < time_grid.size(); ++k)
    if (!(time_grid[k] > time_grid[k - 1])) throw InvalidArgument("bridge: time grid must be strictly increasing");
  if (time_grid.back() > problem.T * (1.0 - kHMinRel))
    throw HorizonTooClose("bridge: grid reaches past T - h_min");
  if (duals.log_f.size() != problem.rho.size() || duals.log_g.size() != problem.mu.size())
    throw InvalidArgument("bridge: duals do not match the problem");
}

std::vector<double> PathEnsemble::slice(int k, int a) const {
  std::vector<double> v(n_paths);
  for (int p = 0; p < n_paths; ++p) v[p] = at(p, k, a);
  return v;
}

namespace {

void check_grid(const std::vector<double>& grid, double T) {
  if (grid.empty() || grid.front() != 0.0) throw InvalidArgument("bridge: time grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw InvalidArgument("bridge: time grid must be strictly increasing");
  if (grid.back() > T) throw DomainError("bridge: grid beyond T");
}

// Sequential Brownian bridge from `from` at 0 to `to` at T on the grid.
void fill_bridge(PathEnsemble& e, int p, const Vec& from, const Vec& to, double T, CounterRng& rng) {
  const int d = e.dim;
  Vec x = from;
  for (int a = 0; a < d; ++a) e.at(p, 0, a) = x[a];
  for (int k = 1; k < e.n_times; ++k) {
    const double t0 = e.times[k - 1], t1 = e.times[k];
    if (t1 >= T) {
      x = to;
    } else {
      const double r = (t1 - t0) / (T - t0);
      const double sd = std::sqrt((t1 - t0) * (T - t1) / (T - t0));
      for (int a = 0; a < d; ++a) x[a] += r * (to[a] - x[a]) + sd * rng.normal();
    }
    for (int a = 0; a < d; ++a) e.at(p, k, a) = x[a];
  }
}

PathEnsemble make_ensemble(const std::vector<double>& grid, int n_paths, int d, std::uint64_t seed,
                           const char* method, double dt) {
  if (n_paths < 1) throw InvalidArgument("bridge: n_paths must be >= 1");
  PathEnsemble e;
  e.n_paths = n_paths;
  e.n_times = static_cast<int>(grid.size());
  e.dim = d;
  e.seed = seed;
  e.method = method;
  e.dt = dt;
  e.times = grid;
  e.data.assign(static_cast<std::size_t>(n_paths) * e.n_times * d, 0.0);
  return e;
}

// Euler-Maruyama for dX = sign (m_s(X) - X)/(T - s) ds + dB from a start per path.
template <class Start>
PathEnsemble run_em(const InterpolatedPotential& pot, const std::vector<double>& grid, int n_paths,
                    double dt, std::uint64_t seed, double sign, Start&& start) {
  if (!(dt > 0)) throw InvalidArgument("simulate_em: dt must be positive");
  const double T = pot.T();
  const int d = pot.dim();
  PathEnsemble e = make_ensemble(grid, n_paths, d, seed, "em", dt);
  for (int p = 0; p < n_paths; ++p) {
    CounterRng rng(seed, static_cast<std::uint64_t>(p));
    Vec x = start(rng);
    for (int a = 0; a < d; ++a) e.at(p, 0, a) = x[a];
    for (int k = 1; k < e.n_times; ++k) {
      const double gap = grid[k] - grid[k - 1];
      const int steps = std::max(1, static_cast<int>(std::ceil(gap / dt - 1e-9)));
      const double h = gap / steps, sq = std::sqrt(h);
      double s = grid[k - 1];
      for (int n = 0; n < steps; ++n) {
        const Vec drift = sign * (pot.softmax_mean(s, x) - x) / (T - s);
        for (int a = 0; a < d; ++a) x[a] += drift[a] * h + sq * rng.normal();
        s += h;
      }
      for (int a = 0; a < d; ++a) e.at(p, k, a) = x[a];
    }
    for (int a = 0; a < d; ++a)
      if (!std::isfinite(x[a])) throw NonFinite("simulate_em: path left the finite range");
  }
  return e;
}

std::vector<double> cumulative(const double* w, int n) {
  std::vector<double> c(n);
  std::partial_sum(w, w + n, c.begin());
  return c;
}

InterpolatedPotential potential_for(const EotProblem& p, const DualVariables& d, Direction dir) {
  return dir == Direction::Forward ? InterpolatedPotential::forward(p, d) : InterpolatedPotential::backward(p, d);
}

}  // namespace

PathEnsemble sample_exact(const Plan& plan, const std::vector<double>& grid, int n_paths, std::uint64_t seed,
                          Direction dir) {
  check_grid(grid, plan.T);
  const int n = plan.rows();
  const std::vector<double> cum = cumulative(plan.weights.data(), static_cast<int>(plan.weights.size()));
  PathEnsemble e = make_ensemble(grid, n_paths, static_cast<int>(plan.x.rows()), seed, "exact", 0.0);
  for (int p = 0; p < n_paths; ++p) {
    CounterRng rng(seed, static_cast<std::uint64_t>(p));
    const int cell = sample_index(cum, rng.uniform());
    const Vec x = plan.x.col(cell % n), y = plan.y.col(cell / n);
    if (dir == Direction::Forward)
      fill_bridge(e, p, x, y, plan.T, rng);
    else
      fill_bridge(e, p, y, x, plan.T, rng);
  }
  return e;
}

PathEnsemble simulate_em(const BridgeSpec& spec, int n_paths, double dt, std::uint64_t seed, double drift_sign) {
  spec.validate();
  for (std::size_t k = 1; k < spec.time_grid.size(); ++k)
    if (dt > spec.time_grid[k] - spec.time_grid[k - 1] + 1e-15)
      throw InvalidArgument("simulate_em: dt exceeds a grid gap");
  const InterpolatedPotential pot = potential_for(spec.problem, spec.duals, spec.direction);
  const DiscreteMeasure& init = spec.direction == Direction::Forward ? spec.problem.rho : spec.problem.mu;
  const std::vector<double> cum = cumulative(init.weights.data(), init.size());
  return run_em(pot, spec.time_grid, n_paths, dt, seed, drift_sign,
                [&](CounterRng& rng) { return Vec(init.atoms.col(sample_index(cum, rng.uniform()))); });
}

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j = {{"check", r.name}, {"statistic", r.statistic}, {"threshold", r.threshold}, {"pass", r.pass}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

CheckReport time_reversal_check(const Plan& plan, double s, int n_paths, std::uint64_t seed, double alpha) {
  const double T = plan.T;
  if (!(s > 0 && s < T)) throw DomainError("time_reversal_check: s must lie in (0, T)");
  const PathEnsemble fwd = sample_exact(plan, {0.0, s}, n_paths, mix64(seed), Direction::Forward);
  const PathEnsemble bwd = sample_exact(plan, {0.0, T - s}, n_paths, mix64(seed + 1), Direction::Backward);
  CheckReport r;
  r.name = "time_reversal";
  const double n_eff = 0.5 * n_paths;
  r.threshold = ks_critical(alpha, n_eff);
  nlohmann::json pv = nlohmann::json::array();
  for (int a = 0; a < fwd.dim; ++a) {
    const double D = ks_statistic_two_sample(fwd.slice(1, a), bwd.slice(1, a));
    r.statistic = std::max(r.statistic, D);
    pv.push_back(kolmogorov_pvalue(D, n_eff));
  }
  r.pass = r.statistic <= r.threshold;
  r.detail = {{"s", s}, {"n_paths", n_paths}, {"p_values", pv}};
  return r;
}

CheckReport em_vs_exact_check(const BridgeSpec& spec, const Plan& plan, int n_paths, double dt,
                              std::uint64_t seed, double alpha) {
  const PathEnsemble em = simulate_em(spec, n_paths, dt, seed);
  CheckReport r;
  r.name = "em_vs_exact";
  r.threshold = ks_critical(alpha, n_paths);
  nlohmann::json per = nlohmann::json::array();
  for (int k = 1; k < em.n_times; ++k) {
    const double t = em.times[k];
    const MixtureLaw law = spec.direction == Direction::Forward ? forward_law(plan, t) : backward_law(plan, t);
    for (int a = 0; a < em.dim; ++a) {
      const double D = ks_statistic(em.slice(k, a), [&](double z) { return mixture_cdf(law, z, a); });
      r.statistic = std::max(r.statistic, D);
      per.push_back({{"t", t}, {"coord", a}, {"D", D}});
    }
  }
  r.pass = r.statistic <= r.threshold;
  r.detail = {{"dt", dt}, {"n_paths", n_paths}, {"slices", per}};
  return r;
}

WeakOrderReport em_weak_order(const BridgeSpec& spec, int n_paths, const std::vector<double>& dts,
                              std::uint64_t seed) {
  spec.validate();
  if (dts.size() < 2) throw InvalidArgument("em_weak_order: need at least two step sizes");
  const double t_end = spec.time_grid.back();
  std::vector<int> steps;
  for (double dt : dts) steps.push_back(static_cast<int>(std::lround(t_end / dt)));
  steps.push_back(2 * steps.back());
  const int fine = steps.back();
  for (std::size_t l = 0; l < steps.size(); ++l) {
    if (steps[l] < 1 || fine % steps[l] != 0) throw InvalidArgument("em_weak_order: step counts must nest");
    if (l > 0 && steps[l] <= steps[l - 1]) throw InvalidArgument("em_weak_order: dts must decrease");
  }

  const InterpolatedPotential pot = potential_for(spec.problem, spec.duals, spec.direction);
  const DiscreteMeasure& init = spec.direction == Direction::Forward ? spec.problem.rho : spec.problem.mu;
  const std::vector<double> cum = cumulative(init.weights.data(), init.size());
  const double T = pot.T();
  const int d = pot.dim(), L = static_cast<int>(steps.size());
  const double hf = t_end / fine, sqf = std::sqrt(hf);

  std::vector<Eigen::VectorXd> sum1(L, Eigen::VectorXd::Zero(d));
  std::vector<double> sum2(L, 0.0);
  std::vector<double> dW(static_cast<std::size_t>(fine) * d);
  for (int p = 0; p < n_paths; ++p) {
    CounterRng rng(seed, static_cast<std::uint64_t>(p));
    const Vec x0 = init.atoms.col(sample_index(cum, rng.uniform()));
    for (double& w : dW) w = sqf * rng.normal();
    for (int l = 0; l < L; ++l) {
      const int block = fine / steps[l];
      const double h = t_end / steps[l];
      Vec x = x0;
      for (int n = 0; n < steps[l]; ++n) {
        const double s = n * h;
        const Vec drift = (pot.softmax_mean(s, x) - x) / (T - s);
        for (int a = 0; a < d; ++a) {
          double inc = 0.0;
          for (int b = 0; b < block; ++b) inc += dW[(static_cast<std::size_t>(n) * block + b) * d + a];
          x[a] += drift[a] * h + inc;
        }
      }
      sum1[l] += Eigen::VectorXd(x);
      sum2[l] += x.squaredNorm();
    }
  }
  WeakOrderReport r;
  std::vector<double> lx, ly;
  for (int l = 0; l + 1 < L; ++l) {
    const double e = ((sum1[l] - sum1[l + 1]) / n_paths).norm() + std::abs(sum2[l] - sum2[l + 1]) / n_paths;
    r.dts.push_back(dts[l]);
    r.errors.push_back(e);
    lx.push_back(std::log(dts[l]));
    ly.push_back(std::log(std::max(e, 1e-300)));
  }
  r.slope = fit_line(lx, ly).slope;
  return r;
}

CheckReport martingale_check(const EotProblem& problem, const DualVariables& duals, Direction side, int start,
                             const std::vector<double>& times, int n_paths, std::uint64_t seed,
                             const MartingaleOptions& opt) {
  const double T = problem.T;
  const InterpolatedPotential pot = potential_for(problem, duals, side);
  const Plan plan = assemble_plan(problem, duals);
  const DiscreteMeasure& base = side == Direction::Forward ? problem.rho : problem.mu;
  if (start < 0 || start >= base.size()) throw InvalidArgument("martingale_check: start atom out of range");
  std::vector<double> grid{0.0};
  for (double t : times)
    if (t > grid.back()) grid.push_back(t);
  if (grid.back() > T * (1.0 - kHMinRel)) throw HorizonTooClose("martingale_check: time beyond T - h_min");
  const Vec y = base.atoms.col(start);

  PathEnsemble e;
  if (opt.use_em) {
    e = run_em(pot, grid, n_paths, opt.dt, seed, opt.drift_sign, [&](CounterRng&) { return y; });
  } else {
    // Conditional endpoint law given the start atom, then a pinned bridge.
    std::vector<double> w;
    Eigen::MatrixXd ends;
    if (side == Direction::Forward) {
      w.assign(plan.cols(), 0.0);
      for (int j = 0; j < plan.cols(); ++j) w[j] = plan.weights(start, j);
      ends = plan.y;
    } else {
      w.assign(plan.rows(), 0.0);
      for (int i = 0; i < plan.rows(); ++i) w[i] = plan.weights(i, start);
      ends = plan.x;
    }
    const std::vector<double> cum = cumulative(w.data(), static_cast<int>(w.size()));
    e = make_ensemble(grid, n_paths, base.dim(), seed, "exact", 0.0);
    for (int p = 0; p < n_paths; ++p) {
      CounterRng rng(seed, static_cast<std::uint64_t>(p));
      fill_bridge(e, p, y, ends.col(sample_index(cum, rng.uniform())), T, rng);
    }
  }

  const Vec g0 = pot.gradient(0.0, y);
  CheckReport r;
  r.name = "martingale";
  r.threshold = 3.0;
  nlohmann::json per = nlohmann::json::array();
  const int d = base.dim();
  for (int k = 1; k < e.n_times; ++k) {
    std::vector<std::vector<double>> g(d, std::vector<double>(n_paths));
    Vec z(d);
    for (int p = 0; p < n_paths; ++p) {
      for (int a = 0; a < d; ++a) z[a] = e.at(p, k, a);
      const Vec gr = pot.gradient(e.times[k], z);
      for (int a = 0; a < d; ++a) g[a][p] = gr[a];
    }
    for (int a = 0; a < d; ++a) {
      const MeanSe ms = mean_se(g[a]);
      const double diff = std::abs(ms.mean - g0[a]);
      double zs = 0.0;
      if (ms.se > 0)
        zs = diff / ms.se;
      else if (diff > 1e-12 * std::max(1.0, std::abs(g0[a])))
        zs = std::numeric_limits<double>::infinity();
      r.statistic = std::max(r.statistic, zs);
      per.push_back({{"t", e.times[k]}, {"coord", a}, {"mean", ms.mean}, {"target", g0[a]}, {"se", ms.se}});
    }
  }
  r.pass = r.statistic <= r.threshold;
  r.detail = {{"n_paths", n_paths}, {"method", e.method}, {"times", per}};
  return r;
}

double drift_gap_energy(const MixtureLaw& law, const InterpolatedPotential& a, const InterpolatedPotential& b,
                        double s, int order, double prune) {
  const double h = a.horizon(s);
  const QuadNodes nodes = mixture_nodes(law, order, prune);
  return expectation(nodes, [&](const Vec& z) { return (a.softmax_mean(s, z) - b.softmax_mean(s, z)).squaredNorm(); }) /
         (h * h);
}

QuadResult girsanov_energy(const EotSolution& sol_mu, const EotSolution& sol_nu, double delta, Direction dir,
                           const QuadratureOrders& q) {
  if (!(delta > 0 && delta <= 1)) throw DomainError("girsanov_energy: delta must lie in (0, 1]");
  if (!same_atoms(sol_mu.problem.mu, sol_nu.problem.mu) || !same_atoms(sol_mu.problem.rho, sol_nu.problem.rho))
    throw GridMismatch("girsanov_energy: the two solutions need shared atom grids");
  if (sol_mu.problem.T != sol_nu.problem.T) throw InvalidArgument("girsanov_energy: horizons differ");
  const double T = sol_mu.problem.T;
  const InterpolatedPotential pm = potential_for(sol_mu.problem, sol_mu.duals, dir);
  const InterpolatedPotential pn = potential_for(sol_nu.problem, sol_nu.duals, dir);
  const int d = sol_mu.problem.rho.dim();
  // Panels halve the remaining horizon T - s: near the end the integrand has a
  // layer of width ~ (atom gap)^2 that a single rule on [0, delta T] misses.
  // At delta = 1 the last sliver [T - h_min, T] is dropped.
  std::vector<double> cuts{0.0};
  const double stop = std::max((1.0 - delta) * T, pm.h_min());
  for (double r = 0.5 * T; r > stop; r *= 0.5) cuts.push_back(T - r);
  cuts.push_back(T - stop);
  auto integral = [&](const QuadratureOrders& o) {
    double acc = 0.0;
    for (std::size_t p = 1; p < cuts.size(); ++p) {
      const QuadratureRule gl = gauss_legendre(o.legendre, cuts[p - 1], cuts[p]);
      for (int k = 0; k < gl.size(); ++k) {
        const double s = gl.nodes[k];
        const MixtureLaw law =
            dir == Direction::Forward ? forward_law(sol_mu.plan, s, o.prune) : backward_law(sol_mu.plan, s, o.prune);
        acc += gl.weights[k] * drift_gap_energy(law, pn, pm, s, o.hermite(d), o.prune);
      }
    }
    return 0.5 * acc;
  };
  QuadResult r;
  r.value = integral(q);
  r.error = std::abs(r.value - integral(q.coarse()));
  return r;
}

void write_ensemble(const std::string& path, const PathEnsemble& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("write_ensemble: cannot open " + path);
  const std::uint64_t header[4] = {static_cast<std::uint64_t>(e.n_paths), static_cast<std::uint64_t>(e.n_times),
                                   static_cast<std::uint64_t>(e.dim), e.seed};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  std::ofstream side(path + ".json");
  side << nlohmann::json{{"n_paths", e.n_paths}, {"n_times", e.n_times}, {"dim", e.dim},
                         {"seed", e.seed},       {"method", e.method},   {"dt", e.dt},
                         {"times", e.times},     {"layout", "path-major float64, header 4 x u64"}}
              .dump(2)
       << "\n";
}

PathEnsemble read_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_ensemble: cannot open " + path);
  std::uint64_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  PathEnsemble e;
  e.n_paths = static_cast<int>(header[0]);
  e.n_times = static_cast<int>(header[1]);
  e.dim = static_cast<int>(header[2]);
  e.seed = header[3];
  e.data.resize(static_cast<std::size_t>(e.n_paths) * e.n_times * e.dim);
  in.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  if (!in) throw InvalidArgument("read_ensemble: truncated file " + path);
  std::ifstream side(path + ".json");
  if (side) {
    const nlohmann::json j = nlohmann::json::parse(side);
    e.times = j.at("times").get<std::vector<double>>();
    e.method = j.value("method", "exact");
    e.dt = j.value("dt", 0.0);
  }
  return e;
}

}  // namespace entlab
