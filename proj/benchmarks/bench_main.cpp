#include <benchmark/benchmark.h>

#include "entlab/bridge.hpp"
#include "entlab/eot.hpp"
#include "entlab/mixture.hpp"
#include "entlab/potentials.hpp"
#include "entlab/rng.hpp"
#include "entlab/stability.hpp"

using namespace entlab;

namespace {

DiscreteMeasure random_line(CounterRng& rng, int n) {
  Eigen::MatrixXd x(1, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) x(0, i) = 4 * rng.uniform() - 2 + 1e-6 * i, w[i] = 0.2 + rng.uniform();
  return DiscreteMeasure(x, w / w.sum());
}

EotProblem problem(int n, double T) {
  CounterRng rng(1, n);
  return EotProblem(random_line(rng, n), random_line(rng, n), T);
}

}  // namespace

static void BM_Sinkhorn(benchmark::State& st) {
  const auto p = problem(static_cast<int>(st.range(0)), 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(sinkhorn_solve(p).duals.log_f[0]);
}
BENCHMARK(BM_Sinkhorn)->Arg(8)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_PotentialEvaluate(benchmark::State& st) {
  const auto p = problem(static_cast<int>(st.range(0)), 1.0);
  const auto sol = solve(p.rho, p.mu, p.T);
  const auto psi = InterpolatedPotential::forward(p, sol.duals);
  double z = -1.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(psi.evaluate(0.3, Vec::Constant(1, z)).value);
    z = z > 1.0 ? -1.0 : z + 1e-3;
  }
}
BENCHMARK(BM_PotentialEvaluate)->Arg(8)->Arg(64)->Arg(512);

static void BM_MixtureKl(benchmark::State& st) {
  const auto p = problem(static_cast<int>(st.range(0)), 1.0);
  const auto a = solve(p.rho, p.mu, p.T);
  const auto b = solve(p.rho, p.rho, p.T);
  const auto la = forward_law(a.plan, 0.5), lb = forward_law(b.plan, 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(mixture_kl(la, lb).value);
}
BENCHMARK(BM_MixtureKl)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_ExactBridge(benchmark::State& st) {
  const auto p = problem(8, 1.0);
  const auto sol = solve(p.rho, p.mu, p.T);
  for (auto _ : st) benchmark::DoNotOptimize(sample_exact(sol.plan, {0.0, 0.25, 0.5, 0.75}, 10000, 3).data[0]);
}
BENCHMARK(BM_ExactBridge)->Unit(benchmark::kMillisecond);

static void BM_CampaignInstance(benchmark::State& st) {
  CampaignSpec spec;
  const auto inst = generate_instance(spec, static_cast<int>(st.range(0)));
  const StabilityOptions opt;
  for (auto _ : st) {
    const auto ctx = prepare(inst, opt);
    benchmark::DoNotOptimize(run_checks(ctx, opt).size());
  }
}
BENCHMARK(BM_CampaignInstance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();
