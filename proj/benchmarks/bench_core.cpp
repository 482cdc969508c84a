#include <benchmark/benchmark.h>

#include <random>

#include "raylap/lbfgs.hpp"
#include "raylap/linalg.hpp"
#include "raylap/pipeline.hpp"
#include "raylap/targets.hpp"

namespace {

using namespace raylap;

void BM_PipelineGaussianFast(benchmark::State& state) {
  const Index d = state.range(0);
  PipelineConfig cfg = PipelineConfig::from_preset("fast");
  cfg.seed = 1;
  std::uint64_t evals = 0;
  for (auto _ : state) {
    const TestCase tc = make_named("gaussian", d);
    const PipelineResult r = run_pipeline(tc.problem, cfg);
    evals = r.total_evals;
    benchmark::DoNotOptimize(r.evidence.log_z);
  }
  state.counters["evals"] = static_cast<double>(evals);
}
BENCHMARK(BM_PipelineGaussianFast)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FdGradient(benchmark::State& state) {
  const Index d = state.range(0);
  const TestCase tc = make_named("gaussian", d);
  Points x = Points::Constant(16, d, 0.3);
  const Vec step = Vec::Constant(d, 1e-4);
  for (auto _ : state) benchmark::DoNotOptimize(fd_gradient(tc.problem, x, step));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_FdGradient)->Arg(8)->Arg(64);

void BM_EigSymmetric(benchmark::State& state) {
  const Index d = state.range(0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  Mat g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = n01(rng);
  const SymMatrix a = g * g.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(eig_symmetric(a).values);
}
BENCHMARK(BM_EigSymmetric)->Arg(8)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
