#include "bpc/hier_sampler.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_SampleStandardNormal(benchmark::State& state) {
  bpc::LogDensityModel model;
  model.dim = state.range(0);
  model.value_and_gradient = [](const bpc::VectorXd& x, bpc::VectorXd& g) {
    g = -x;
    return -0.5 * x.squaredNorm();
  };
  bpc::ChainConfig cfg;
  cfg.n_chains = 2;
  cfg.warmup = 200;
  cfg.draws = 200;
  cfg.parallel_chains = false;
  for (auto _ : state) benchmark::DoNotOptimize(bpc::sample(model, cfg));
}
BENCHMARK(BM_SampleStandardNormal)->Arg(2)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
