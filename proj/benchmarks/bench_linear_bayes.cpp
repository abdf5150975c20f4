#include "bpc/linear_bayes.hpp"
#include "bpc/moments.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Problem {
  bpc::DesignMatrix V;
  bpc::VectorXd y;
};

Problem make_problem(Eigen::Index m, Eigen::Index n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Problem p;
  p.V.values.resize(m, n);
  for (Eigen::Index i = 0; i < p.V.values.size(); ++i) p.V.values.data()[i] = g(rng);
  p.V.weights = bpc::VectorXd::Ones(m);
  p.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) p.y(i) = g(rng);
  return p;
}

void BM_ConjugatePosterior(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1));
  const auto prior = bpc::GaussianPrior::isotropic(state.range(1), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(bpc::conjugate_posterior(p.V, p.y, prior, bpc::NoiseSpec(0.1)));
}
BENCHMARK(BM_ConjugatePosterior)->Args({15, 20})->Args({105, 120})->Args({274, 351});

void BM_KernelCoefficients(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1));
  const bpc::MatrixXd sigma = bpc::MatrixXd::Identity(state.range(1), state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bpc::kernel_posterior_coefficients(sigma, p.V, p.y, bpc::NoiseSpec(0.1)));
  }
}
BENCHMARK(BM_KernelCoefficients)->Args({105, 120})->Args({274, 351});

void BM_VarianceSamples(benchmark::State& state) {
  const auto p = make_problem(30, 20);
  const auto post = bpc::conjugate_posterior(p.V, p.y, bpc::GaussianPrior::isotropic(20, 1.0), bpc::NoiseSpec(0.1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bpc::output_variance_distribution(post, static_cast<std::size_t>(state.range(0)), 1));
  }
}
BENCHMARK(BM_VarianceSamples)->Arg(1000)->Arg(10000);

}  // namespace
