#include "bpc/basis.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

void BM_BuildIndexSet(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(bpc::build_index_set(bpc::IndexScheme::TotalOrder, d, p));
}
BENCHMARK(BM_BuildIndexSet)->Args({3, 3})->Args({7, 3})->Args({25, 2});

void BM_DesignMatrix(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto rows = state.range(1);
  const bpc::PolynomialBasis basis(bpc::InputSpace::uniform_cube(d),
                                   bpc::build_index_set(bpc::IndexScheme::TotalOrder, d, 3));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  bpc::MatrixXd x(rows, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(basis.design_matrix(x));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_DesignMatrix)->Args({3, 64})->Args({7, 210})->Args({7, 2000});

void BM_GaussQuadrature(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bpc::gauss_quadrature(bpc::InputDistribution::uniform(), n));
  }
}
BENCHMARK(BM_GaussQuadrature)->Arg(11)->Arg(64);

}  // namespace
