#include "bpc/app/synthetic.hpp"
#include "bpc/coregional.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

void BM_CoregionalLogDensity(benchmark::State& state) {
  const auto n_train = static_cast<std::size_t>(state.range(0));
  const auto pair = bpc::app::coregional_pair(n_train, 1, 1);
  auto basis = std::make_shared<const bpc::PolynomialBasis>(bpc::InputSpace::uniform_cube(7),
                                                            bpc::build_index_set(bpc::IndexScheme::TotalOrder, 7, 3));
  const auto model = bpc::coregional_sampling_model(basis, pair.train, 1e-6);
  bpc::VectorXd theta = bpc::VectorXd::Constant(model.dim, 0.03);
  theta.tail(4) << 0.03, 0.02, 1.0, 1.0;
  bpc::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(model.value_and_gradient(theta, grad));
}
BENCHMARK(BM_CoregionalLogDensity)->Arg(50)->Arg(105)->Unit(benchmark::kMillisecond);

}  // namespace
