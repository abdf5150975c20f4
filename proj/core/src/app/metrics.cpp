#include "bpc/app/metrics.hpp"

#include "bpc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bpc::app {

NormalizedRmse normalized_rmse(const VectorXd& y_test, const VectorXd& y_pred, double output_sd) {
  if (y_test.size() == 0) throw std::invalid_argument("normalized RMSE of an empty test set");
  if (y_test.size() != y_pred.size()) throw std::invalid_argument("test and prediction lengths differ");
  if (!(output_sd > 0.0)) throw std::invalid_argument("output standard deviation must be positive");
  const double m = static_cast<double>(y_test.size());
  const double ss = (y_test - y_pred).squaredNorm();
  return {std::sqrt(ss) / (m * std::sqrt(output_sd)), std::sqrt(ss / m) / output_sd};
}

double sample_sd(const VectorXd& v) {
  if (v.size() < 2) throw std::invalid_argument("standard deviation needs at least two values");
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(values.begin(), mid));
}

namespace {

double draw_input(const InputDistribution& dist, Rng& rng) {
  if (dist.bounded()) return std::uniform_real_distribution<double>(dist.lower(), dist.upper())(rng);
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Two-pass moments; variance SE from m4: Var(s^2) ~ (m4 - m2^2) / n.
OracleMoments moments_of(const std::vector<double>& g) {
  const double n = static_cast<double>(g.size());
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : g) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  OracleMoments out;
  out.mean = mean;
  out.variance = m2 * n / (n - 1.0);
  out.mean_se = std::sqrt(out.variance / n);
  out.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  out.samples = g.size();
  return out;
}

}  // namespace

OracleMoments mc_oracle(const InputSpace& space, const ScalarFunction& g, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinOracleSamples) {
    throw std::invalid_argument("Monte Carlo oracle needs at least " + std::to_string(kMinOracleSamples) + " samples");
  }
  auto rng = make_rng(seed);
  std::vector<double> x(space.dim());
  std::vector<double> values(n_samples);
  for (auto& v : values) {
    for (std::size_t k = 0; k < space.dim(); ++k) x[k] = draw_input(space.dims[k], rng);
    v = g(x);
  }
  return moments_of(values);
}

OracleMoments mc_oracle(const PolynomialBasis& basis, const VectorXd& coefficients, std::size_t n_samples,
                        std::uint64_t seed) {
  if (coefficients.size() != static_cast<Eigen::Index>(basis.size()))
    throw std::invalid_argument("coefficient count does not match the basis");
  return mc_oracle(
      basis.space(), [&](std::span<const double> x) { return basis.evaluate(x).dot(coefficients); }, n_samples, seed);
}

}  // namespace bpc::app
