#pragma once

#include "bpc/basis.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bpc::app {

/// Both normalizations of the test error:
///   printed      = sqrt(sum r^2) / (M_test * sqrt(sigma_out))
///   conventional = sqrt(sum r^2 / M_test) / sigma_out
struct NormalizedRmse {
  double printed = 0.0;
  double conventional = 0.0;

  bool operator==(const NormalizedRmse&) const = default;
};

NormalizedRmse normalized_rmse(const VectorXd& y_test, const VectorXd& y_pred, double output_sd);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(const VectorXd& v);

double median(std::vector<double> values);

struct OracleMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinOracleSamples = 1000;

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Brute-force Monte Carlo mean and variance of g(x), x ~ rho, with standard
/// errors (variance SE from the fourth central moment).
OracleMoments mc_oracle(const InputSpace& space, const ScalarFunction& g, std::size_t n_samples, std::uint64_t seed);

/// The same for the expansion sum_i alpha_i phi_i(x).
OracleMoments mc_oracle(const PolynomialBasis& basis, const VectorXd& coefficients, std::size_t n_samples,
                        std::uint64_t seed);

}  // namespace bpc::app
