#pragma once

#include "bpc/app/dataset.hpp"
#include "bpc/basis.hpp"
#include "bpc/coregional.hpp"

#include <cstdint>

namespace bpc::app {

// Synthetic stand-ins for the experimental and simulation tables that are not
// shipped with the library. Every generated dataset is labeled "synthetic" in
// its source field.

/// Physical bounds of the three turbine inputs (Mach, Reynolds, turbulence
/// intensity).
std::vector<Bounds> turbine_bounds();

/// Smooth heat-flux-like response of the three inputs in reference
/// coordinates t in [-1,1]^3.
double turbine_response(std::span<const double> t);

/// 21 "measured" points in physical units: the response plus N(0, 1) noise.
Dataset turbine_measurements(std::uint64_t seed = 7);

/// Lower-fidelity model evaluated on the 4^3 tensor Gauss-Lobatto grid (in
/// physical units): a biased, slightly distorted copy of the response.
Dataset turbine_simulation();

/// Inputs in [-1,1]^d, outputs sum_i alpha_i phi_i(x) + N(0, noise_variance).
Dataset polynomial_dataset(const PolynomialBasis& basis, const VectorXd& alpha, std::size_t rows,
                           double noise_variance, std::uint64_t seed);

/// Two-sparse truth on TotalOrder(5, 2): 3 phi_2 + 1.5 phi_7 (positions 1 and 6).
struct SparseInstance {
  PolynomialBasis basis;
  VectorXd truth;
  std::vector<std::size_t> support;
};
SparseInstance sparse_instance();

/// Blade-format table: 25 inputs in [-1,1] and an efficiency-like output with
/// a sparse quadratic structure.
Dataset blade_format_table(std::size_t rows = 548, std::uint64_t seed = 11);

/// f1 = sin(sum x / sqrt(7)), f2 = 0.9 sin(sum x / sqrt(7) + 0.5) on [-1,1]^7.
double coregional_f1(std::span<const double> x);
double coregional_f2(std::span<const double> x);

struct CoregionalPair {
  StackedDataset train;
  StackedDataset test;
};

/// Independent uniform inputs per output (training sets differ across outputs).
CoregionalPair coregional_pair(std::size_t n_train, std::size_t n_test, std::uint64_t seed);

}  // namespace bpc::app
