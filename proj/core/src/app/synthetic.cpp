#include "bpc/app/synthetic.hpp"

#include "bpc/linalg.hpp"

#include <array>
#include <cmath>
#include <random>

namespace bpc::app {

std::vector<Bounds> turbine_bounds() { return {{0.7, 1.1}, {5e5, 2e6}, {1.0, 6.0}}; }

double turbine_response(std::span<const double> t) {
  const double a = t[0], b = t[1], c = t[2];
  return 60.0 + 12.0 * a + 6.0 * b - 4.0 * c + 5.0 * a * a + 3.0 * a * b - 2.0 * b * c + 1.5 * a * a * a +
         2.0 * std::sin(2.0 * a + c);
}

namespace {

Dataset physical_dataset(const MatrixXd& t, const VectorXd& y, const std::string& source) {
  const auto bounds = turbine_bounds();
  Dataset d;
  d.inputs.resize(t.rows(), 3);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      const auto& b = bounds[static_cast<std::size_t>(c)];
      d.inputs(r, c) = b.lower + 0.5 * (t(r, c) + 1.0) * (b.upper - b.lower);
    }
  }
  d.outputs = y;
  d.column_names = {"Ma", "Re", "Ti", "H"};
  d.source = source;
  return d;
}

MatrixXd uniform_points(std::size_t rows, std::size_t dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = u(rng);
  }
  return x;
}

}  // namespace

Dataset turbine_measurements(std::uint64_t seed) {
  auto rng = make_rng(seed);
  const MatrixXd t = uniform_points(21, 3, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  VectorXd y(t.rows());
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    const std::array<double, 3> p{t(r, 0), t(r, 1), t(r, 2)};
    y(r) = turbine_response(p) + noise(rng);
  }
  return physical_dataset(t, y, "synthetic:turbine_measurements");
}

Dataset turbine_simulation() {
  const double g = 1.0 / std::sqrt(5.0);
  const std::array<double, 4> nodes{-1.0, -g, g, 1.0};
  MatrixXd t(64, 3);
  VectorXd y(64);
  Eigen::Index r = 0;
  for (double a : nodes) {
    for (double b : nodes) {
      for (double c : nodes) {
        t.row(r) << a, b, c;
        const std::array<double, 3> p{a, b, c};
        y(r) = 57.0 + 0.95 * (turbine_response(p) - 60.0) + 1.5 * b * b;
        ++r;
      }
    }
  }
  return physical_dataset(t, y, "synthetic:turbine_simulation");
}

Dataset polynomial_dataset(const PolynomialBasis& basis, const VectorXd& alpha, std::size_t rows,
                           double noise_variance, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Dataset d;
  d.inputs = uniform_points(rows, basis.dim(), rng);
  d.outputs = basis.design_matrix(d.inputs).values * alpha;
  if (noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
    for (Eigen::Index r = 0; r < d.outputs.size(); ++r) d.outputs(r) += noise(rng);
  }
  for (std::size_t c = 0; c < basis.dim(); ++c) d.column_names.push_back("x" + std::to_string(c + 1));
  d.column_names.push_back("y");
  d.source = "synthetic:polynomial";
  return d;
}

SparseInstance sparse_instance() {
  PolynomialBasis basis(InputSpace::uniform_cube(5), build_index_set(IndexScheme::TotalOrder, 5, 2));
  VectorXd truth = VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  truth(1) = 3.0;
  truth(6) = 1.5;
  return {std::move(basis), std::move(truth), {1, 6}};
}

Dataset blade_format_table(std::size_t rows, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Dataset d;
  d.inputs = uniform_points(rows, 25, rng);
  std::normal_distribution<double> noise(0.0, 1e-3);
  d.outputs.resize(d.inputs.rows());
  for (Eigen::Index r = 0; r < d.inputs.rows(); ++r) {
    const auto x = d.inputs.row(r);
    d.outputs(r) = 0.9 + 0.02 * x(0) - 0.015 * x(3) + 0.01 * x(7) * x(7) + 0.008 * x(0) * x(12) - 0.005 * x(20) +
                   noise(rng);
  }
  for (int c = 0; c < 25; ++c) d.column_names.push_back("p" + std::to_string(c + 1));
  d.column_names.push_back("efficiency");
  d.source = "synthetic:blade_format";
  return d;
}

double coregional_f1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return std::sin(s / std::sqrt(7.0));
}

double coregional_f2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return 0.9 * std::sin(s / std::sqrt(7.0) + 0.5);
}

CoregionalPair coregional_pair(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  auto rng = make_rng(seed);
  CoregionalPair pair;
  auto fill = [&](StackedDataset& set, std::size_t rows) {
    for (int o = 0; o < 2; ++o) {
      MatrixXd x = uniform_points(rows, 7, rng);
      VectorXd y(x.rows());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::array<double, 7> v{};
        for (int c = 0; c < 7; ++c) v[static_cast<std::size_t>(c)] = x(r, c);
        y(r) = o == 0 ? coregional_f1(v) : coregional_f2(v);
      }
      set.X.push_back(std::move(x));
      set.y.push_back(std::move(y));
    }
  };
  fill(pair.train, n_train);
  fill(pair.test, n_test);
  return pair;
}

}  // namespace bpc::app
