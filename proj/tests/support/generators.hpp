#pragma once

#include <Eigen/Dense>

#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <string>

namespace bpc::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Small hand-rolled generator for property tests. Each case gets its own
// seed so a failure can be replayed by seed alone.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& rng() { return rng_; }

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  VectorXd vector(Eigen::Index n, double scale = 1.0) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
    return v;
  }

  MatrixXd matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * normal();
    return m;
  }

  // Points in [-1,1]^d.
  MatrixXd cube(Eigen::Index rows, Eigen::Index d) {
    MatrixXd x(rows, d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = uniform();
    return x;
  }

  // Well-conditioned SPD matrix: G G^T / n + floor * I.
  MatrixXd spd(Eigen::Index n, double floor = 0.1) {
    const MatrixXd g = matrix(n, n);
    MatrixXd s = g * g.transpose() / static_cast<double>(n);
    s.diagonal().array() += floor;
    return s;
  }

 private:
  std::mt19937_64 rng_;
  std::uint64_t seed_;
};

// Runs `body` on `cases` generated instances; the failing case's seed is
// attached to every assertion message.
template <class Body>
void for_all(int cases, std::uint64_t base_seed, Body&& body) {
  for (int c = 0; c < cases; ++c) {
    const std::uint64_t seed = base_seed * 1000003ULL + static_cast<std::uint64_t>(c);
    SCOPED_TRACE("case seed " + std::to_string(seed));
    Gen g(seed);
    body(g);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

}  // namespace bpc::testing
