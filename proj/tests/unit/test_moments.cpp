#include "bpc/app/metrics.hpp"
#include "bpc/errors.hpp"
#include "bpc/moments.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bpc;
using bpc::testing::for_all;
using bpc::testing::Gen;

namespace {

CoefficientPosterior random_posterior(Gen& g, Eigen::Index n, double cov_scale = 0.05) {
  return {g.vector(n), cov_scale * g.spd(n)};
}

}  // namespace

TEST(OutputMean, ClosedForm) {
  CoefficientPosterior p{(VectorXd(3) << 5, 0, 0).finished(), MatrixXd::Zero(3, 3)};
  auto m = output_mean_distribution(p);
  EXPECT_EQ(m.kind, MomentKind::GaussianClosedForm);
  EXPECT_EQ(m.mean, 5.0);
  EXPECT_EQ(m.variance, 0.0);
  p.covariance = MatrixXd::Identity(3, 3);
  EXPECT_EQ(output_mean_distribution(p).variance, 1.0);
}

TEST(OutputMean, DoubleMonteCarlo) {
  // Coefficients and inputs sampled jointly: E[g] over both equals [mu]_1.
  const auto space = InputSpace::uniform_cube(2);
  const PolynomialBasis basis(space, build_index_set(IndexScheme::TotalOrder, 2, 3));
  for_all(5, 21, [&](Gen& g) {
    const auto post = random_posterior(g, 10, 0.2);
    const GaussianSampler sampler(post.mean, post.covariance);
    std::vector<double> gs(200000);
    for (auto& v : gs) {
      const VectorXd a = sampler.draw(g.rng());
      const double x[2] = {g.uniform(), g.uniform()};
      v = basis.evaluate(x).dot(a);
    }
    const auto ms = oracle::mean_and_se(gs);
    EXPECT_LT(std::abs(ms.mean - output_mean_distribution(post).mean), 3.0 * ms.se);
  });
}

TEST(OutputVariance, DeterministicCases) {
  CoefficientPosterior p{(VectorXd(3) << 0, 1, 2).finished(), MatrixXd::Zero(3, 3)};
  const auto v = output_variance_distribution(p, 1000, 1);
  EXPECT_EQ(v.kind, MomentKind::SampleCloud);
  ASSERT_EQ(v.samples.size(), 1000u);
  for (double s : v.samples) EXPECT_NEAR(s, 5.0, 1e-12);
  p.mean << 4.0, 0, 0;
  for (double s : output_variance_distribution(p, 1000, 1).samples) EXPECT_EQ(s, 0.0);
  EXPECT_THROW(output_variance_distribution(p, 999, 1), std::invalid_argument);
}

TEST(OutputVariance, AnalyticExpectation) {
  CoefficientPosterior p{(VectorXd(3) << 0, 1, 2).finished(), 0.01 * MatrixXd::Identity(3, 3)};
  const auto v = output_variance_distribution(p, 20000, 3);
  ASSERT_TRUE(v.analytic_mean.has_value());
  EXPECT_NEAR(*v.analytic_mean, 5.02, 1e-12);
  const auto ms = oracle::mean_and_se(v.samples);
  EXPECT_LT(std::abs(ms.mean - 5.02), 3.0 * ms.se);
}

TEST(OutputVariance, NonNegativeSamples) {
  for_all(20, 22, [](Gen& g) {
    const auto v = output_variance_distribution(random_posterior(g, g.integer(1, 8), 1.0), 1000, g.seed());
    for (double s : v.samples) EXPECT_GE(s, 0.0);
  });
}

TEST(MomentOracle, ClosedFormMatchesInputSampling) {
  // For one coefficient draw per posterior, the spatial mean is alpha_1 and the
  // variance sum_{i>=2} alpha_i^2; both are compared with brute-force sampling.
  const auto space = InputSpace::uniform_cube(3);
  const PolynomialBasis basis(space, build_index_set(IndexScheme::TotalOrder, 3, 2));
  for_all(20, 23, [&](Gen& g) {
    const auto post = random_posterior(g, 10);
    const VectorXd a = GaussianSampler(post.mean, post.covariance).draw(g.rng());
    const auto mc = app::mc_oracle(basis, a, 100000, g.seed());
    EXPECT_LT(std::abs(mc.mean - a(0)), 3.0 * mc.mean_se);
    EXPECT_LT(std::abs(mc.variance - a.tail(9).squaredNorm()), 3.0 * mc.variance_se);
  });
}

TEST(QuadraticForm, ZeroMatrix) {
  Gen g(24);
  const QuadraticForm qf{MatrixXd::Zero(3, 3), random_posterior(g, 3)};
  for (double s : quadratic_form_samples(qf, 100, 1)) EXPECT_EQ(s, 0.0);
}

TEST(QuadraticForm, ChiSquaredThree) {
  const QuadraticForm qf{MatrixXd::Identity(3, 3), {VectorXd::Zero(3), MatrixXd::Identity(3, 3)}};
  const auto ms = oracle::mean_and_se(quadratic_form_samples(qf, 50000, 2));
  EXPECT_LT(std::abs(ms.mean - 3.0), 3.0 * ms.se);
  // chi^2_3 has variance 6.
  EXPECT_LT(std::abs(ms.variance - 6.0), 3.0 * ms.variance_se);
}

TEST(QuadraticForm, GenericMeanAndVariance) {
  for_all(10, 25, [](Gen& g) {
    const Eigen::Index n = g.integer(1, 6);
    const MatrixXd h = g.matrix(n, n);
    const QuadraticForm qf{0.5 * (h + h.transpose()), random_posterior(g, n, 0.5)};
    const MatrixXd es = qf.E * qf.base.covariance;
    const double mean = es.trace() + qf.base.mean.dot(qf.E * qf.base.mean);
    const double var = 2.0 * (es * es).trace() + 4.0 * qf.base.mean.dot(qf.E * qf.base.covariance * qf.E * qf.base.mean);
    const auto m = quadratic_form_moments(qf);
    EXPECT_NEAR(m.mean, mean, 1e-10 * std::max(1.0, std::abs(mean)));
    EXPECT_NEAR(m.variance, var, 1e-10 * std::max(1.0, var));
    const auto dec = oracle::mean_and_se(quadratic_form_samples(qf, 20000, g.seed()));
    const auto dir = oracle::mean_and_se(quadratic_form_samples_direct(qf, 20000, g.seed() + 7));
    EXPECT_LT(std::abs(dec.mean - mean), 3.0 * dec.se);
    EXPECT_LT(std::abs(dir.mean - mean), 3.0 * dir.se);
    EXPECT_LT(std::abs(dec.variance - var), 3.0 * dec.variance_se);
  });
}

TEST(QuadraticForm, RejectsAsymmetric) {
  const QuadraticForm qf{(MatrixXd(2, 2) << 1, 2, 0, 1).finished(), {VectorXd::Zero(2), MatrixXd::Identity(2, 2)}};
  EXPECT_THROW(quadratic_form_samples(qf, 10, 1), std::invalid_argument);
}

TEST(Subselect, Enumerations) {
  const auto idx = build_index_set(IndexScheme::TotalOrder, 2, 2);
  const auto s = subselect(idx, 0, 0);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& m : s) EXPECT_EQ(m[0], 0);
  EXPECT_TRUE(subselect(idx, 3, 0).empty());
  EXPECT_THROW(subselect(idx, 1, 2), std::out_of_range);

  const auto idx3 = build_index_set(IndexScheme::TotalOrder, 3, 3);
  std::size_t brute = 0;
  for (const auto& m : oracle::enumerate_indices(1, 3, 3)) brute += m[1] == 1;
  EXPECT_EQ(subselect(idx3, 1, 1).size(), brute);
  EXPECT_EQ(brute, 6u);
}

TEST(Subselect, FirstOrderAndTotalEffectSets) {
  const auto idx = build_index_set(IndexScheme::TotalOrder, 3, 3);
  const auto first = first_order_set(idx, 2);
  EXPECT_EQ(first.size(), 3u);
  for (const auto& m : first) EXPECT_TRUE(m[0] == 0 && m[1] == 0 && m[2] >= 1);
  const auto total = total_effect_set(idx, 2);
  for (const auto& m : total) EXPECT_GE(m[2], 1);
  EXPECT_EQ(total.size(), idx.size() - subselect(idx, 0, 2).size());
}

TEST(Sobol, AdditiveHandDecomposition) {
  // g = sqrt3 x1 + 2 sqrt3 x2 = phi_(1,0) + 2 phi_(0,1).
  const auto idx = build_index_set(IndexScheme::TotalOrder, 2, 2);
  VectorXd a = VectorXd::Zero(6);
  a(*idx.position({1, 0})) = 1.0;
  a(*idx.position({0, 1})) = 2.0;
  EXPECT_NEAR(sobol_ratio(a, idx, first_order_set(idx, 0)), 0.2, 1e-15);
  EXPECT_NEAR(sobol_ratio(a, idx, first_order_set(idx, 1)), 0.8, 1e-15);
}

TEST(Sobol, DeterministicCases) {
  const auto idx = build_index_set(IndexScheme::TotalOrder, 2, 2);
  VectorXd a = VectorXd::Zero(6);
  a(0) = 3.0;
  a(4) = 1.5;
  const MultiIndexSet single(2, {idx[4]}, IndexScheme::TotalOrder, 2);
  const CoefficientPosterior det{a, MatrixXd::Zero(6, 6)};
  for (double r : sobol_ratio_samples(det, idx, single, 1000, 1)) EXPECT_EQ(r, 1.0);
  const MultiIndexSet empty(2, {}, IndexScheme::TotalOrder, 2);
  for (double r : sobol_ratio_samples(det, idx, empty, 1000, 1)) EXPECT_EQ(r, 0.0);
  // The constant term never counts in the numerator.
  const MultiIndexSet with_const(2, {idx[0], idx[4]}, IndexScheme::TotalOrder, 2);
  EXPECT_EQ(sobol_ratio(a, idx, with_const), 1.0);
  EXPECT_THROW(sobol_ratio(VectorXd::Unit(6, 0), idx, single), NumericalError);
}

TEST(Sobol, ClosureOverPartition) {
  for_all(30, 26, [](Gen& g) {
    const int d = g.integer(1, 4);
    const auto idx = build_index_set(IndexScheme::TotalOrder, d, g.integer(1, 4));
    const VectorXd a = g.vector(static_cast<Eigen::Index>(idx.size()));
    // Partition the non-constant indices by their leading non-zero dimension.
    double sum = 0.0;
    for (int k = 0; k < d; ++k) {
      std::vector<MultiIndex> part;
      for (const auto& m : idx) {
        int lead = -1;
        for (int j = 0; j < d && lead < 0; ++j)
          if (m[static_cast<std::size_t>(j)] != 0) lead = j;
        if (lead == k) part.push_back(m);
      }
      sum += sobol_ratio(a, idx, MultiIndexSet(static_cast<std::size_t>(d), part, idx.scheme(), idx.max_degree()));
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  });
}

TEST(Sobol, SampledRatiosWithinUnitInterval) {
  for_all(10, 27, [](Gen& g) {
    const auto idx = build_index_set(IndexScheme::TotalOrder, 3, 2);
    const auto post = random_posterior(g, static_cast<Eigen::Index>(idx.size()), 1.0);
    for (std::size_t dim = 0; dim < 3; ++dim) {
      for (double r : sobol_ratio_samples(post, idx, total_effect_set(idx, dim), 1000, g.seed())) {
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0 + 1e-12);
      }
    }
  });
}

TEST(Sobol, FromDrawsMatchesPerDraw) {
  Gen g(28);
  const auto idx = build_index_set(IndexScheme::TotalOrder, 2, 2);
  const MatrixXd draws = g.matrix(50, 6);
  const auto sub = first_order_set(idx, 1);
  const auto r = sobol_ratio_from_draws(draws, idx, sub);
  for (Eigen::Index i = 0; i < draws.rows(); ++i)
    EXPECT_DOUBLE_EQ(r[static_cast<std::size_t>(i)], sobol_ratio(draws.row(i).transpose(), idx, sub));
  const auto v = output_variance_from_draws(draws);
  for (Eigen::Index i = 0; i < draws.rows(); ++i)
    EXPECT_NEAR(v.samples[static_cast<std::size_t>(i)], draws.row(i).tail(5).squaredNorm(), 1e-12);
}

TEST(Summary, QuantilesAndInterval) {
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(i);
  const auto s = summarize(xs, 0.9);
  EXPECT_DOUBLE_EQ(s.median, 50.0);
  EXPECT_DOUBLE_EQ(s.lower, 5.0);
  EXPECT_DOUBLE_EQ(s.upper, 95.0);
  EXPECT_DOUBLE_EQ(s.mean, 50.0);
}

TEST(Sampling, DeterministicGivenSeed) {
  Gen g(29);
  const auto post = random_posterior(g, 4);
  EXPECT_EQ(output_variance_distribution(post, 1000, 9).samples, output_variance_distribution(post, 1000, 9).samples);
}
