#include "bpc/conditioning.hpp"
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

struct Instance {
  PolynomialBasis basis;
  DesignMatrix V;
  CoefficientPosterior post;
};

Instance make_instance(Gen& g, int d = 2, int p = 2, int points = 8) {
  PolynomialBasis basis(InputSpace::uniform_cube(static_cast<std::size_t>(d)),
                        build_index_set(IndexScheme::TotalOrder, d, p));
  const auto n = static_cast<Eigen::Index>(basis.size());
  auto V = basis.design_matrix(g.cube(points, d));
  return {std::move(basis), std::move(V), {g.vector(n), 0.3 * g.spd(n)}};
}

double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(SpatialMeanBlocks, Layout) {
  Gen g(31);
  auto inst = make_instance(g);
  const auto b = spatial_mean_blocks(inst.post, inst.V);
  EXPECT_LT(max_abs(b.mu1 - inst.V.values * inst.post.mean), 1e-12);
  EXPECT_EQ(b.mu2(0), inst.post.mean(0));
  EXPECT_LT(max_abs(b.s12 - inst.V.values * inst.post.covariance.col(0)), 1e-12);
  EXPECT_EQ(b.s22(0, 0), inst.post.covariance(0, 0));
  // S22 equals the closed-form variance of the spatial mean.
  EXPECT_NEAR(b.s22(0, 0), output_mean_distribution(inst.post).variance, 1e-12);
}

TEST(SpatialMeanBlocks, DiagonalCovariance) {
  Gen g(32);
  auto inst = make_instance(g);
  inst.post.covariance = g.vector(inst.post.size()).cwiseAbs().asDiagonal();
  const auto b = spatial_mean_blocks(inst.post, inst.V);
  EXPECT_LT(max_abs(b.s12 - VectorXd::Constant(b.s12.rows(), inst.post.covariance(0, 0))), 1e-14);
}

TEST(SpatialMeanBlocks, ZeroCovarianceCannotCondition) {
  Gen g(33);
  auto inst = make_instance(g);
  inst.post.covariance.setZero();
  const auto b = spatial_mean_blocks(inst.post, inst.V);
  EXPECT_EQ(max_abs(b.s12), 0.0);
  EXPECT_EQ(b.s22(0, 0), 0.0);
  EXPECT_THROW(condition_on_value(b, VectorXd::Ones(1)), NumericalError);
  EXPECT_THROW(condition_spatial_mean(inst.post, 1.0), NumericalError);
}

TEST(ConditionOnValue, NoCorrectionAtPriorValue) {
  Gen g(34);
  auto inst = make_instance(g);
  const auto b = spatial_mean_blocks(inst.post, inst.V);
  const auto c = condition_on_value(b, b.mu2);
  EXPECT_EQ(c.mean, b.mu1);
}

TEST(ConditionOnValue, ExactnessAndVarianceOrdering) {
  for_all(30, 35, [](Gen& g) {
    auto inst = make_instance(g, g.integer(1, 3), g.integer(1, 3), g.integer(1, 10));
    const double a = 3.0 * g.normal();
    const auto cond = condition_spatial_mean(inst.post, a);
    EXPECT_NEAR(output_mean_distribution(cond).mean, a, 1e-8);
    EXPECT_NEAR(output_mean_distribution(cond).variance, 0.0, 1e-8);
    const auto b = spatial_mean_blocks(inst.post, inst.V);
    const auto pc = condition_on_value(b, VectorXd::Constant(1, a));
    EXPECT_TRUE((pc.covariance.diagonal().array() <= b.s11.diagonal().array() + 1e-12).all());
  });
}

TEST(ConditionOnValue, CoefficientRouteAgrees) {
  for_all(30, 36, [](Gen& g) {
    auto inst = make_instance(g, 2, g.integer(1, 3), g.integer(1, 10));
    const double a = g.normal();
    const double va = g.uniform(0.0, 0.2);
    const auto b = spatial_mean_blocks(inst.post, inst.V);
    const auto direct = condition_on_uncertain_value(b, {VectorXd::Constant(1, a), MatrixXd::Constant(1, 1, va)});
    const auto coef = predictive(condition_spatial_mean(inst.post, a, va), inst.V);
    EXPECT_LT(max_abs(direct.mean - coef.mean), 1e-8);
    EXPECT_LT(max_abs(direct.covariance - coef.covariance), 1e-8);
  });
}

TEST(ConditionOnValue, GeneralFunctionals) {
  Gen g(37);
  auto inst = make_instance(g, 2, 2, 6);
  const MatrixXd c = g.matrix(inst.post.size(), 2);
  const VectorXd a = g.vector(2);
  const auto cond = condition_coefficients(inst.post, c, {a, MatrixXd::Zero(2, 2)});
  EXPECT_LT(max_abs(c.transpose() * cond.mean - a), 1e-8);
  const auto b = functional_blocks(inst.post, inst.V, c);
  const auto p = condition_on_value(b, a);
  EXPECT_LT(max_abs(p.mean - inst.V.values * cond.mean), 1e-8);
}

TEST(UncertainValue, ZeroUncertaintyIsExact) {
  Gen g(38);
  auto inst = make_instance(g);
  const auto b = spatial_mean_blocks(inst.post, inst.V);
  const VectorXd a = VectorXd::Constant(1, 0.7);
  const auto u = condition_on_uncertain_value(b, {a, MatrixXd::Zero(1, 1)});
  const auto e = condition_on_value(b, a);
  EXPECT_LT(max_abs(u.mean - e.mean), 1e-14);
  EXPECT_LT(max_abs(u.covariance - e.covariance), 1e-14);
}

TEST(UncertainValue, InflationGrowsAndStaysBetween) {
  for_all(20, 39, [](Gen& g) {
    auto inst = make_instance(g);
    const auto b = spatial_mean_blocks(inst.post, inst.V);
    const VectorXd a = VectorXd::Constant(1, g.normal());
    const auto exact = condition_on_value(b, a);
    const auto small = condition_on_uncertain_value(b, {a, MatrixXd::Constant(1, 1, 0.5 * b.s22(0, 0))});
    const auto large = condition_on_uncertain_value(b, {a, MatrixXd::Constant(1, 1, 100.0)});
    const auto huge = condition_on_uncertain_value(b, {a, MatrixXd::Constant(1, 1, 1e4)});
    const auto ex = exact.covariance.diagonal().array();
    const auto sm = small.covariance.diagonal().array();
    EXPECT_TRUE((sm >= ex - 1e-12).all());
    EXPECT_TRUE((sm <= b.s11.diagonal().array() + 1e-12).all());
    EXPECT_GT(huge.covariance.trace(), large.covariance.trace());
  });
}

TEST(UncertainValue, JointGaussianSamplingOracle) {
  // One point, two coefficients: a ~ N(mu_a, s_a), then g | a from the joint
  // Gaussian; the marginal of g must match the closed form.
  const CoefficientPosterior post{(VectorXd(2) << 1.0, 0.5).finished(),
                                  (MatrixXd(2, 2) << 0.4, 0.1, 0.1, 0.3).finished()};
  DesignMatrix V;
  V.values = (MatrixXd(1, 2) << 1.0, 0.8).finished();
  V.weights = VectorXd::Ones(1);
  const auto b = spatial_mean_blocks(post, V);
  const double mu_a = 1.4, s_a = 0.05;
  const auto closed = condition_on_uncertain_value(b, {VectorXd::Constant(1, mu_a), MatrixXd::Constant(1, 1, s_a)});

  Gen g(40);
  const double s11 = b.s11(0, 0), s12 = b.s12(0, 0), s22 = b.s22(0, 0);
  std::vector<double> draws(200000);
  for (auto& d : draws) {
    const double l = mu_a + std::sqrt(s_a) * g.normal();
    const double m = b.mu1(0) + s12 / s22 * (l - b.mu2(0));
    d = m + std::sqrt(s11 - s12 * s12 / s22) * g.normal();
  }
  const auto ms = oracle::mean_and_se(draws);
  EXPECT_LT(std::abs(ms.mean - closed.mean(0)), 3.0 * ms.se);
  EXPECT_LT(std::abs(ms.variance - closed.covariance(0, 0)), 3.0 * ms.variance_se);
}
