#include "bpc/app/synthetic.hpp"
#include "bpc/sparse_prior.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <numbers>

using namespace bpc;
using bpc::testing::for_all;
using bpc::testing::Gen;

namespace {

HorseshoeConfig default_config(std::size_t M, double noise_variance) {
  HorseshoeConfig c;
  c.nu = 25.0;
  c.s = 3.0;
  c.beta = 0.1;
  c.noise_variance = noise_variance;
  c.M = M;
  return c;
}

// Log posterior assembled from the textbook densities (constants kept).
double reference_logdensity(const HorseshoeState& st, const HorseshoeConfig& cfg, const MatrixXd& V, const VectorXd& y) {
  const double pi = std::numbers::pi;
  auto half_cauchy = [&](double x) { return std::log(2.0 / pi) - std::log1p(x * x); };
  const double a = cfg.nu / 2.0, b = cfg.nu * cfg.s * cfg.s / 2.0;
  double lp = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(st.c2) - b / st.c2;
  lp += half_cauchy(st.tau_tilde);
  const double t = cfg.beta * std::sqrt(cfg.noise_variance) / ((1.0 - cfg.beta) * std::sqrt(double(cfg.M))) * st.tau_tilde;
  const double c = std::sqrt(st.c2);
  for (Eigen::Index i = 0; i < st.alpha.size(); ++i) {
    const double lt = st.lambda_tilde(i);
    lp += half_cauchy(lt);
    const double lam = c * lt / std::sqrt(st.c2 + t * t * lt * lt);
    const double sd = t * lam;
    lp += -0.5 * std::log(2.0 * pi * sd * sd) - 0.5 * st.alpha(i) * st.alpha(i) / (sd * sd);
  }
  const VectorXd r = y - V * st.alpha;
  lp += -0.5 * r.squaredNorm() / cfg.noise_variance - 0.5 * y.size() * std::log(2.0 * pi * cfg.noise_variance);
  return lp;
}

HorseshoeState random_state(Gen& g, Eigen::Index n) {
  HorseshoeState s;
  s.alpha = g.vector(n, 0.3);
  s.lambda_tilde = g.vector(n).array().exp();
  s.tau_tilde = std::exp(g.normal());
  s.c2 = std::exp(g.normal());
  return s;
}

DesignMatrix wrap(const MatrixXd& v) {
  DesignMatrix d;
  d.values = v;
  d.weights = VectorXd::Ones(v.rows());
  return d;
}

ChainConfig chains(std::uint64_t seed) {
  ChainConfig c;
  c.n_chains = 2;
  c.warmup = 500;
  c.draws = 500;
  c.seed = seed;
  c.target_accept = 0.9;
  return c;
}

}  // namespace

TEST(HorseshoeTau, Formula) {
  auto c = default_config(1, 1.0);
  c.beta = 0.5;
  EXPECT_DOUBLE_EQ(tau(c), 1.0);
  c = default_config(15, 9.0);
  EXPECT_NEAR(tau(c), 0.1 * 3.0 / (0.9 * std::sqrt(15.0)), 1e-15);
  EXPECT_NEAR(tau(c), 0.08607, 1e-5);
  c.beta = 1e-9;
  EXPECT_LT(tau(c), 1e-8);
  c.beta = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(HorseshoeDensity, MatchesReferenceUpToConstant) {
  for_all(20, 51, [](Gen& g) {
    const Eigen::Index n = g.integer(1, 8);
    const Eigen::Index m = g.integer(1, 12);
    const MatrixXd V = g.matrix(m, n);
    const VectorXd y = g.vector(m);
    const auto cfg = default_config(static_cast<std::size_t>(m), g.uniform(0.1, 2.0));
    const auto s1 = random_state(g, n), s2 = random_state(g, n);
    const double lib = horseshoe_logdensity(s1, cfg, wrap(V), y).value - horseshoe_logdensity(s2, cfg, wrap(V), y).value;
    const double ref = reference_logdensity(s1, cfg, V, y) - reference_logdensity(s2, cfg, V, y);
    EXPECT_NEAR(lib, ref, 1e-8 * std::max(1.0, std::abs(ref)));
  });
}

TEST(HorseshoeDensity, GradientMatchesFiniteDifferences) {
  for_all(20, 52, [](Gen& g) {
    const Eigen::Index n = g.integer(1, 8);
    const Eigen::Index m = g.integer(1, 12);
    const MatrixXd V = g.matrix(m, n);
    const VectorXd y = g.vector(m);
    const auto cfg = default_config(static_cast<std::size_t>(m), 0.5);
    const auto st = random_state(g, n);
    const VectorXd grad = horseshoe_logdensity(st, cfg, wrap(V), y).gradient;
    const VectorXd fd = oracle::finite_difference(
        [&](const VectorXd& th) { return reference_logdensity(HorseshoeState::unpack(th), cfg, V, y); }, st.pack(), 1e-6);
    for (Eigen::Index i = 0; i < fd.size(); ++i)
      EXPECT_LT(std::abs(grad(i) - fd(i)) / std::max({1.0, std::abs(fd(i))}), 1e-5) << "parameter " << i;
  });
}

TEST(HorseshoeDensity, SamplingModelsPassGradientCheck) {
  Gen g(53);
  const MatrixXd V = g.matrix(15, 21);
  const VectorXd y = g.vector(15);
  const auto cfg = default_config(15, 0.01);
  EXPECT_LT(gradient_check(horseshoe_model(cfg, wrap(V), y), 20).max_relative_error, 1e-5);
  EXPECT_LT(gradient_check(horseshoe_noncentered_model(cfg, wrap(V), y), 20).max_relative_error, 1e-5);
  EXPECT_LT(gradient_check(hierarchical_gaussian_model(wrap(V), y, 0.01), 20).max_relative_error, 1e-5);
}

TEST(HorseshoeDensity, PackRoundTrip) {
  Gen g(54);
  const auto s = random_state(g, 5);
  const auto back = HorseshoeState::unpack(s.pack());
  EXPECT_EQ(back.alpha, s.alpha);
  EXPECT_EQ(back.lambda_tilde, s.lambda_tilde);
  EXPECT_EQ(back.tau_tilde, s.tau_tilde);
  EXPECT_EQ(back.c2, s.c2);
}

TEST(HorseshoeScales, CapIsActiveForLargeLambda) {
  Gen g(55);
  const auto cfg = default_config(15, 1.0);
  auto s = random_state(g, 4);
  s.lambda_tilde.setConstant(1e8);
  const VectorXd lam = regularized_local_scales(s, cfg);
  const double cap = std::sqrt(s.c2) / (tau(cfg) * s.tau_tilde);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(lam(i), cap, 1e-6 * cap);
}

TEST(HorseshoeScales, NeverExceedCap) {
  for_all(50, 56, [](Gen& g) {
    const auto cfg = default_config(static_cast<std::size_t>(g.integer(1, 50)), g.uniform(0.01, 4.0));
    auto s = random_state(g, 6);
    s.lambda_tilde = g.vector(6, 4.0).array().exp();
    const VectorXd lam = regularized_local_scales(s, cfg);
    const double cap = std::sqrt(s.c2) / (tau(cfg) * s.tau_tilde);
    EXPECT_TRUE((lam.array() <= cap + 1e-12).all());
  });
}

TEST(HorseshoeDensity, ShrinksAsGlobalScaleVanishes) {
  // With tau~ -> 0 the alpha prior concentrates at zero: a non-zero alpha
  // becomes ever less probable relative to alpha = 0.
  Gen g(57);
  const auto cfg = default_config(10, 1.0);
  const MatrixXd V = MatrixXd::Zero(1, 3);
  const VectorXd y = VectorXd::Zero(1);
  auto s = random_state(g, 3);
  s.alpha.setConstant(0.1);
  auto zero = s;
  zero.alpha.setZero();
  double prev = 0.0;
  for (double t : {1.0, 1e-1, 1e-2, 1e-3}) {
    s.tau_tilde = zero.tau_tilde = t;
    const double gap = horseshoe_logdensity(zero, cfg, wrap(V), y).value - horseshoe_logdensity(s, cfg, wrap(V), y).value;
    EXPECT_GT(gap, prev);
    prev = gap;
  }
}

TEST(FitSparse, ZeroDataShrinksEverything) {
  const auto inst = app::sparse_instance();
  Gen g(58);
  const auto V = inst.basis.design_matrix(g.cube(15, 5));
  const auto fit = fit_sparse(V, VectorXd::Zero(15), default_config(15, 0.01), chains(3));
  EXPECT_LT(fit.mean.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_EQ(fit.coefficient_draws.cols(), 21);
  EXPECT_EQ(fit.config.nu, 25.0);
  EXPECT_EQ(fit.config.s, 3.0);
  EXPECT_EQ(fit.config.beta, 0.1);
  // Positivity of every constrained hyperparameter draw.
  const MatrixXd raw = fit.batch.pooled();
  EXPECT_TRUE((raw.rightCols(23).array() > 0.0).all());
}

TEST(FitSparse, RecoversSupportOnSparseInstance) {
  const auto inst = app::sparse_instance();
  ASSERT_EQ(inst.basis.size(), 21u);
  Gen g(59);
  const MatrixXd X = g.cube(15, 5);
  const auto V = inst.basis.design_matrix(X);
  VectorXd y = V.values * inst.truth;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.1 * g.normal();
  const auto fit = fit_sparse(V, y, default_config(15, 0.01), chains(4));
  std::vector<Eigen::Index> order(21);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(fit.mean(a)) > std::abs(fit.mean(b)); });
  std::vector<std::size_t> top{static_cast<std::size_t>(order[0]), static_cast<std::size_t>(order[1])};
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, inst.support);
  EXPECT_LT(fit.batch.max_r_hat(), 1.1);
  EXPECT_EQ(fit.shrinkage.size(), 21);
  EXPECT_TRUE((fit.shrinkage.array() >= 0.0).all() && (fit.shrinkage.array() <= 1.0).all());
}

TEST(FitSparse, MomentMatchedPosterior) {
  Gen g(60);
  SparseFit fit;
  fit.coefficient_draws = g.matrix(500, 3);
  const auto p = fit.moment_matched();
  EXPECT_LT((p.mean - fit.coefficient_draws.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-14);
  const MatrixXd c = fit.coefficient_draws.rowwise() - fit.coefficient_draws.colwise().mean();
  EXPECT_LT((p.covariance - c.transpose() * c / 499.0).cwiseAbs().maxCoeff(), 1e-12);
}
