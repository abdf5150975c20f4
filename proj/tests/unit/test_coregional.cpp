#include "bpc/coregional.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace bpc;
using bpc::testing::for_all;
using bpc::testing::Gen;

namespace {

std::shared_ptr<const PolynomialBasis> small_basis(int d = 2, int p = 2) {
  return std::make_shared<const PolynomialBasis>(InputSpace::uniform_cube(static_cast<std::size_t>(d)),
                                                 build_index_set(IndexScheme::TotalOrder, d, p));
}

CoregionalModel random_model(Gen& g, std::shared_ptr<const PolynomialBasis> basis, Eigen::Index outputs) {
  CoregionalModel m;
  m.A = g.matrix(static_cast<Eigen::Index>(basis->size()), outputs);
  m.W = g.vector(outputs);
  m.kappa = g.vector(outputs).cwiseAbs().array() + 0.1;
  m.noise_variance = g.uniform(0.01, 0.5);
  m.basis = std::move(basis);
  return m;
}

StackedDataset stacked_sets(Gen& g, Eigen::Index outputs, int d, int max_rows = 6) {
  StackedDataset s;
  for (Eigen::Index i = 0; i < outputs; ++i) {
    const auto rows = g.integer(1, max_rows);
    s.X.push_back(g.cube(rows, d));
    s.y.push_back(g.vector(rows));
  }
  return s;
}

// Kernel entry written straight from the definition, one pair at a time.
double kernel_entry(const CoregionalModel& m, Eigen::Index i, Eigen::Index j, const VectorXd& vi, const VectorXd& vj) {
  const MatrixXd B = m.W * m.W.transpose() + MatrixXd(m.kappa.asDiagonal());
  double s = 0.0;
  for (Eigen::Index k = 0; k < vi.size(); ++k) s += vi(k) * std::abs(m.A(k, i)) * std::abs(m.A(k, j)) * vj(k);
  return B(i, j) * s;
}

MatrixXd reference_covariance(const CoregionalModel& m, const StackedDataset& data, bool noise) {
  std::vector<MatrixXd> V;
  for (const auto& X : data.X) V.push_back(m.basis->design_matrix(X).values);
  const Eigen::Index n = data.total_rows();
  MatrixXd K(n, n);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < V.size(); ++i)
    for (Eigen::Index a = 0; a < V[i].rows(); ++a, ++r) {
      Eigen::Index c = 0;
      for (std::size_t j = 0; j < V.size(); ++j)
        for (Eigen::Index b = 0; b < V[j].rows(); ++b, ++c) {
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          K(r, c) = kernel_entry(m, ii, jj, V[i].row(a).transpose(), V[j].row(b).transpose());
          if (noise && r == c) K(r, c) += m.noise_variance;
        }
    }
  return K;
}

double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(CoregionalKernel, MatchesDefinition) {
  for_all(20, 61, [](Gen& g) {
    const auto O = g.integer(1, 3);
    const auto m = random_model(g, small_basis(), O);
    const auto data = stacked_sets(g, O, 2);
    const MatrixXd K = block_covariance(m, data);
    EXPECT_LT(max_abs(K - reference_covariance(m, data, false)), 1e-12);
    EXPECT_LT(max_abs(K - K.transpose()), 1e-12);
  });
}

TEST(CoregionalKernel, TrainingBlockAddsNoiseOnlyOnDiagonalBlocks) {
  Gen g(62);
  const auto m = random_model(g, small_basis(), 2);
  const MatrixXd X = g.cube(4, 2);
  const MatrixXd plain = cross_covariance(m, 0, 0, X, X);
  const MatrixXd noisy = cross_covariance(m, 0, 0, X, X, true);
  EXPECT_LT(max_abs(noisy - plain - m.noise_variance * MatrixXd::Identity(4, 4)), 1e-14);
  EXPECT_LT(max_abs(cross_covariance(m, 0, 1, X, X, true) - cross_covariance(m, 0, 1, X, X)), 1e-14);
}

TEST(CoregionalKernel, IdentityCoregionalizationIsBlockDiagonal) {
  Gen g(63);
  auto m = random_model(g, small_basis(), 3);
  m.W.setZero();
  m.kappa.setOnes();
  const auto data = stacked_sets(g, 3, 2);
  const MatrixXd K = block_covariance(m, data);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const Eigen::Index ri = data.X[i].rows();
      const Eigen::Index cj = data.X[j].rows();
      if (i != j) {
        EXPECT_EQ(max_abs(K.block(r, c, ri, cj)), 0.0);
      }
      c += cj;
    }
    r += data.X[i].rows();
  }
}

TEST(CoregionalKernel, SingleOutputReducesToScaledPolynomialKernel) {
  Gen g(64);
  auto m = random_model(g, small_basis(), 1);
  const MatrixXd X = g.cube(5, 2);
  const MatrixXd V = m.basis->design_matrix(X).values;
  const double b = m.W(0) * m.W(0) + m.kappa(0);
  const MatrixXd expected = b * V * m.A.col(0).array().square().matrix().asDiagonal() * V.transpose();
  EXPECT_LT(max_abs(cross_covariance(m, 0, 0, X, X) - expected), 1e-12);
}

TEST(CoregionalKernel, PositiveSemidefinite) {
  for_all(30, 65, [](Gen& g) {
    const auto m = random_model(g, small_basis(), 3);
    const auto data = stacked_sets(g, 3, 2, 10);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(block_covariance(m, data));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  });
}

TEST(CoregionalDensity, LikelihoodMatchesDenseGaussian) {
  for_all(20, 66, [](Gen& g) {
    const auto O = g.integer(1, 3);
    const auto m = random_model(g, small_basis(), O);
    const auto data = stacked_sets(g, O, 2);
    const double ref = oracle::gaussian_logpdf(data.stacked_y(), reference_covariance(m, data, true));
    EXPECT_NEAR(coregional_logdensity(m, data).log_likelihood, ref, 1e-10 * std::max(1.0, std::abs(ref)));
  });
}

TEST(CoregionalDensity, PriorTermsAreStandard) {
  Gen g(67);
  const auto m = random_model(g, small_basis(), 2);
  const auto data = stacked_sets(g, 2, 2);
  const auto r = coregional_logdensity(m, data);
  const double lp = -0.5 * m.A.squaredNorm() - 0.5 * m.W.squaredNorm() - 0.5 * m.kappa.squaredNorm();
  // Differences between two parameter sets remove the normalizing constants.
  auto m2 = m;
  m2.A *= 0.5;
  m2.W *= 2.0;
  m2.kappa *= 1.5;
  const auto r2 = coregional_logdensity(m2, data);
  const double lp2 = -0.5 * m2.A.squaredNorm() - 0.5 * m2.W.squaredNorm() - 0.5 * m2.kappa.squaredNorm();
  EXPECT_NEAR((r.value - r.log_likelihood) - (r2.value - r2.log_likelihood), lp - lp2, 1e-10);
}

TEST(CoregionalDensity, GradientMatchesFiniteDifferences) {
  for_all(15, 68, [](Gen& g) {
    const auto O = g.integer(1, 3);
    const auto basis = small_basis();
    const auto m = random_model(g, basis, O);
    const auto data = stacked_sets(g, O, 2);
    const VectorXd theta = pack_coregional(m);
    const VectorXd grad = coregional_logdensity(m, data).gradient;
    const VectorXd fd = oracle::finite_difference(
        [&](const VectorXd& t) {
          return coregional_logdensity(unpack_coregional(t, basis, O, m.noise_variance), data).value;
        },
        theta, 1e-6);
    for (Eigen::Index i = 0; i < fd.size(); ++i)
      EXPECT_LT(std::abs(grad(i) - fd(i)) / std::max(1.0, std::abs(fd(i))), 1e-5) << "parameter " << i;
  });
}

TEST(CoregionalDensity, SamplingModelGradientCheck) {
  Gen g(69);
  const auto basis = small_basis();
  const auto data = stacked_sets(g, 2, 2, 8);
  const auto model = coregional_sampling_model(basis, data, 0.05);
  EXPECT_EQ(model.dim, static_cast<Eigen::Index>(2 * basis->size() + 4));
  EXPECT_LT(gradient_check(model, 10).max_relative_error, 1e-5);
}

TEST(CoregionalDensity, PackRoundTrip) {
  Gen g(70);
  const auto basis = small_basis();
  const auto m = random_model(g, basis, 3);
  const auto back = unpack_coregional(pack_coregional(m), basis, 3, m.noise_variance);
  EXPECT_EQ(back.A, m.A);
  EXPECT_EQ(back.W, m.W);
  EXPECT_EQ(back.kappa, m.kappa);
}

TEST(CoregionalPredict, IdentityCoregionalizationMatchesIndependentModels) {
  for_all(10, 71, [](Gen& g) {
    auto m = random_model(g, small_basis(), 2);
    m.W.setZero();
    m.kappa.setOnes();
    const auto train = stacked_sets(g, 2, 2);
    const std::vector<MatrixXd> xs{g.cube(3, 2), g.cube(4, 2)};
    const auto pred = predict_conditional(m, train, xs);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const GaussianPrior prior{VectorXd::Zero(m.A.rows()), m.A.col(col).array().square().matrix().asDiagonal()};
      const auto post = conjugate_posterior(m.basis->design_matrix(train.X[i]), train.y[i], prior,
                                            NoiseSpec(m.noise_variance));
      const auto ref = predictive(post, *m.basis, xs[i]);
      EXPECT_LT(max_abs(pred.outputs[i].mean - ref.mean), 1e-8);
      EXPECT_LT(max_abs(pred.outputs[i].covariance - ref.covariance), 1e-8);
    }
  });
}

TEST(CoregionalPredict, ConditionalMatchesDenseGaussianConditioning) {
  Gen g(72);
  const auto m = random_model(g, small_basis(), 2);
  const auto train = stacked_sets(g, 2, 2);
  StackedDataset test;
  test.X = {g.cube(2, 2), g.cube(3, 2)};
  test.y = {VectorXd::Zero(2), VectorXd::Zero(3)};
  const auto pred = predict_conditional(m, train, test.X);

  StackedDataset all;
  for (std::size_t i = 0; i < 2; ++i) {
    MatrixXd X(train.X[i].rows() + test.X[i].rows(), 2);
    X << train.X[i], test.X[i];
    all.X.push_back(X);
    all.y.push_back(VectorXd::Zero(X.rows()));
  }
  const MatrixXd K = reference_covariance(m, all, false);
  std::vector<Eigen::Index> tr, te;
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (Eigen::Index a = 0; a < train.X[i].rows(); ++a) tr.push_back(r++);
    for (Eigen::Index a = 0; a < test.X[i].rows(); ++a) te.push_back(r++);
  }
  const MatrixXd Ktt = K(tr, tr) + m.noise_variance * MatrixXd::Identity(Eigen::Index(tr.size()), Eigen::Index(tr.size()));
  const MatrixXd Kst = K(te, tr);
  const VectorXd mean = Kst * Ktt.inverse() * train.stacked_y();
  const MatrixXd cov = K(te, te) - Kst * Ktt.inverse() * Kst.transpose();
  EXPECT_LT(max_abs(pred.outputs[0].mean - mean.head(2)), 1e-8);
  EXPECT_LT(max_abs(pred.outputs[1].mean - mean.tail(3)), 1e-8);
  EXPECT_LT(max_abs(pred.outputs[0].covariance - cov.topLeftCorner(2, 2)), 1e-8);
  EXPECT_LT(max_abs(pred.outputs[1].covariance - cov.bottomRightCorner(3, 3)), 1e-8);
}

TEST(CoregionalPredict, OutputsAreExchangeable) {
  Gen g(73);
  const auto m = random_model(g, small_basis(), 3);
  const auto train = stacked_sets(g, 3, 2);
  const std::vector<MatrixXd> xs{g.cube(2, 2), g.cube(2, 2), g.cube(2, 2)};
  const std::vector<int> perm{2, 0, 1};
  CoregionalModel pm = m;
  StackedDataset ptrain;
  std::vector<MatrixXd> pxs;
  for (std::size_t k = 0; k < 3; ++k) {
    pm.A.col(Eigen::Index(k)) = m.A.col(perm[k]);
    pm.W(Eigen::Index(k)) = m.W(perm[k]);
    pm.kappa(Eigen::Index(k)) = m.kappa(perm[k]);
    ptrain.X.push_back(train.X[std::size_t(perm[k])]);
    ptrain.y.push_back(train.y[std::size_t(perm[k])]);
    pxs.push_back(xs[std::size_t(perm[k])]);
  }
  const auto a = predict_conditional(m, train, xs);
  const auto b = predict_conditional(pm, ptrain, pxs);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LT(max_abs(b.outputs[k].mean - a.outputs[std::size_t(perm[k])].mean), 1e-10);
    EXPECT_LT(max_abs(b.outputs[k].covariance - a.outputs[std::size_t(perm[k])].covariance), 1e-10);
  }
  EXPECT_NEAR(coregional_logdensity(m, train).value, coregional_logdensity(pm, ptrain).value, 1e-10);
}

TEST(CoregionalPredict, ZeroTestPoints) {
  Gen g(74);
  const auto m = random_model(g, small_basis(), 2);
  const auto train = stacked_sets(g, 2, 2);
  const auto pred = predict_conditional(m, train, {MatrixXd(0, 2), MatrixXd(0, 2)});
  ASSERT_EQ(pred.outputs.size(), 2u);
  EXPECT_EQ(pred.outputs[0].size(), 0);
  EXPECT_EQ(pred.outputs[1].size(), 0);
}

TEST(CoregionalPredict, LargeNoiseShrinksToPrior) {
  Gen g(75);
  auto m = random_model(g, small_basis(), 2);
  m.noise_variance = 1e10;
  const auto train = stacked_sets(g, 2, 2);
  const std::vector<MatrixXd> xs{g.cube(3, 2), g.cube(3, 2)};
  const auto pred = predict_conditional(m, train, xs);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT(max_abs(pred.outputs[i].mean), 1e-8);
    const auto ii = static_cast<Eigen::Index>(i);
    EXPECT_LT(max_abs(pred.outputs[i].covariance - cross_covariance(m, ii, ii, xs[i], xs[i])), 1e-6);
  }
}

TEST(MixtureMoments, HandComputed) {
  PredictiveDistribution a{VectorXd::Constant(1, 0.0), MatrixXd::Constant(1, 1, 1.0)};
  PredictiveDistribution b{VectorXd::Constant(1, 2.0), MatrixXd::Constant(1, 1, 3.0)};
  const auto m = mixture_moments({a, b});
  EXPECT_NEAR(m.mean(0), 1.0, 1e-12);
  EXPECT_NEAR(m.covariance(0, 0), 3.0, 1e-12);

  PredictiveDistribution c{(VectorXd(2) << 1.0, -1.0).finished(), MatrixXd::Identity(2, 2)};
  PredictiveDistribution d{(VectorXd(2) << -1.0, 1.0).finished(), MatrixXd::Identity(2, 2)};
  const auto md = mixture_moments({c, d});
  EXPECT_LT(max_abs(md.mean), 1e-12);
  EXPECT_NEAR(md.covariance(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(md.covariance(0, 0), 2.0, 1e-12);
}

TEST(MixtureMoments, IdenticalComponentsAreUnchanged) {
  Gen g(76);
  PredictiveDistribution a{g.vector(3), g.spd(3)};
  const auto m = mixture_moments(std::vector<PredictiveDistribution>(7, a));
  EXPECT_LT(max_abs(m.mean - a.mean), 1e-12);
  EXPECT_LT(max_abs(m.covariance - a.covariance), 1e-12);
}

TEST(CoregionalPredict, MixtureNeedsEnoughDraws) {
  Gen g(77);
  const auto m = random_model(g, small_basis(), 2);
  const auto train = stacked_sets(g, 2, 2);
  const std::vector<MatrixXd> xs{g.cube(2, 2), g.cube(2, 2)};
  EXPECT_THROW(predict(std::vector<CoregionalModel>(kMinMixtureDraws - 1, m), train, xs), std::invalid_argument);
  const auto p = predict(std::vector<CoregionalModel>(kMinMixtureDraws, m), train, xs);
  const auto c = predict_conditional(m, train, xs);
  EXPECT_LT(max_abs(p.outputs[1].mean - c.outputs[1].mean), 1e-10);
  EXPECT_LT(max_abs(p.outputs[1].covariance - c.outputs[1].covariance), 1e-10);
}

TEST(CoregionalModel, Validation) {
  Gen g(78);
  auto m = random_model(g, small_basis(), 2);
  EXPECT_NO_THROW(m.validate());
  m.kappa(0) = 0.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = random_model(g, small_basis(), 2);
  m.W = VectorXd::Zero(3);
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(IndependentBaseline, MatchesConjugateModel) {
  Gen g(79);
  const auto basis = small_basis();
  const auto train = stacked_sets(g, 2, 2);
  const std::vector<MatrixXd> xs{g.cube(3, 2), g.cube(3, 2)};
  const auto p = predict_independent(*basis, train, xs, 2.0, 0.1);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto post = conjugate_posterior(basis->design_matrix(train.X[i]), train.y[i],
                                          GaussianPrior::isotropic(Eigen::Index(basis->size()), 2.0), NoiseSpec(0.1));
    const auto ref = predictive(post, *basis, xs[i]);
    EXPECT_LT(max_abs(p[i].mean - ref.mean), 1e-10);
    EXPECT_LT(max_abs(p[i].covariance - ref.covariance), 1e-10);
  }
}
