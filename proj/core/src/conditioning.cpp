#include "bpc/conditioning.hpp"

#include "bpc/errors.hpp"
#include "bpc/linalg.hpp"

#include <stdexcept>

namespace bpc {

LinearFunctionalBlocks functional_blocks(const CoefficientPosterior& post, const DesignMatrix& V, const MatrixXd& c) {
  if (V.cols() != post.size() || c.rows() != post.size()) {
    throw std::invalid_argument("functional blocks: dimension mismatch with posterior");
  }
  LinearFunctionalBlocks b;
  b.mu1 = V.values * post.mean;
  b.mu2 = c.transpose() * post.mean;
  const MatrixXd sv = post.covariance * V.values.transpose();  // N x M
  b.s11 = V.values * sv;
  b.s11 = 0.5 * (b.s11 + b.s11.transpose());
  b.s12 = V.values * (post.covariance * c);
  b.s22 = c.transpose() * post.covariance * c;
  b.s22 = 0.5 * (b.s22 + b.s22.transpose());
  return b;
}

LinearFunctionalBlocks spatial_mean_blocks(const CoefficientPosterior& post, const DesignMatrix& V) {
  if (V.cols() != post.size()) throw std::invalid_argument("spatial mean blocks: dimension mismatch");
  LinearFunctionalBlocks b;
  b.mu1 = V.values * post.mean;
  b.mu2 = post.mean.head(1);
  b.s11 = V.values * post.covariance * V.values.transpose();
  b.s11 = 0.5 * (b.s11 + b.s11.transpose());
  b.s12 = V.values * post.covariance.col(0);
  b.s22 = post.covariance.topLeftCorner(1, 1);
  return b;
}

namespace {

void check_blocks(const LinearFunctionalBlocks& b) {
  const auto m = b.mu1.size();
  const auto l = b.mu2.size();
  if (b.s11.rows() != m || b.s11.cols() != m || b.s12.rows() != m || b.s12.cols() != l || b.s22.rows() != l ||
      b.s22.cols() != l) {
    throw std::invalid_argument("inconsistent linear functional blocks");
  }
}

// G^T = S22^-1 S12^T.
MatrixXd gain_transpose(const LinearFunctionalBlocks& b) {
  if (b.s22.size() == 0 || !(b.s22.diagonal().maxCoeff() > 0.0)) {
    throw NumericalError("functional covariance S22 is singular: the prior has no uncertainty in the functional");
  }
  const auto chol = robust_cholesky(b.s22, "functional covariance S22");
  return chol.solve(MatrixXd(b.s12.transpose()));
}

}  // namespace

PredictiveDistribution condition_on_value(const LinearFunctionalBlocks& blocks, const VectorXd& a) {
  check_blocks(blocks);
  if (a.size() != blocks.mu2.size()) throw std::invalid_argument("functional value has wrong length");
  const MatrixXd gt = gain_transpose(blocks);
  PredictiveDistribution out;
  out.mean = blocks.mu1 + gt.transpose() * (a - blocks.mu2);
  out.covariance = blocks.s11 - blocks.s12 * gt;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

PredictiveDistribution condition_on_uncertain_value(const LinearFunctionalBlocks& blocks,
                                                    const UncertainFunctionalValue& a) {
  check_blocks(blocks);
  const auto l = blocks.mu2.size();
  if (a.mean.size() != l || a.covariance.rows() != l || a.covariance.cols() != l) {
    throw std::invalid_argument("uncertain functional value has wrong dimension");
  }
  const MatrixXd gt = gain_transpose(blocks);
  PredictiveDistribution out;
  out.mean = blocks.mu1 + gt.transpose() * (a.mean - blocks.mu2);
  out.covariance = blocks.s11 - blocks.s12 * gt + gt.transpose() * a.covariance * gt;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

CoefficientPosterior condition_coefficients(const CoefficientPosterior& post, const MatrixXd& c,
                                            const UncertainFunctionalValue& a) {
  const auto l = c.cols();
  if (c.rows() != post.size() || a.mean.size() != l || a.covariance.rows() != l || a.covariance.cols() != l) {
    throw std::invalid_argument("coefficient conditioning: dimension mismatch");
  }
  const MatrixXd sc = post.covariance * c;  // N x L
  MatrixXd s22 = c.transpose() * sc;
  s22 = 0.5 * (s22 + s22.transpose());
  if (!(s22.diagonal().maxCoeff() > 0.0)) {
    throw NumericalError("functional covariance is singular: the prior has no uncertainty in the functional");
  }
  const auto chol = robust_cholesky(s22, "functional covariance");
  const MatrixXd kt = chol.solve(MatrixXd(sc.transpose()));  // L x N, K = Sigma C S22^-1
  CoefficientPosterior out;
  out.mean = post.mean + kt.transpose() * (a.mean - c.transpose() * post.mean);
  out.covariance = post.covariance - sc * kt + kt.transpose() * a.covariance * kt;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

CoefficientPosterior condition_spatial_mean(const CoefficientPosterior& post, double a, double value_variance) {
  if (value_variance < 0.0) throw std::invalid_argument("value variance must be non-negative");
  const MatrixXd e1 = MatrixXd::Identity(post.size(), 1);
  return condition_coefficients(post, e1, {VectorXd::Constant(1, a), MatrixXd::Constant(1, 1, value_variance)});
}

}  // namespace bpc
