#include "bpc/linear_bayes.hpp"

#include "bpc/errors.hpp"
#include "bpc/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpc {

GaussianPrior GaussianPrior::isotropic(Eigen::Index n, double variance, double mean) {
  if (!(variance >= 0.0)) throw std::invalid_argument("prior variance must be non-negative");
  return {VectorXd::Constant(n, mean), variance * MatrixXd::Identity(n, n)};
}

GaussianPrior GaussianPrior::diffuse(Eigen::Index n, double scale) { return isotropic(n, scale); }

NoiseSpec::NoiseSpec(double v) : variance(v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("noise variance must be positive and finite");
}

namespace {

void check_prior(const GaussianPrior& prior) {
  if (prior.covariance.rows() != prior.mean.size() || prior.covariance.cols() != prior.mean.size()) {
    throw std::invalid_argument("prior covariance does not match prior mean dimension");
  }
  if (!is_symmetric(prior.covariance)) throw NumericalError("prior covariance is not symmetric");
}

}  // namespace

CoefficientPosterior conjugate_posterior(const DesignMatrix& V, const VectorXd& y, const GaussianPrior& prior,
                                         const NoiseSpec& noise) {
  if (V.rows() < 1) throw std::invalid_argument("conjugate posterior needs at least one observation");
  if (y.size() != V.rows()) throw std::invalid_argument("output length does not match design matrix rows");
  if (V.cols() != prior.size()) {
    throw std::invalid_argument("design matrix has " + std::to_string(V.cols()) + " columns, prior has dimension " +
                                std::to_string(prior.size()));
  }
  check_prior(prior);

  const auto prior_chol = robust_cholesky(prior.covariance, "prior covariance");
  const MatrixXd lt = prior_chol.lower();
  const double precision = 1.0 / noise.variance;

  // Whitened system: A = I + sigma^-2 (V L)^T (V L).
  const MatrixXd vl = V.values * lt;
  MatrixXd a = MatrixXd::Identity(prior.size(), prior.size());
  a.selfadjointView<Eigen::Lower>().rankUpdate(vl.transpose(), precision);
  a = a.selfadjointView<Eigen::Lower>();
  const auto a_chol = robust_cholesky(a, "posterior precision");

  CoefficientPosterior post;
  const VectorXd residual = y - V.values * prior.mean;
  post.mean = prior.mean + lt * a_chol.solve(VectorXd(precision * (vl.transpose() * residual)));

  // Sigma_a = L A^-1 L^T = R^T R with R = La^-1 L^T.
  const MatrixXd r = a_chol.llt.matrixL().solve(lt.transpose());
  post.covariance = r.transpose() * r;
  return post;
}

PredictiveDistribution predictive(const CoefficientPosterior& posterior, const DesignMatrix& v_star) {
  if (v_star.cols() != posterior.size()) {
    throw std::invalid_argument("posterior dimension does not match design matrix columns");
  }
  PredictiveDistribution out;
  out.mean = v_star.values * posterior.mean;
  const MatrixXd tmp = v_star.values * posterior.covariance;
  out.covariance = tmp * v_star.values.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

PredictiveDistribution predictive(const CoefficientPosterior& posterior, const PolynomialBasis& basis,
                                  const MatrixXd& x_star) {
  if (static_cast<std::size_t>(posterior.size()) != basis.size()) {
    throw std::invalid_argument("posterior dimension does not match index set");
  }
  return predictive(posterior, basis.design_matrix(x_star));
}

PredictiveDistribution predictive(const CoefficientPosterior& posterior, const InputSpace& space,
                                  const MultiIndexSet& idx, const MatrixXd& x_star) {
  return predictive(posterior, PolynomialBasis(space, idx), x_star);
}

VectorXd kernel_posterior_coefficients(const MatrixXd& sigma, const DesignMatrix& V, const VectorXd& y,
                                       const NoiseSpec& noise) {
  if (sigma.rows() != V.cols() || sigma.cols() != V.cols()) {
    throw std::invalid_argument("kernel covariance does not match design matrix columns");
  }
  if (y.size() != V.rows()) throw std::invalid_argument("output length does not match design matrix rows");
  const MatrixXd sv = sigma * V.values.transpose();  // N x M
  MatrixXd k = V.values * sv;
  k = 0.5 * (k + k.transpose());
  k.diagonal().array() += noise.variance;
  const auto chol = robust_cholesky(k, "kernel system");
  return sv * chol.solve(y);
}

GaussianPrior physically_informed_prior(const VectorXd& coeffs_lowfi, const MatrixXd& scale) {
  if (scale.rows() != coeffs_lowfi.size() || scale.cols() != coeffs_lowfi.size()) {
    throw std::invalid_argument("prior scale does not match coefficient dimension");
  }
  return {coeffs_lowfi, scale};
}

VectorXd least_squares(const DesignMatrix& V, const VectorXd& y) {
  if (y.size() != V.rows()) throw std::invalid_argument("output length does not match design matrix rows");
  return V.values.colPivHouseholderQr().solve(y);
}

}  // namespace bpc
