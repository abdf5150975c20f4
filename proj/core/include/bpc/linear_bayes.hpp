#pragma once

#include "bpc/basis.hpp"

#include <Eigen/Dense>

namespace bpc {

/// p(alpha) = N(mean, covariance).
struct GaussianPrior {
  VectorXd mean;
  MatrixXd covariance;

  static GaussianPrior isotropic(Eigen::Index n, double variance, double mean = 0.0);
  /// Vanishing prior precision (covariance `scale` * I); reproduces least
  /// squares when M > N.
  static GaussianPrior diffuse(Eigen::Index n, double scale = 1e6);

  Eigen::Index size() const { return mean.size(); }
};

/// Observation noise y = f(x) + eps, eps ~ N(0, variance).
struct NoiseSpec {
  double variance = 1.0;

  explicit NoiseSpec(double v);
};

struct CoefficientPosterior {
  VectorXd mean;
  MatrixXd covariance;

  Eigen::Index size() const { return mean.size(); }
};

struct PredictiveDistribution {
  VectorXd mean;
  MatrixXd covariance;

  Eigen::Index size() const { return mean.size(); }
  VectorXd sd() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Gaussian posterior over coefficients for y ~ N(V alpha, sigma^2 I):
///
///   Sigma_a = (sigma^-2 V^T V + Sigma_t^-1)^-1
///   mu_a    = Sigma_a (sigma^-2 V^T y + Sigma_t^-1 mu_t)
///
/// Evaluated in the prior-whitened basis V L_t (L_t L_t^T = Sigma_t), so no
/// inverse of the prior covariance is ever formed.
CoefficientPosterior conjugate_posterior(const DesignMatrix& V, const VectorXd& y, const GaussianPrior& prior,
                                         const NoiseSpec& noise);

/// Mean V(X*) mu_a and covariance V(X*) Sigma_a V(X*)^T.
PredictiveDistribution predictive(const CoefficientPosterior& posterior, const DesignMatrix& v_star);
PredictiveDistribution predictive(const CoefficientPosterior& posterior, const PolynomialBasis& basis,
                                  const MatrixXd& x_star);
PredictiveDistribution predictive(const CoefficientPosterior& posterior, const InputSpace& space,
                                  const MultiIndexSet& idx, const MatrixXd& x_star);

/// GP-form coefficients Sigma V^T (V Sigma V^T + sigma^2 I)^-1 y.
VectorXd kernel_posterior_coefficients(const MatrixXd& sigma, const DesignMatrix& V, const VectorXd& y,
                                       const NoiseSpec& noise);

/// Prior centred on coefficients of a related, well-sampled quantity.
GaussianPrior physically_informed_prior(const VectorXd& coeffs_lowfi, const MatrixXd& scale);

/// Ordinary least squares (column-pivoted QR); minimum-norm is not attempted.
VectorXd least_squares(const DesignMatrix& V, const VectorXd& y);

}  // namespace bpc
