#pragma once

#include "bpc/basis.hpp"
#include "bpc/hier_sampler.hpp"
#include "bpc/linear_bayes.hpp"

#include <cstddef>

namespace bpc {

/// Regularized horseshoe hyperparameters.
///
///   lambda~_i, tau~ ~ HalfCauchy(1)
///   c^2            ~ InverseGamma(nu/2, nu s^2 / 2)
///   tau            = tau0 * tau~,   tau0 = beta sigma / ((1 - beta) sqrt(M))
///   lambda_i       = c lambda~_i / sqrt(c^2 + tau^2 lambda~_i^2)
///   alpha_i        ~ N(0, (tau lambda_i)^2)
struct HorseshoeConfig {
  double nu = 25.0;
  double s = 3.0;
  double beta = 0.1;
  double noise_variance = 1.0;
  std::size_t M = 1;

  void validate() const;
};

/// Global scale tau0 = beta sqrt(sigma^2) / ((1 - beta) sqrt(M)).
double tau(const HorseshoeConfig& cfg);

struct HorseshoeState {
  VectorXd lambda_tilde;
  double tau_tilde = 1.0;
  double c2 = 1.0;
  VectorXd alpha;

  Eigen::Index size() const { return alpha.size(); }

  /// Packed as [alpha (N), lambda~ (N), tau~, c^2].
  VectorXd pack() const;
  static HorseshoeState unpack(const VectorXd& theta);
};

/// Regularized local scales lambda_i for a state (bounded above by c / tau).
VectorXd regularized_local_scales(const HorseshoeState& state, const HorseshoeConfig& cfg);

struct LogDensityValue {
  double value = 0.0;
  VectorXd gradient;  // same packing as HorseshoeState::pack
};

/// Joint log posterior (hyperpriors + coefficient prior + Gaussian likelihood)
/// of the centred hierarchy, with its analytic gradient.
LogDensityValue horseshoe_logdensity(const HorseshoeState& state, const HorseshoeConfig& cfg, const DesignMatrix& V,
                                     const VectorXd& y);

/// Centred model over the packed state (positive parameters log-transformed).
LogDensityModel horseshoe_model(const HorseshoeConfig& cfg, const DesignMatrix& V, const VectorXd& y);

/// Non-centred model alpha_i = tau lambda_i z_i, packed as
/// [z (N), lambda~ (N), tau~, c^2]. This is what fit_sparse samples.
LogDensityModel horseshoe_noncentered_model(const HorseshoeConfig& cfg, const DesignMatrix& V, const VectorXd& y);

/// Coefficients implied by a packed non-centred draw.
VectorXd noncentered_coefficients(const VectorXd& theta, const HorseshoeConfig& cfg);

/// Isotropic hierarchical Gaussian alpha ~ N(0, s I), s ~ HalfNormal(1),
/// non-centred and packed as [z (N), s].
LogDensityModel hierarchical_gaussian_model(const DesignMatrix& V, const VectorXd& y, double noise_variance);

enum class SparsePriorKind { RegularizedHorseshoe, HierarchicalGaussian };

struct SparseFit {
  SparsePriorKind kind = SparsePriorKind::RegularizedHorseshoe;
  SampleBatch batch;           // raw hierarchy draws
  MatrixXd coefficient_draws;  // pooled draws of alpha, S x N
  VectorXd mean;
  VectorXd lower;  // 5% quantile
  VectorXd upper;  // 95% quantile
  /// Posterior-mean shrinkage factor 1 / (1 + M sigma^-2 tau^2 lambda_i^2)
  /// (horseshoe only; empty otherwise).
  VectorXd shrinkage;
  HorseshoeConfig config;
  double tau0 = 0.0;

  /// Gaussian moment match (sample mean and covariance of alpha).
  CoefficientPosterior moment_matched() const;
};

SparseFit fit_sparse(const DesignMatrix& V, const VectorXd& y, const HorseshoeConfig& cfg,
                     const ChainConfig& chain_cfg);

SparseFit fit_hierarchical_gaussian(const DesignMatrix& V, const VectorXd& y, double noise_variance,
                                    const ChainConfig& chain_cfg);

}  // namespace bpc
