#pragma once

#include "bpc/basis.hpp"
#include "bpc/hier_sampler.hpp"
#include "bpc/linear_bayes.hpp"

#include <memory>
#include <vector>

namespace bpc {

/// Intrinsic coregionalization over a shared polynomial basis:
///
///   cov(y_i(x), y_j(x')) = v(x)^T sqrt(S_i S_j) v(x') B_ij + sigma^2 delta_ij
///
/// with S_i = diag(a_i^2) (a_i = column i of A), so sqrt(S_i S_j) =
/// diag(|a_i| |a_j|), and B = W W^T + diag(kappa) with W of rank one.
struct CoregionalModel {
  std::shared_ptr<const PolynomialBasis> basis;
  MatrixXd A;      // N x O
  VectorXd W;      // O
  VectorXd kappa;  // O, positive
  double noise_variance = 1e-6;

  Eigen::Index n_outputs() const { return A.cols(); }
  Eigen::Index n_coefficients() const { return A.rows(); }
  MatrixXd B() const;

  void validate() const;
};

/// Per-output training (or test) sets; sizes may differ across outputs.
struct StackedDataset {
  std::vector<MatrixXd> X;
  std::vector<VectorXd> y;

  std::size_t n_outputs() const { return X.size(); }
  Eigen::Index total_rows() const;
  VectorXd stacked_y() const;
  void validate(std::size_t dim) const;
};

/// Block (i, j) of the covariance; adds sigma^2 I when `training_block` and
/// i == j (Xi and Xj must then be the same set).
MatrixXd cross_covariance(const CoregionalModel& model, Eigen::Index i, Eigen::Index j, const MatrixXd& Xi,
                          const MatrixXd& Xj, bool training_block = false);

/// Full noise-free K(X, X) over all outputs, stacked in output order.
MatrixXd block_covariance(const CoregionalModel& model, const StackedDataset& data);

/// Parameter packing used by the log density and the sampler:
/// [vec(A) column-major (N*O), W (O), kappa (O)].
VectorXd pack_coregional(const CoregionalModel& model);
CoregionalModel unpack_coregional(const VectorXd& theta, const std::shared_ptr<const PolynomialBasis>& basis,
                                  Eigen::Index n_outputs, double noise_variance);

struct CoregionalLogDensity {
  double value = 0.0;           // log likelihood + log priors
  double log_likelihood = 0.0;  // log N(y | 0, K + sigma^2 I)
  VectorXd gradient;            // packed as pack_coregional
};

/// Marginal likelihood of the stacked outputs plus hyperpriors
/// a_ij ~ N(0,1), W ~ N(0, I), kappa ~ HalfNormal(1), with analytic gradient
/// from tr((beta beta^T - K^-1) dK) / 2.
CoregionalLogDensity coregional_logdensity(const CoregionalModel& params, const StackedDataset& data);

/// Sampling model: the same density restricted to A > 0 and W_0 > 0 through
/// log transforms. K depends on |A| and on W only through W W^T, so this is
/// the identical posterior over K with the sign symmetries removed.
LogDensityModel coregional_sampling_model(std::shared_ptr<const PolynomialBasis> basis, const StackedDataset& data,
                                          double noise_variance);

struct CoregionalPrediction {
  std::vector<PredictiveDistribution> outputs;
  /// Mixture mean of the GP-form posterior coefficients, per output (N x O).
  MatrixXd coefficient_mean;
};

/// Gaussian conditional for one hyperparameter draw, per output.
CoregionalPrediction predict_conditional(const CoregionalModel& model, const StackedDataset& train,
                                         const std::vector<MatrixXd>& x_star);

/// Moments of an equally weighted Gaussian mixture: mean of means, and mean of
/// covariances plus covariance of means.
PredictiveDistribution mixture_moments(const std::vector<PredictiveDistribution>& components);

inline constexpr std::size_t kMinMixtureDraws = 100;

/// Mixture prediction over hyperparameter draws (at least kMinMixtureDraws).
CoregionalPrediction predict(const std::vector<CoregionalModel>& draws, const StackedDataset& train,
                             const std::vector<MatrixXd>& x_star);

struct CoregionalFit {
  SampleBatch batch;
  std::vector<CoregionalModel> draws;  // pooled, in chain order
  MatrixXd B_mean;
  MatrixXd B_sd;

  /// Evenly thinned subset of at most `count` draws taken from the last
  /// `window` draws of every chain.
  std::vector<CoregionalModel> mixture_draws(std::size_t count = kMinMixtureDraws, std::size_t window = 500) const;
};

CoregionalFit fit_coregional(std::shared_ptr<const PolynomialBasis> basis, const StackedDataset& data,
                             double noise_variance, const ChainConfig& chain_cfg);

/// Independent single-output baseline: one conjugate model per output with
/// prior N(0, prior_variance I).
std::vector<PredictiveDistribution> predict_independent(const PolynomialBasis& basis, const StackedDataset& train,
                                                        const std::vector<MatrixXd>& x_star, double prior_variance,
                                                        double noise_variance);

}  // namespace bpc
