#pragma once

#include "bpc/basis.hpp"
#include "bpc/linalg.hpp"
#include "bpc/linear_bayes.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bpc {

enum class MomentKind { GaussianClosedForm, SampleCloud };

/// Distribution of a moment of the surrogate over the coefficient posterior.
/// For a sample cloud, `mean`/`variance` are the sample statistics and
/// `analytic_mean` carries the closed-form expectation when one exists.
struct MomentDistribution {
  MomentKind kind = MomentKind::GaussianClosedForm;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> samples;
  std::optional<double> analytic_mean;
};

inline constexpr std::size_t kMinMomentSamples = 1000;

/// Order statistics of a sample cloud.
struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lower = 0.0;  // credible-interval bounds
  double upper = 0.0;
};

/// Summary with a central credible interval of mass `mass`.
SampleSummary summarize(std::vector<double> samples, double mass = 0.9);

/// Linear-interpolated quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Spatial mean E_x[g] ~ N([mu]_1, [Sigma]_11). Requires the constant term at
/// position 0 of an orthonormal basis.
MomentDistribution output_mean_distribution(const CoefficientPosterior& post);

/// Var_x[g] = sum_{i>=2} alpha_i^2 over S posterior draws.
MomentDistribution output_variance_distribution(const CoefficientPosterior& post, std::size_t samples,
                                                std::uint64_t seed);

/// alpha^T E alpha with alpha ~ N(base.mean, base.covariance).
struct QuadraticForm {
  MatrixXd E;
  CoefficientPosterior base;
};

/// Draws via the weighted non-central chi-squared representation: with
/// Sigma = L L^T and L^T E L = Q diag(lambda) Q^T,
///   alpha^T E alpha = sum_k lambda_k w_k^2 + 2 b^T w + mu^T E mu,
/// where w ~ N(0, I) and b = Q^T L^T E mu.
std::vector<double> quadratic_form_samples(const QuadraticForm& qf, std::size_t samples, std::uint64_t seed);

/// Draws alpha ~ N(mu, Sigma) directly and evaluates alpha^T E alpha.
std::vector<double> quadratic_form_samples_direct(const QuadraticForm& qf, std::size_t samples, std::uint64_t seed);

struct QuadraticFormMoments {
  double mean;
  double variance;
};

/// mean = tr(E Sigma) + mu^T E mu; var = 2 tr((E Sigma)^2) + 4 mu^T E Sigma E mu.
QuadraticFormMoments quadratic_form_moments(const QuadraticForm& qf);

/// Tuples whose component along `dimension` (0-based) equals `degree`.
MultiIndexSet subselect(const MultiIndexSet& idx, int degree, std::size_t dimension);

/// Union of subselect(p, dimension) over p >= 1 with every other component zero.
MultiIndexSet first_order_set(const MultiIndexSet& idx, std::size_t dimension);

/// Every index with a non-zero component along `dimension`.
MultiIndexSet total_effect_set(const MultiIndexSet& idx, std::size_t dimension);

/// Draws of (sum_{i in subsel} alpha_i^2) / (sum_{i>=2} alpha_i^2) with one
/// coefficient draw shared by numerator and denominator. The constant term is
/// never counted in the numerator.
std::vector<double> sobol_ratio_samples(const CoefficientPosterior& post, const MultiIndexSet& idx,
                                        const MultiIndexSet& subsel, std::size_t samples, std::uint64_t seed);

/// Variance cloud from coefficient draws (rows), e.g. sampler output.
MomentDistribution output_variance_from_draws(const MatrixXd& coefficient_draws);

/// Sobol ratio per coefficient draw (rows).
std::vector<double> sobol_ratio_from_draws(const MatrixXd& coefficient_draws, const MultiIndexSet& idx,
                                           const MultiIndexSet& subsel);

/// Sobol ratio for a fixed coefficient vector.
double sobol_ratio(const VectorXd& alpha, const MultiIndexSet& idx, const MultiIndexSet& subsel);

}  // namespace bpc
