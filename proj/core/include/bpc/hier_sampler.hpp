#pragma once

#include "bpc/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bpc {

/// Constraint transform applied to one parameter. The sampler works on the
/// unconstrained value z; the model sees theta.
enum class Transform {
  Identity,  // theta = z
  Log,       // theta = exp(z) > 0, log-Jacobian z
};

/// Unnormalized log density over constrained parameters, with gradient.
struct LogDensityModel {
  using ValueAndGradient = std::function<double(const VectorXd& theta, VectorXd& grad)>;

  Eigen::Index dim = 0;
  ValueAndGradient value_and_gradient;
  /// One per parameter; empty means all Identity.
  std::vector<Transform> transforms;
  std::vector<std::string> names;

  double logp(const VectorXd& theta) const;
  VectorXd grad(const VectorXd& theta) const;

  Transform transform(Eigen::Index i) const;
  VectorXd to_constrained(const VectorXd& z) const;
  VectorXd to_unconstrained(const VectorXd& theta) const;

  /// log p(theta(z)) + log|d theta / dz| and its gradient in z.
  double unconstrained_value_and_gradient(const VectorXd& z, VectorXd& grad_z) const;

  std::string name(Eigen::Index i) const;
};

struct ChainConfig {
  int n_chains = 4;
  int warmup = 1000;
  int draws = 1000;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  int max_leapfrog = 256;
  /// Mean trajectory length in (metric-scaled) time; each iteration draws the
  /// length uniformly from [0.5, 1.5] times this value.
  double integration_time = 2.0;
  bool adapt_mass_matrix = true;
  /// Standard deviation of the unconstrained initial values around zero.
  double init_scale = 0.1;
  bool parallel_chains = true;

  void validate() const;
};

struct ParameterDiagnostics {
  /// max(classic split R-hat, rank-normalized split R-hat, folded rank R-hat).
  double r_hat = 0.0;
  /// Bulk effective sample size on rank-normalized split chains.
  double ess = 0.0;
  /// Set when R-hat is undefined (zero within-chain variance).
  bool degenerate = false;
};

struct SampleBatch {
  std::vector<std::string> names;
  /// One matrix per chain, draws x dim, constrained space.
  std::vector<MatrixXd> chains;
  std::vector<double> accept_rate;
  std::vector<std::size_t> divergences;
  std::vector<double> step_size;
  std::vector<ParameterDiagnostics> diagnostics;
  double divergence_rate = 0.0;
  /// True when more than 10% of post-warmup transitions diverged.
  bool divergence_flag = false;

  Eigen::Index dim() const { return chains.empty() ? 0 : chains.front().cols(); }
  Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().rows(); }
  std::size_t n_chains() const { return chains.size(); }

  /// All chains stacked, (n_chains * draws) x dim.
  MatrixXd pooled() const;
  VectorXd mean() const;
  double max_r_hat() const;
  double min_ess() const;
};

inline constexpr double kDivergenceFlagRate = 0.10;

/// Multi-chain HMC with dual-averaging step size and windowed diagonal mass
/// matrix adaptation. Deterministic given (model, cfg).
SampleBatch sample(const LogDensityModel& model, const ChainConfig& cfg);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  Eigen::Index worst_parameter = -1;
  int points = 0;
};

/// Analytic vs finite-difference (Ridders-extrapolated) gradient of the
/// unconstrained log density at `n_points` random points z ~ N(0, scale^2).
GradientCheckReport gradient_check(const LogDensityModel& model, int n_points, std::uint64_t seed = 1,
                                   double scale = 1.0);

/// Split R-hat and bulk ESS per parameter. Requires at least two chains.
std::vector<ParameterDiagnostics> diagnostics(const SampleBatch& batch);
std::vector<ParameterDiagnostics> diagnostics(const std::vector<MatrixXd>& chains);

}  // namespace bpc
