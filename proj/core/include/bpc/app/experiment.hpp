#pragma once

#include "bpc/app/dataset.hpp"
#include "bpc/app/report.hpp"
#include "bpc/basis.hpp"
#include "bpc/coregional.hpp"
#include "bpc/hier_sampler.hpp"
#include "bpc/linear_bayes.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bpc::app {

enum class PriorType { ZeroGaussian, InformedGaussian, Horseshoe, HierarchicalGaussian };

std::string to_string(PriorType t);

struct PriorSpec {
  PriorType type = PriorType::ZeroGaussian;
  /// Isotropic prior variance for the Gaussian priors.
  double variance = 1.0;
  /// Informed prior mean: a coefficient file, or a least-squares fit to a
  /// lower-fidelity dataset (file or synthetic generator name).
  std::string coefficients_path;
  std::string lowfi_path;
  std::string lowfi_synthetic;
  double nu = 25.0;
  double s = 3.0;
  double beta = 0.1;

  bool sampled() const { return type == PriorType::Horseshoe || type == PriorType::HierarchicalGaussian; }
};

struct ConditioningSpec {
  bool enabled = false;
  /// Condition on the mean of the training outputs rather than `value`.
  bool use_data_mean = true;
  double value = 0.0;
  double value_variance = 0.0;
};

struct ArmSpec {
  std::string name;
  PriorSpec prior;
  ConditioningSpec conditioning;
};

struct McmcSpec {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  int max_leapfrog = 256;
};

struct SplitSpec {
  bool enabled = false;
  std::optional<double> fraction;
  std::optional<std::size_t> n_train;
  /// Sweep over training-set sizes; overrides fraction / n_train when set.
  std::vector<std::size_t> train_sizes;
  std::size_t n_trials = 1;
  std::uint64_t seed = 0;
};

struct DataSpec {
  std::vector<std::string> paths;
  std::string synthetic;
  std::uint64_t seed = 7;
  /// Per-output sizes for the synthetic coregional pair.
  std::size_t n_train = 105;
  std::size_t n_test = 100;
};

struct MomentSpec {
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  double credible_mass = 0.9;
};

struct CoregionalSpec {
  std::size_t mixture_draws = kMinMixtureDraws;
  std::size_t window = 500;
  double independent_prior_variance = 1e-3;
  std::vector<double> independent_noise_variances{1e-3, 1e-6};
};

struct ExperimentConfig {
  DataSpec data;
  std::vector<Bounds> bounds;
  PolynomialFamily family = PolynomialFamily::LegendreOrthonormal;
  IndexScheme scheme = IndexScheme::TotalOrder;
  int max_degree = 2;
  double noise_variance = 1.0;
  std::vector<ArmSpec> arms;
  McmcSpec mcmc;
  SplitSpec split;
  MomentSpec moments;
  /// 0-based input dimensions for Sobol indices (1-based in the JSON file).
  std::vector<std::size_t> sobol_dimensions;
  std::string predict_inputs;
  std::size_t oracle_samples = 100000;
  CoregionalSpec coregional;
  /// Relative paths resolve against this directory.
  std::filesystem::path base_dir;

  /// Parses and validates; throws ConfigError with the offending key.
  static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig from_file(const std::filesystem::path& path);

  /// Canonical JSON echo (sorted keys, compact).
  std::string to_json() const;

  /// Sets every seed (split, sampler, moments, synthetic data) to `seed`.
  void override_seed(std::uint64_t seed);

  void validate() const;
  std::filesystem::path resolve(const std::string& p) const;
};

/// Datasets named by the config (files ingested with the configured bounds, or
/// the synthetic generator).
std::vector<Dataset> load_datasets(const ExperimentConfig& cfg);

PolynomialBasis make_basis(const ExperimentConfig& cfg, std::size_t dim);

ChainConfig chain_config(const McmcSpec& spec, std::uint64_t seed);

/// Deterministic per-trial seed derived from a base seed and two counters.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// A fitted arm: a Gaussian (exact or moment-matched) posterior and, for the
/// sampled priors, the coefficient draws and sampler output.
struct ArmFit {
  CoefficientPosterior posterior;
  std::optional<MatrixXd> draws;
  std::optional<SampleBatch> batch;
  std::optional<double> conditioning_value;
};

ArmFit fit_arm(const ArmSpec& arm, const ExperimentConfig& cfg, const PolynomialBasis& basis, const Dataset& train,
               std::uint64_t sampler_seed);

/// Posterior summaries of a fitted arm; Sobol entries for the configured dimensions.
ArmResult summarize_arm(const ArmSpec& arm, const ArmFit& fit, const ExperimentConfig& cfg,
                        const PolynomialBasis& basis, bool with_sobol);

struct ExperimentOutput {
  FitReport report;
  std::vector<PredictionTable> tables;
};

/// split -> prior -> fit -> optional conditioning -> moments -> metrics, for
/// every arm and trial (and training size in a sweep). Errors are rethrown
/// with the trial index prefixed.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const Dataset& data);

/// Fits every arm on the full dataset (no split): summaries, moments and,
/// with `with_sobol`, Sobol indices. Predictions at `predict_inputs` when set.
ExperimentOutput run_full_fit(const ExperimentConfig& cfg, const Dataset& data, const std::string& command,
                              bool with_sobol);

/// Coregional vs independent models over n_trials seeds.
ExperimentOutput run_coregional(const ExperimentConfig& cfg);

/// Monte Carlo oracle of the first arm's posterior-mean surrogate, next to
/// its closed-form spatial mean and variance.
ExperimentOutput run_oracle(const ExperimentConfig& cfg, const Dataset& data);

/// Writes report.json and the prediction tables into `dir` (created if needed).
void write_outputs(const std::filesystem::path& dir, const ExperimentOutput& out);

}  // namespace bpc::app
