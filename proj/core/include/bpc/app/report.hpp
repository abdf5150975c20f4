#pragma once

#include "bpc/app/metrics.hpp"
#include "bpc/basis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bpc::app {

struct CoefficientSummary {
  std::vector<MultiIndex> indices;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> lower;
  std::vector<double> upper;
  double mass = 0.9;

  bool operator==(const CoefficientSummary&) const = default;
};

struct MomentSummary {
  std::string name;
  std::string kind;  // "gaussian" or "samples"
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> analytic_mean;
  std::size_t samples = 0;

  bool operator==(const MomentSummary&) const = default;
};

struct SamplerSummary {
  double max_r_hat = 0.0;
  double min_ess = 0.0;
  double divergence_rate = 0.0;
  bool divergence_flag = false;
  std::size_t degenerate_parameters = 0;
  std::vector<double> step_size;
  std::vector<double> accept_rate;
  bool converged = true;

  bool operator==(const SamplerSummary&) const = default;
};

/// Result of one arm (prior + conditioning choice) on one fit.
struct ArmResult {
  std::string name;
  std::string prior;
  bool conditioned = false;
  std::optional<double> conditioning_value;
  CoefficientSummary coefficients;
  std::vector<MomentSummary> moments;
  std::optional<SamplerSummary> sampler;

  bool operator==(const ArmResult&) const = default;
};

struct RmseEntry {
  std::string arm;
  std::size_t output = 0;
  NormalizedRmse value;

  bool operator==(const RmseEntry&) const = default;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t n_train = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t sampler_seed = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<RmseEntry> rmse;
  /// Worst R-hat of any sampled arm in this trial (absent when nothing was sampled).
  std::optional<double> max_r_hat;

  bool operator==(const TrialRecord&) const = default;
};

/// Median normalized RMSE per arm at one training-set size.
struct SweepRow {
  std::size_t n_train = 0;
  std::vector<std::string> arms;
  std::vector<double> median_printed;
  std::vector<double> median_conventional;

  bool operator==(const SweepRow&) const = default;
};

struct CoregionalTrialSummary {
  std::size_t trial = 0;
  std::vector<std::vector<double>> B_mean;
  std::vector<std::vector<double>> B_sd;
  double correlation = 0.0;  // B_12 / sqrt(B_11 B_22) of the posterior mean
  SamplerSummary sampler;

  bool operator==(const CoregionalTrialSummary&) const = default;
};

struct OracleSummary {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  std::size_t samples = 0;
  double closed_form_mean = 0.0;
  double closed_form_variance = 0.0;

  bool operator==(const OracleSummary&) const = default;
};

struct FitReport {
  std::string command;
  std::string config;  // canonical JSON echo
  std::vector<std::string> arm_names;
  std::vector<ArmResult> arms;
  std::vector<TrialRecord> trials;
  std::vector<SweepRow> sweep;
  std::vector<CoregionalTrialSummary> coregional;
  std::optional<OracleSummary> oracle;

  bool operator==(const FitReport&) const = default;

  /// True when every sampled fit had R-hat <= 1.1 on all parameters.
  bool converged() const;
  /// Median RMSE over all trial entries of one arm (all outputs pooled).
  double median_rmse(const std::string& arm, bool printed = true) const;
};

/// Plot-ready companion table.
struct PredictionTable {
  std::string name;
  std::vector<std::string> input_names;
  MatrixXd inputs;
  std::optional<VectorXd> truth;
  VectorXd mean;
  VectorXd sd;
};

std::string to_json_text(const FitReport& report);
FitReport from_json_text(const std::string& text);

void write_report(const std::filesystem::path& path, const FitReport& report);
FitReport read_report(const std::filesystem::path& path);

void write_prediction_table(const std::filesystem::path& path, const PredictionTable& table);

}  // namespace bpc::app
