// bpc: command line front end for the experiment pipelines.
//
//   bpc <command> --config <file.json> --out <dir> [--seed N]
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure,
// 5 sampler non-convergence (R-hat > 1.1 on some parameter).

#include "bpc/app/dataset.hpp"
#include "bpc/app/experiment.hpp"
#include "bpc/errors.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4, kNotConverged = 5 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

// Adds a data-mean conditioned copy of every arm that is not conditioned yet.
void add_conditioned_arms(bpc::app::ExperimentConfig& cfg) {
  std::vector<bpc::app::ArmSpec> extra;
  for (const auto& a : cfg.arms) {
    if (a.conditioning.enabled) continue;
    auto c = a;
    c.conditioning.enabled = true;
    c.name = a.name + "+mean_conditioning";
    extra.push_back(std::move(c));
  }
  cfg.arms.insert(cfg.arms.end(), extra.begin(), extra.end());
}

void print_summary(const bpc::app::ExperimentOutput& out, const std::string& dir) {
  const auto& r = out.report;
  for (const auto& row : r.sweep) {
    for (std::size_t k = 0; k < row.arms.size(); ++k) {
      std::cout << "n_train=" << row.n_train << "  " << row.arms[k] << "  median RMSE (printed) "
                << row.median_printed[k] << "  (conventional) " << row.median_conventional[k] << '\n';
    }
  }
  for (const auto& c : r.coregional) {
    std::cout << "trial " << c.trial << "  B12/sqrt(B11 B22) = " << c.correlation << "  max R-hat "
              << c.sampler.max_r_hat << '\n';
  }
  if (r.oracle) {
    std::cout << "oracle mean " << r.oracle->mean << " +- " << r.oracle->mean_se << " (closed form "
              << r.oracle->closed_form_mean << ")\n"
              << "oracle variance " << r.oracle->variance << " +- " << r.oracle->variance_se << " (closed form "
              << r.oracle->closed_form_variance << ")\n";
  }
  for (const auto& a : r.arms) {
    for (const auto& m : a.moments) {
      std::cout << a.name << "  " << m.name << "  mean " << m.mean << "  sd " << m.sd << "  interval [" << m.lower
                << ", " << m.upper << "]\n";
    }
  }
  std::cout << "wrote " << dir << "/report.json\n";
}

int run(const std::string& command, const Options& opt) {
  using namespace bpc::app;
  auto cfg = ExperimentConfig::from_file(opt.config);
  if (opt.seed) cfg.override_seed(*opt.seed);

  ExperimentOutput out;
  if (command == "coregional") {
    out = run_coregional(cfg);
  } else {
    const auto datasets = load_datasets(cfg);
    if (datasets.size() != 1) throw bpc::ConfigError(command + ": expects exactly one dataset");
    const Dataset& data = datasets.front();
    if (command == "fit") {
      out = cfg.split.enabled ? run_experiment(cfg, data) : run_full_fit(cfg, data, "fit", false);
    } else if (command == "predict") {
      if (cfg.predict_inputs.empty()) throw bpc::ConfigError("predict: config needs predict.inputs");
      out = run_full_fit(cfg, data, "predict", false);
    } else if (command == "moments") {
      out = run_full_fit(cfg, data, "moments", false);
    } else if (command == "sobol") {
      out = run_full_fit(cfg, data, "sobol", true);
    } else if (command == "condition-mean") {
      add_conditioned_arms(cfg);
      out = cfg.split.enabled ? run_experiment(cfg, data) : run_full_fit(cfg, data, "condition-mean", false);
      out.report.command = "condition-mean";
    } else if (command == "oracle") {
      out = run_oracle(cfg, data);
    }
  }
  write_outputs(opt.out, out);
  print_summary(out, opt.out);
  if (!out.report.converged()) {
    std::cerr << "error: sampler did not converge (R-hat > 1.1 on at least one parameter)\n";
    return kNotConverged;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian polynomial chaos experiments"};
  app.require_subcommand(1);
  Options opt;
  const char* commands[][2] = {
      {"fit", "Fit every configured prior arm; with a split section, run the trial protocol"},
      {"predict", "Fit on the full dataset and predict at predict.inputs"},
      {"moments", "Posterior distributions of the spatial mean and variance"},
      {"sobol", "Posterior distributions of first-order and total Sobol indices"},
      {"condition-mean", "Compare each arm with its spatial-mean conditioned counterpart"},
      {"coregional", "Coregional model against independent per-output models"},
      {"oracle", "Monte Carlo check of the closed-form spatial moments"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", opt.seed, "Override every seed in the configuration");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return run(command, opt);
  } catch (const bpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const bpc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const bpc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const bpc::ConvergenceError& e) {
    std::cerr << "sampler did not converge: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}
