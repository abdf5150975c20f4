#include "bpc/app/experiment.hpp"

#include "bpc/app/metrics.hpp"
#include "bpc/app/synthetic.hpp"
#include "bpc/conditioning.hpp"
#include "bpc/errors.hpp"
#include "bpc/moments.hpp"
#include "bpc/sparse_prior.hpp"

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace bpc::app {

using nlohmann::json;

std::string to_string(PriorType t) {
  switch (t) {
    case PriorType::ZeroGaussian: return "zero_gaussian";
    case PriorType::InformedGaussian: return "informed_gaussian";
    case PriorType::Horseshoe: return "horseshoe";
    case PriorType::HierarchicalGaussian: return "hierarchical_gaussian";
  }
  return "unknown";
}

namespace {

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

PriorType prior_type_from(const std::string& s, const std::string& where) {
  if (s == "zero_gaussian") return PriorType::ZeroGaussian;
  if (s == "informed_gaussian") return PriorType::InformedGaussian;
  if (s == "horseshoe") return PriorType::Horseshoe;
  if (s == "hierarchical_gaussian") return PriorType::HierarchicalGaussian;
  throw ConfigError(where + ".type: unknown prior '" + s + "'");
}

PriorSpec parse_prior(const json& j, const std::string& where) {
  check_keys(j, {"type", "variance", "coefficients", "lowfi_path", "lowfi_synthetic", "nu", "s", "beta"}, where);
  PriorSpec p;
  p.type = prior_type_from(get_or<std::string>(j, "type", "zero_gaussian", where), where);
  p.variance = get_or(j, "variance", p.variance, where);
  p.coefficients_path = get_or<std::string>(j, "coefficients", "", where);
  p.lowfi_path = get_or<std::string>(j, "lowfi_path", "", where);
  p.lowfi_synthetic = get_or<std::string>(j, "lowfi_synthetic", "", where);
  p.nu = get_or(j, "nu", p.nu, where);
  p.s = get_or(j, "s", p.s, where);
  p.beta = get_or(j, "beta", p.beta, where);
  return p;
}

ConditioningSpec parse_conditioning(const json& j, const std::string& where) {
  check_keys(j, {"enabled", "functional", "value", "value_variance"}, where);
  ConditioningSpec c;
  c.enabled = get_or(j, "enabled", true, where);
  const auto functional = get_or<std::string>(j, "functional", "spatial_mean", where);
  if (functional != "spatial_mean") throw ConfigError(where + ".functional: only 'spatial_mean' is supported");
  if (j.contains("value")) {
    const json& v = j.at("value");
    if (v.is_string()) {
      if (v.get<std::string>() != "data_mean") throw ConfigError(where + ".value: expected 'data_mean' or a number");
      c.use_data_mean = true;
    } else if (v.is_number()) {
      c.use_data_mean = false;
      c.value = v.get<double>();
    } else {
      throw ConfigError(where + ".value: expected 'data_mean' or a number");
    }
  }
  c.value_variance = get_or(j, "value_variance", 0.0, where);
  return c;
}

json prior_json(const PriorSpec& p) {
  return {{"type", to_string(p.type)}, {"variance", p.variance}, {"coefficients", p.coefficients_path},
          {"lowfi_path", p.lowfi_path}, {"lowfi_synthetic", p.lowfi_synthetic}, {"nu", p.nu},
          {"s", p.s}, {"beta", p.beta}};
}

json conditioning_json(const ConditioningSpec& c) {
  return {{"enabled", c.enabled},
          {"functional", "spatial_mean"},
          {"value", c.use_data_mean ? json("data_mean") : json(c.value)},
          {"value_variance", c.value_variance}};
}

std::string default_arm_name(const ArmSpec& a) {
  return to_string(a.prior.type) + (a.conditioning.enabled ? "+mean_conditioning" : "");
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Re-raises the active exception with `prefix` prepended, keeping its class.
[[noreturn]] void rethrow_with(const std::string& prefix) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const CsvError& e) {
    throw DataError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"description", "data", "bounds", "basis", "noise_variance", "prior", "conditioning", "arms", "mcmc",
              "split", "moments", "sobol", "predict", "oracle", "coregional"},
             "config");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"path", "paths", "synthetic", "seed", "n_train", "n_test"}, "data");
    if (d.contains("path")) cfg.data.paths.push_back(get_or<std::string>(d, "path", "", "data"));
    for (const auto& p : get_or<std::vector<std::string>>(d, "paths", {}, "data")) cfg.data.paths.push_back(p);
    cfg.data.synthetic = get_or<std::string>(d, "synthetic", "", "data");
    cfg.data.seed = get_or(d, "seed", cfg.data.seed, "data");
    cfg.data.n_train = get_or(d, "n_train", cfg.data.n_train, "data");
    cfg.data.n_test = get_or(d, "n_test", cfg.data.n_test, "data");
  }

  if (j.contains("bounds")) {
    for (const auto& b : j.at("bounds")) {
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        throw ConfigError("bounds: each entry must be [lower, upper]");
      cfg.bounds.push_back({b[0].get<double>(), b[1].get<double>()});
    }
  }

  if (j.contains("basis")) {
    const json& b = j.at("basis");
    check_keys(b, {"family", "scheme", "max_degree"}, "basis");
    const auto family = get_or<std::string>(b, "family", "legendre", "basis");
    if (family == "legendre") {
      cfg.family = PolynomialFamily::LegendreOrthonormal;
    } else if (family == "hermite") {
      cfg.family = PolynomialFamily::HermiteOrthonormal;
    } else {
      throw ConfigError("basis.family: expected 'legendre' or 'hermite'");
    }
    try {
      cfg.scheme = index_scheme_from_string(get_or<std::string>(b, "scheme", "total_order", "basis"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("basis.scheme: ") + e.what());
    }
    cfg.max_degree = get_or(b, "max_degree", cfg.max_degree, "basis");
  }

  cfg.noise_variance = get_or(j, "noise_variance", cfg.noise_variance, "config");

  if (j.contains("arms")) {
    if (j.contains("prior") || j.contains("conditioning"))
      throw ConfigError("config: give either 'arms' or 'prior'/'conditioning', not both");
    std::size_t k = 0;
    for (const auto& a : j.at("arms")) {
      const std::string where = "arms[" + std::to_string(k++) + "]";
      check_keys(a, {"name", "prior", "conditioning"}, where);
      ArmSpec arm;
      if (a.contains("prior")) arm.prior = parse_prior(a.at("prior"), where + ".prior");
      if (a.contains("conditioning")) arm.conditioning = parse_conditioning(a.at("conditioning"), where + ".conditioning");
      arm.name = get_or<std::string>(a, "name", default_arm_name(arm), where);
      cfg.arms.push_back(std::move(arm));
    }
  } else {
    ArmSpec arm;
    if (j.contains("prior")) arm.prior = parse_prior(j.at("prior"), "prior");
    if (j.contains("conditioning")) arm.conditioning = parse_conditioning(j.at("conditioning"), "conditioning");
    arm.name = default_arm_name(arm);
    cfg.arms.push_back(std::move(arm));
  }

  if (j.contains("mcmc")) {
    const json& m = j.at("mcmc");
    check_keys(m, {"chains", "warmup", "draws", "seed", "target_accept", "max_leapfrog"}, "mcmc");
    cfg.mcmc.chains = get_or(m, "chains", cfg.mcmc.chains, "mcmc");
    cfg.mcmc.warmup = get_or(m, "warmup", cfg.mcmc.warmup, "mcmc");
    cfg.mcmc.draws = get_or(m, "draws", cfg.mcmc.draws, "mcmc");
    cfg.mcmc.seed = get_or(m, "seed", cfg.mcmc.seed, "mcmc");
    cfg.mcmc.target_accept = get_or(m, "target_accept", cfg.mcmc.target_accept, "mcmc");
    cfg.mcmc.max_leapfrog = get_or(m, "max_leapfrog", cfg.mcmc.max_leapfrog, "mcmc");
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, {"fraction", "n_train", "train_sizes", "n_trials", "seed"}, "split");
    cfg.split.enabled = true;
    if (s.contains("fraction")) cfg.split.fraction = get_or(s, "fraction", 0.5, "split");
    if (s.contains("n_train")) cfg.split.n_train = get_or<std::size_t>(s, "n_train", 1, "split");
    cfg.split.train_sizes = get_or<std::vector<std::size_t>>(s, "train_sizes", {}, "split");
    cfg.split.n_trials = get_or(s, "n_trials", cfg.split.n_trials, "split");
    cfg.split.seed = get_or(s, "seed", cfg.split.seed, "split");
  }

  if (j.contains("moments")) {
    const json& m = j.at("moments");
    check_keys(m, {"samples", "seed", "credible_mass"}, "moments");
    cfg.moments.samples = get_or(m, "samples", cfg.moments.samples, "moments");
    cfg.moments.seed = get_or(m, "seed", cfg.moments.seed, "moments");
    cfg.moments.credible_mass = get_or(m, "credible_mass", cfg.moments.credible_mass, "moments");
  }

  if (j.contains("sobol")) {
    const json& s = j.at("sobol");
    check_keys(s, {"dimensions"}, "sobol");
    for (auto d : get_or<std::vector<std::size_t>>(s, "dimensions", {}, "sobol")) {
      if (d < 1) throw ConfigError("sobol.dimensions: dimensions are numbered from 1");
      cfg.sobol_dimensions.push_back(d - 1);
    }
  }

  if (j.contains("predict")) {
    const json& p = j.at("predict");
    check_keys(p, {"inputs"}, "predict");
    cfg.predict_inputs = get_or<std::string>(p, "inputs", "", "predict");
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, {"samples"}, "oracle");
    cfg.oracle_samples = get_or(o, "samples", cfg.oracle_samples, "oracle");
  }

  if (j.contains("coregional")) {
    const json& c = j.at("coregional");
    check_keys(c, {"mixture_draws", "window", "independent_prior_variance", "independent_noise_variances"},
               "coregional");
    cfg.coregional.mixture_draws = get_or(c, "mixture_draws", cfg.coregional.mixture_draws, "coregional");
    cfg.coregional.window = get_or(c, "window", cfg.coregional.window, "coregional");
    cfg.coregional.independent_prior_variance =
        get_or(c, "independent_prior_variance", cfg.coregional.independent_prior_variance, "coregional");
    cfg.coregional.independent_noise_variances =
        get_or(c, "independent_noise_variances", cfg.coregional.independent_noise_variances, "coregional");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  data.seed = seed;
  mcmc.seed = seed;
  split.seed = seed;
  moments.seed = seed;
}

void ExperimentConfig::validate() const {
  auto need_file = [&](const std::string& p, const std::string& what) {
    if (!p.empty() && !std::filesystem::exists(resolve(p)))
      throw ConfigError(what + ": file '" + resolve(p).string() + "' does not exist");
  };
  if (data.paths.empty() && data.synthetic.empty()) throw ConfigError("data: give 'path', 'paths' or 'synthetic'");
  if (!data.paths.empty() && !data.synthetic.empty()) throw ConfigError("data: give files or a synthetic set, not both");
  for (const auto& p : data.paths) need_file(p, "data");
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (!(bounds[k].upper > bounds[k].lower)) throw ConfigError("bounds[" + std::to_string(k) + "]: lower >= upper");
  }
  if (max_degree < 0) throw ConfigError("basis.max_degree must be >= 0");
  if (!(noise_variance > 0.0)) throw ConfigError("noise_variance must be positive");
  if (arms.empty()) throw ConfigError("config: no prior arms");
  for (const auto& a : arms) {
    const std::string where = "arm '" + a.name + "'";
    if (!(a.prior.variance > 0.0)) throw ConfigError(where + ": prior variance must be positive");
    if (a.prior.type == PriorType::InformedGaussian) {
      const int sources = !a.prior.coefficients_path.empty() + !a.prior.lowfi_path.empty() +
                          !a.prior.lowfi_synthetic.empty();
      if (sources != 1)
        throw ConfigError(where + ": informed prior needs exactly one of coefficients, lowfi_path, lowfi_synthetic");
      need_file(a.prior.coefficients_path, where);
      need_file(a.prior.lowfi_path, where);
    }
    if (a.prior.type == PriorType::Horseshoe) {
      if (!(a.prior.nu > 0.0) || !(a.prior.s > 0.0)) throw ConfigError(where + ": horseshoe nu and s must be positive");
      if (!(a.prior.beta > 0.0 && a.prior.beta < 1.0)) throw ConfigError(where + ": horseshoe beta must lie in (0,1)");
    }
    if (a.conditioning.value_variance < 0.0) throw ConfigError(where + ": conditioning value_variance must be >= 0");
  }
  if (mcmc.chains < 2) throw ConfigError("mcmc.chains must be >= 2 for convergence diagnostics");
  if (mcmc.warmup < 100) throw ConfigError("mcmc.warmup must be >= 100");
  if (mcmc.draws < 4) throw ConfigError("mcmc.draws must be >= 4");
  if (!(mcmc.target_accept > 0.0 && mcmc.target_accept < 1.0)) throw ConfigError("mcmc.target_accept must lie in (0,1)");
  if (mcmc.max_leapfrog < 1) throw ConfigError("mcmc.max_leapfrog must be >= 1");
  if (split.fraction && !(*split.fraction > 0.0 && *split.fraction < 1.0))
    throw ConfigError("split.fraction must lie in (0,1)");
  if (split.fraction && split.n_train) throw ConfigError("split: give fraction or n_train, not both");
  if (split.n_trials < 1) throw ConfigError("split.n_trials must be >= 1");
  if (split.enabled && !split.fraction && !split.n_train && split.train_sizes.empty() && data.synthetic != "coregional_pair")
    throw ConfigError("split: give fraction, n_train or train_sizes");
  if (moments.samples < kMinMomentSamples)
    throw ConfigError("moments.samples must be >= " + std::to_string(kMinMomentSamples));
  if (!(moments.credible_mass > 0.0 && moments.credible_mass < 1.0))
    throw ConfigError("moments.credible_mass must lie in (0,1)");
  need_file(predict_inputs, "predict.inputs");
  if (oracle_samples < kMinOracleSamples)
    throw ConfigError("oracle.samples must be >= " + std::to_string(kMinOracleSamples));
  if (coregional.mixture_draws < kMinMixtureDraws)
    throw ConfigError("coregional.mixture_draws must be >= " + std::to_string(kMinMixtureDraws));
  if (!(coregional.independent_prior_variance > 0.0))
    throw ConfigError("coregional.independent_prior_variance must be positive");
  for (double v : coregional.independent_noise_variances) {
    if (!(v > 0.0)) throw ConfigError("coregional.independent_noise_variances must be positive");
  }
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["data"] = {{"seed", data.seed}, {"n_train", data.n_train}, {"n_test", data.n_test}};
  if (!data.paths.empty()) j["data"]["paths"] = data.paths;
  if (!data.synthetic.empty()) j["data"]["synthetic"] = data.synthetic;
  json b = json::array();
  for (const auto& x : bounds) b.push_back({x.lower, x.upper});
  j["bounds"] = b;
  j["basis"] = {{"family", family == PolynomialFamily::LegendreOrthonormal ? "legendre" : "hermite"},
                {"scheme", std::string(bpc::to_string(scheme))},
                {"max_degree", max_degree}};
  j["noise_variance"] = noise_variance;
  json arms_json = json::array();
  for (const auto& a : arms) {
    arms_json.push_back({{"name", a.name}, {"prior", prior_json(a.prior)}, {"conditioning", conditioning_json(a.conditioning)}});
  }
  j["arms"] = arms_json;
  j["mcmc"] = {{"chains", mcmc.chains}, {"warmup", mcmc.warmup}, {"draws", mcmc.draws}, {"seed", mcmc.seed},
               {"target_accept", mcmc.target_accept}, {"max_leapfrog", mcmc.max_leapfrog}};
  if (split.enabled) {
    json s = {{"train_sizes", split.train_sizes}, {"n_trials", split.n_trials}, {"seed", split.seed}};
    if (split.fraction) s["fraction"] = *split.fraction;
    if (split.n_train) s["n_train"] = *split.n_train;
    j["split"] = s;
  }
  j["moments"] = {{"samples", moments.samples}, {"seed", moments.seed}, {"credible_mass", moments.credible_mass}};
  std::vector<std::size_t> dims;
  for (auto d : sobol_dimensions) dims.push_back(d + 1);
  j["sobol"] = {{"dimensions", dims}};
  j["predict"] = {{"inputs", predict_inputs}};
  j["oracle"] = {{"samples", oracle_samples}};
  j["coregional"] = {{"mixture_draws", coregional.mixture_draws},
                     {"window", coregional.window},
                     {"independent_prior_variance", coregional.independent_prior_variance},
                     {"independent_noise_variances", coregional.independent_noise_variances}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

std::vector<Bounds> effective_bounds(const ExperimentConfig& cfg, const std::string& synthetic) {
  if (!cfg.bounds.empty()) return cfg.bounds;
  if (synthetic == "turbine_measurements" || synthetic == "turbine_simulation") return turbine_bounds();
  return {};
}

Dataset synthetic_dataset(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "turbine_measurements") return turbine_measurements(cfg.data.seed);
  if (name == "turbine_simulation") return turbine_simulation();
  if (name == "blade_format") return blade_format_table(548, cfg.data.seed);
  if (name == "sparse_instance") {
    const auto inst = sparse_instance();
    auto d = polynomial_dataset(inst.basis, inst.truth, cfg.data.n_train + cfg.data.n_test, cfg.noise_variance,
                                cfg.data.seed);
    d.source = "synthetic:sparse_instance";
    return d;
  }
  throw ConfigError("data.synthetic: unknown generator '" + name + "'");
}

}  // namespace

std::vector<Dataset> load_datasets(const ExperimentConfig& cfg) {
  std::vector<Dataset> out;
  if (!cfg.data.synthetic.empty()) {
    if (cfg.data.synthetic == "coregional_pair") throw ConfigError("data.synthetic: coregional_pair is only for the coregional command");
    Dataset d = synthetic_dataset(cfg.data.synthetic, cfg);
    const auto bounds = effective_bounds(cfg, cfg.data.synthetic);
    if (!bounds.empty()) d = map_to_reference(std::move(d), bounds);
    out.push_back(std::move(d));
    return out;
  }
  for (const auto& p : cfg.data.paths) {
    Dataset d = ingest_csv(cfg.resolve(p), cfg.bounds);
    d.validate();
    if (!out.empty() && d.dim() != out.front().dim()) throw DataError(d.source + ": input dimension differs from the first dataset");
    out.push_back(std::move(d));
  }
  return out;
}

PolynomialBasis make_basis(const ExperimentConfig& cfg, std::size_t dim) {
  InputSpace space = cfg.family == PolynomialFamily::LegendreOrthonormal ? InputSpace::uniform_cube(dim)
                                                                         : InputSpace::gaussian(dim);
  return PolynomialBasis(std::move(space), build_index_set(cfg.scheme, dim, cfg.max_degree));
}

ChainConfig chain_config(const McmcSpec& spec, std::uint64_t seed) {
  ChainConfig c;
  c.n_chains = spec.chains;
  c.warmup = spec.warmup;
  c.draws = spec.draws;
  c.seed = seed;
  c.target_accept = spec.target_accept;
  c.max_leapfrog = spec.max_leapfrog;
  return c;
}

namespace {

VectorXd read_coefficients(const std::filesystem::path& path, Eigen::Index expected) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open coefficient file");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comma = line.find_last_of(',');
    std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    if (cell.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
      values.push_back(v);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw CsvError(path.string(), line_no, 1, "non-numeric coefficient '" + cell + "'");
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw DataError(path.string() + ": expected " + std::to_string(expected) + " coefficients, found " +
                    std::to_string(values.size()));
  }
  return Eigen::Map<const VectorXd>(values.data(), expected);
}

VectorXd informed_mean(const PriorSpec& p, const ExperimentConfig& cfg, const PolynomialBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (!p.coefficients_path.empty()) return read_coefficients(cfg.resolve(p.coefficients_path), n);
  Dataset lowfi;
  if (!p.lowfi_path.empty()) {
    lowfi = ingest_csv(cfg.resolve(p.lowfi_path), cfg.bounds);
  } else {
    lowfi = synthetic_dataset(p.lowfi_synthetic, cfg);
    const auto bounds = effective_bounds(cfg, p.lowfi_synthetic);
    if (!bounds.empty()) lowfi = map_to_reference(std::move(lowfi), bounds);
  }
  lowfi.validate();
  if (lowfi.dim() != basis.dim()) throw DataError(lowfi.source + ": dimension differs from the basis");
  return least_squares(basis.design_matrix(lowfi.inputs), lowfi.outputs);
}

SamplerSummary sampler_summary(const SampleBatch& b) {
  SamplerSummary s;
  s.max_r_hat = b.max_r_hat();
  s.min_ess = b.min_ess();
  s.divergence_rate = b.divergence_rate;
  s.divergence_flag = b.divergence_flag;
  for (const auto& d : b.diagnostics) s.degenerate_parameters += d.degenerate ? 1 : 0;
  s.step_size = b.step_size;
  s.accept_rate = b.accept_rate;
  s.converged = s.max_r_hat <= 1.1 && s.degenerate_parameters == 0;
  return s;
}

double gaussian_z(double mass) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + mass));
}

MomentSummary sample_moment(const std::string& name, const std::vector<double>& samples, double mass) {
  const auto s = summarize(samples, mass);
  MomentSummary m;
  m.name = name;
  m.kind = "samples";
  m.mean = s.mean;
  m.sd = s.sd;
  m.median = s.median;
  m.lower = s.lower;
  m.upper = s.upper;
  m.samples = samples.size();
  return m;
}

}  // namespace

ArmFit fit_arm(const ArmSpec& arm, const ExperimentConfig& cfg, const PolynomialBasis& basis, const Dataset& train,
               std::uint64_t sampler_seed) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  const DesignMatrix V = basis.design_matrix(train.inputs);
  ArmFit fit;
  switch (arm.prior.type) {
    case PriorType::ZeroGaussian:
      fit.posterior = conjugate_posterior(V, train.outputs, GaussianPrior::isotropic(n, arm.prior.variance),
                                          NoiseSpec(cfg.noise_variance));
      break;
    case PriorType::InformedGaussian: {
      const VectorXd mu = informed_mean(arm.prior, cfg, basis);
      const GaussianPrior prior = physically_informed_prior(mu, arm.prior.variance * MatrixXd::Identity(n, n));
      fit.posterior = conjugate_posterior(V, train.outputs, prior, NoiseSpec(cfg.noise_variance));
      break;
    }
    case PriorType::Horseshoe: {
      HorseshoeConfig hs;
      hs.nu = arm.prior.nu;
      hs.s = arm.prior.s;
      hs.beta = arm.prior.beta;
      hs.noise_variance = cfg.noise_variance;
      hs.M = static_cast<std::size_t>(train.size());
      auto sparse = fit_sparse(V, train.outputs, hs, chain_config(cfg.mcmc, sampler_seed));
      fit.posterior = sparse.moment_matched();
      fit.draws = std::move(sparse.coefficient_draws);
      fit.batch = std::move(sparse.batch);
      break;
    }
    case PriorType::HierarchicalGaussian: {
      auto sparse = fit_hierarchical_gaussian(V, train.outputs, cfg.noise_variance, chain_config(cfg.mcmc, sampler_seed));
      fit.posterior = sparse.moment_matched();
      fit.draws = std::move(sparse.coefficient_draws);
      fit.batch = std::move(sparse.batch);
      break;
    }
  }
  if (arm.conditioning.enabled) {
    const double a = arm.conditioning.use_data_mean ? train.outputs.mean() : arm.conditioning.value;
    fit.posterior = condition_spatial_mean(fit.posterior, a, arm.conditioning.value_variance);
    fit.conditioning_value = a;
    fit.draws.reset();  // the conditioned posterior is the Gaussian one
  }
  return fit;
}

ArmResult summarize_arm(const ArmSpec& arm, const ArmFit& fit, const ExperimentConfig& cfg,
                        const PolynomialBasis& basis, bool with_sobol) {
  const double mass = cfg.moments.credible_mass;
  ArmResult r;
  r.name = arm.name;
  r.prior = to_string(arm.prior.type);
  r.conditioned = arm.conditioning.enabled;
  r.conditioning_value = fit.conditioning_value;
  if (fit.batch) r.sampler = sampler_summary(*fit.batch);

  auto& c = r.coefficients;
  c.indices = basis.index_set().indices();
  c.mass = mass;
  const auto n = fit.posterior.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fit.draws) {
      const auto col = fit.draws->col(i);
      const auto s = summarize(std::vector<double>(col.data(), col.data() + col.size()), mass);
      c.mean.push_back(s.mean);
      c.sd.push_back(s.sd);
      c.lower.push_back(s.lower);
      c.upper.push_back(s.upper);
    } else {
      const double m = fit.posterior.mean(i);
      const double sd = std::sqrt(std::max(fit.posterior.covariance(i, i), 0.0));
      const double z = gaussian_z(mass);
      c.mean.push_back(m);
      c.sd.push_back(sd);
      c.lower.push_back(m - z * sd);
      c.upper.push_back(m + z * sd);
    }
  }

  if (fit.draws) {
    const auto col = fit.draws->col(0);
    r.moments.push_back(sample_moment("spatial_mean", std::vector<double>(col.data(), col.data() + col.size()), mass));
    r.moments.push_back(sample_moment("spatial_variance", output_variance_from_draws(*fit.draws).samples, mass));
  } else {
    const auto mean_dist = output_mean_distribution(fit.posterior);
    MomentSummary m;
    m.name = "spatial_mean";
    m.kind = "gaussian";
    m.mean = mean_dist.mean;
    m.sd = std::sqrt(mean_dist.variance);
    m.median = mean_dist.mean;
    m.lower = m.mean - gaussian_z(mass) * m.sd;
    m.upper = m.mean + gaussian_z(mass) * m.sd;
    m.analytic_mean = mean_dist.mean;
    r.moments.push_back(m);
    const auto var_dist = output_variance_distribution(fit.posterior, cfg.moments.samples, cfg.moments.seed);
    auto v = sample_moment("spatial_variance", var_dist.samples, mass);
    v.analytic_mean = var_dist.analytic_mean;
    r.moments.push_back(v);
  }

  if (with_sobol) {
    const auto& idx = basis.index_set();
    std::vector<std::size_t> dims = cfg.sobol_dimensions;
    if (dims.empty()) {
      for (std::size_t d = 0; d < basis.dim(); ++d) dims.push_back(d);
    }
    for (std::size_t d : dims) {
      if (d >= basis.dim()) throw ConfigError("sobol.dimensions: dimension " + std::to_string(d + 1) + " exceeds the input dimension");
      const std::string label = "[x" + std::to_string(d + 1) + "]";
      const std::pair<const char*, MultiIndexSet> sets[] = {{"sobol_first", first_order_set(idx, d)},
                                                             {"sobol_total", total_effect_set(idx, d)}};
      for (const auto& [name, subsel] : sets) {
        const auto samples = fit.draws ? sobol_ratio_from_draws(*fit.draws, idx, subsel)
                                       : sobol_ratio_samples(fit.posterior, idx, subsel, cfg.moments.samples,
                                                             derive_seed(cfg.moments.seed, d + 1));
        r.moments.push_back(sample_moment(std::string(name) + label, samples, mass));
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> input_names(const Dataset& d) {
  if (d.column_names.size() == d.dim() + 1) return {d.column_names.begin(), d.column_names.end() - 1};
  std::vector<std::string> out;
  for (std::size_t c = 0; c < d.dim(); ++c) out.push_back("x" + std::to_string(c + 1));
  return out;
}

PredictionTable prediction_table(const std::string& name, const Dataset& test, const PredictiveDistribution& p) {
  PredictionTable t;
  t.name = name;
  t.input_names = input_names(test);
  t.inputs = test.inputs;
  t.truth = test.outputs;
  t.mean = p.mean;
  t.sd = p.sd();
  return t;
}

std::vector<std::size_t> training_sizes(const ExperimentConfig& cfg, std::size_t M) {
  if (!cfg.split.train_sizes.empty()) return cfg.split.train_sizes;
  if (cfg.split.n_train) return {*cfg.split.n_train};
  return {static_cast<std::size_t>(std::lround(*cfg.split.fraction * static_cast<double>(M)))};
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  data.validate();
  if (!cfg.split.enabled) throw ConfigError("run_experiment needs a 'split' section");
  const PolynomialBasis basis = make_basis(cfg, data.dim());
  const double sigma_out = sample_sd(data.outputs);
  const auto sizes = training_sizes(cfg, static_cast<std::size_t>(data.size()));
  for (auto n : sizes) {
    if (n < 1 || n >= static_cast<std::size_t>(data.size()))
      throw ConfigError("split: training size " + std::to_string(n) + " leaves no test rows");
  }

  ExperimentOutput out;
  FitReport& report = out.report;
  report.command = "fit";
  report.config = cfg.to_json();
  for (const auto& a : cfg.arms) report.arm_names.push_back(a.name);

  for (std::size_t si = 0; si < sizes.size(); ++si) {
    for (std::size_t t = 0; t < cfg.split.n_trials; ++t) {
      try {
        TrialRecord rec;
        rec.trial = t;
        rec.n_train = sizes[si];
        rec.split_seed = derive_seed(cfg.split.seed, t, si);
        rec.sampler_seed = derive_seed(cfg.mcmc.seed, t, si);
        const Split split = random_split(static_cast<std::size_t>(data.size()), sizes[si], rec.split_seed);
        rec.train_rows = split.train;
        rec.test_rows = split.test;
        const Dataset train = subset(data, split.train);
        const Dataset test = subset(data, split.test);
        for (const auto& arm : cfg.arms) {
          const ArmFit fit = fit_arm(arm, cfg, basis, train, rec.sampler_seed);
          const auto pred = predictive(fit.posterior, basis, test.inputs);
          rec.rmse.push_back({arm.name, 0, normalized_rmse(test.outputs, pred.mean, sigma_out)});
          if (fit.batch) {
            const double r = fit.batch->max_r_hat();
            const bool degenerate = std::any_of(fit.batch->diagnostics.begin(), fit.batch->diagnostics.end(),
                                                [](const auto& d) { return d.degenerate; });
            const double worst = degenerate ? std::numeric_limits<double>::infinity() : r;
            rec.max_r_hat = std::max(rec.max_r_hat.value_or(0.0), worst);
          }
          if (si == 0 && t == 0) report.arms.push_back(summarize_arm(arm, fit, cfg, basis, false));
          out.tables.push_back(prediction_table(
              "predictions_" + file_safe(arm.name) + "_n" + std::to_string(sizes[si]) + "_trial" + std::to_string(t), test,
              pred));
        }
        report.trials.push_back(std::move(rec));
      } catch (...) {
        rethrow_with("trial " + std::to_string(t) + " (n_train " + std::to_string(sizes[si]) + "): ");
      }
    }
    SweepRow row;
    row.n_train = sizes[si];
    for (const auto& arm : cfg.arms) {
      std::vector<double> printed, conventional;
      for (const auto& rec : report.trials) {
        if (rec.n_train != sizes[si]) continue;
        for (const auto& e : rec.rmse) {
          if (e.arm == arm.name) {
            printed.push_back(e.value.printed);
            conventional.push_back(e.value.conventional);
          }
        }
      }
      row.arms.push_back(arm.name);
      row.median_printed.push_back(median(printed));
      row.median_conventional.push_back(median(conventional));
    }
    report.sweep.push_back(std::move(row));
  }
  return out;
}

ExperimentOutput run_full_fit(const ExperimentConfig& cfg, const Dataset& data, const std::string& command,
                              bool with_sobol) {
  data.validate();
  const PolynomialBasis basis = make_basis(cfg, data.dim());
  ExperimentOutput out;
  out.report.command = command;
  out.report.config = cfg.to_json();
  std::optional<Dataset> query;
  if (!cfg.predict_inputs.empty()) {
    Dataset q;
    q.inputs = read_inputs_csv(cfg.resolve(cfg.predict_inputs), data.dim());
    q.outputs = VectorXd::Zero(q.inputs.rows());
    q.column_names = data.column_names;
    q.source = cfg.resolve(cfg.predict_inputs).string();
    if (!cfg.bounds.empty()) q = map_to_reference(std::move(q), cfg.bounds);
    query = std::move(q);
  }
  for (const auto& arm : cfg.arms) {
    out.report.arm_names.push_back(arm.name);
    const ArmFit fit = fit_arm(arm, cfg, basis, data, cfg.mcmc.seed);
    out.report.arms.push_back(summarize_arm(arm, fit, cfg, basis, with_sobol));
    const Dataset& target = query ? *query : data;
    auto table = prediction_table("predictions_" + file_safe(arm.name), target, predictive(fit.posterior, basis, target.inputs));
    if (query) table.truth.reset();
    out.tables.push_back(std::move(table));
  }
  return out;
}

ExperimentOutput run_coregional(const ExperimentConfig& cfg) {
  std::vector<Dataset> files;
  if (cfg.data.synthetic.empty()) {
    files = load_datasets(cfg);
    if (files.size() < 2) throw ConfigError("coregional: give at least two per-output datasets");
  } else if (cfg.data.synthetic != "coregional_pair") {
    throw ConfigError("coregional: synthetic data must be 'coregional_pair'");
  }
  const std::size_t dim = files.empty() ? 7 : files.front().dim();
  const auto basis = std::make_shared<const PolynomialBasis>(make_basis(cfg, dim));

  ExperimentOutput out;
  FitReport& report = out.report;
  report.command = "coregional";
  report.config = cfg.to_json();
  report.arm_names.push_back("coregional");
  for (double v : cfg.coregional.independent_noise_variances)
    report.arm_names.push_back("independent[noise_variance=" + format_number(v) + "]");

  for (std::size_t t = 0; t < cfg.split.n_trials; ++t) {
    try {
      TrialRecord rec;
      rec.trial = t;
      rec.split_seed = derive_seed(cfg.split.seed, t);
      rec.sampler_seed = derive_seed(cfg.mcmc.seed, t);
      StackedDataset train, test;
      std::vector<double> sigma_out;
      if (files.empty()) {
        auto pair = coregional_pair(cfg.data.n_train, cfg.data.n_test, derive_seed(cfg.data.seed, t));
        train = std::move(pair.train);
        test = std::move(pair.test);
      } else {
        for (std::size_t o = 0; o < files.size(); ++o) {
          const auto m = static_cast<std::size_t>(files[o].size());
          const std::size_t n = cfg.split.n_train ? *cfg.split.n_train
                                                  : static_cast<std::size_t>(std::lround(cfg.split.fraction.value_or(0.5) * m));
          if (n < 1 || n >= m) throw ConfigError("split leaves no training or test rows for output " + std::to_string(o));
          const Split s = random_split(m, n, derive_seed(cfg.split.seed, t, o));
          const Dataset tr = subset(files[o], s.train);
          const Dataset te = subset(files[o], s.test);
          train.X.push_back(tr.inputs);
          train.y.push_back(tr.outputs);
          test.X.push_back(te.inputs);
          test.y.push_back(te.outputs);
        }
      }
      for (std::size_t o = 0; o < train.n_outputs(); ++o) {
        VectorXd all(train.y[o].size() + test.y[o].size());
        all << train.y[o], test.y[o];
        sigma_out.push_back(sample_sd(all));
      }
      rec.n_train = static_cast<std::size_t>(train.X.front().rows());

      const auto fit = fit_coregional(basis, train, cfg.noise_variance, chain_config(cfg.mcmc, rec.sampler_seed));
      const auto pred = predict(fit.mixture_draws(cfg.coregional.mixture_draws, cfg.coregional.window), train, test.X);

      auto record = [&](const std::string& arm, const std::vector<PredictiveDistribution>& p) {
        for (std::size_t o = 0; o < p.size(); ++o) {
          rec.rmse.push_back({arm, o, normalized_rmse(test.y[o], p[o].mean, sigma_out[o])});
          Dataset te;
          te.inputs = test.X[o];
          te.outputs = test.y[o];
          out.tables.push_back(prediction_table(
              "coregional_" + file_safe(arm) + "_output" + std::to_string(o + 1) + "_trial" + std::to_string(t), te, p[o]));
        }
      };
      record("coregional", pred.outputs);
      for (std::size_t k = 0; k < cfg.coregional.independent_noise_variances.size(); ++k) {
        record(report.arm_names[k + 1],
               predict_independent(*basis, train, test.X, cfg.coregional.independent_prior_variance,
                                   cfg.coregional.independent_noise_variances[k]));
      }

      CoregionalTrialSummary cs;
      cs.trial = t;
      for (Eigen::Index i = 0; i < fit.B_mean.rows(); ++i) {
        std::vector<double> mean_row, sd_row;
        for (Eigen::Index j = 0; j < fit.B_mean.cols(); ++j) {
          mean_row.push_back(fit.B_mean(i, j));
          sd_row.push_back(fit.B_sd(i, j));
        }
        cs.B_mean.push_back(std::move(mean_row));
        cs.B_sd.push_back(std::move(sd_row));
      }
      cs.correlation = fit.B_mean.rows() >= 2 ? fit.B_mean(0, 1) / std::sqrt(fit.B_mean(0, 0) * fit.B_mean(1, 1))
                                              : std::numeric_limits<double>::quiet_NaN();
      cs.sampler = sampler_summary(fit.batch);
      rec.max_r_hat = cs.sampler.max_r_hat;
      report.coregional.push_back(std::move(cs));
      report.trials.push_back(std::move(rec));
    } catch (...) {
      rethrow_with("trial " + std::to_string(t) + ": ");
    }
  }

  SweepRow row;
  row.n_train = report.trials.empty() ? 0 : report.trials.front().n_train;
  for (const auto& arm : report.arm_names) {
    row.arms.push_back(arm);
    row.median_printed.push_back(report.median_rmse(arm, true));
    row.median_conventional.push_back(report.median_rmse(arm, false));
  }
  report.sweep.push_back(std::move(row));
  return out;
}

ExperimentOutput run_oracle(const ExperimentConfig& cfg, const Dataset& data) {
  data.validate();
  const PolynomialBasis basis = make_basis(cfg, data.dim());
  const ArmSpec& arm = cfg.arms.front();
  const ArmFit fit = fit_arm(arm, cfg, basis, data, cfg.mcmc.seed);
  ExperimentOutput out;
  out.report.command = "oracle";
  out.report.config = cfg.to_json();
  out.report.arm_names.push_back(arm.name);
  out.report.arms.push_back(summarize_arm(arm, fit, cfg, basis, false));
  const VectorXd& mu = fit.posterior.mean;
  const auto mc = mc_oracle(basis, mu, cfg.oracle_samples, cfg.moments.seed);
  OracleSummary o;
  o.mean = mc.mean;
  o.variance = mc.variance;
  o.mean_se = mc.mean_se;
  o.variance_se = mc.variance_se;
  o.samples = mc.samples;
  o.closed_form_mean = mu(0);
  o.closed_form_variance = mu.tail(mu.size() - 1).squaredNorm();
  out.report.oracle = o;
  return out;
}

void write_outputs(const std::filesystem::path& dir, const ExperimentOutput& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create output directory: " + ec.message());
  write_report(dir / "report.json", out.report);
  for (const auto& t : out.tables) write_prediction_table(dir / (t.name + ".csv"), t);
  if (!out.report.sweep.empty()) {
    std::ofstream s(dir / "rmse_table.csv", std::ios::binary);
    s.precision(17);
    s << "n_train,arm,median_rmse_printed,median_rmse_conventional\n";
    for (const auto& row : out.report.sweep) {
      for (std::size_t k = 0; k < row.arms.size(); ++k)
        s << row.n_train << ',' << row.arms[k] << ',' << row.median_printed[k] << ',' << row.median_conventional[k] << '\n';
    }
  }
  if (!out.report.trials.empty()) {
    std::ofstream s(dir / "trials.csv", std::ios::binary);
    s.precision(17);
    s << "trial,n_train,arm,output,rmse_printed,rmse_conventional\n";
    for (const auto& t : out.report.trials) {
      for (const auto& e : t.rmse)
        s << t.trial << ',' << t.n_train << ',' << e.arm << ',' << e.output + 1 << ',' << e.value.printed << ','
          << e.value.conventional << '\n';
    }
  }
}

}  // namespace bpc::app
