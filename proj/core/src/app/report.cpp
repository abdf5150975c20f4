#include "bpc/app/report.hpp"

#include "bpc/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bpc::app {

using nlohmann::json;

namespace {

// Non-finite doubles are stored as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, const char* key) {
  const json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::optional<double> get_opt_num(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const json& j, const char* key) {
  std::vector<double> out;
  for (const auto& v : j.at(key)) out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  return out;
}

json matrix(const std::vector<std::vector<double>>& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(nums(row));
  return a;
}

std::vector<std::vector<double>> get_matrix(const json& j, const char* key) {
  std::vector<std::vector<double>> out;
  for (const auto& row : j.at(key)) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const CoefficientSummary& c) {
  return {{"indices", c.indices}, {"mean", nums(c.mean)}, {"sd", nums(c.sd)},
          {"lower", nums(c.lower)}, {"upper", nums(c.upper)}, {"mass", c.mass}};
}

CoefficientSummary coefficient_summary(const json& j) {
  CoefficientSummary c;
  c.indices = j.at("indices").get<std::vector<MultiIndex>>();
  c.mean = get_nums(j, "mean");
  c.sd = get_nums(j, "sd");
  c.lower = get_nums(j, "lower");
  c.upper = get_nums(j, "upper");
  c.mass = j.at("mass").get<double>();
  return c;
}

json to_json(const MomentSummary& m) {
  return {{"name", m.name},       {"kind", m.kind},         {"mean", num(m.mean)},
          {"sd", num(m.sd)},      {"median", num(m.median)}, {"lower", num(m.lower)},
          {"upper", num(m.upper)}, {"analytic_mean", opt_num(m.analytic_mean)}, {"samples", m.samples}};
}

MomentSummary moment_summary(const json& j) {
  MomentSummary m;
  m.name = j.at("name").get<std::string>();
  m.kind = j.at("kind").get<std::string>();
  m.mean = get_num(j, "mean");
  m.sd = get_num(j, "sd");
  m.median = get_num(j, "median");
  m.lower = get_num(j, "lower");
  m.upper = get_num(j, "upper");
  m.analytic_mean = get_opt_num(j, "analytic_mean");
  m.samples = j.at("samples").get<std::size_t>();
  return m;
}

json to_json(const SamplerSummary& s) {
  return {{"max_r_hat", num(s.max_r_hat)},
          {"min_ess", num(s.min_ess)},
          {"divergence_rate", num(s.divergence_rate)},
          {"divergence_flag", s.divergence_flag},
          {"degenerate_parameters", s.degenerate_parameters},
          {"step_size", nums(s.step_size)},
          {"accept_rate", nums(s.accept_rate)},
          {"converged", s.converged}};
}

SamplerSummary sampler_summary(const json& j) {
  SamplerSummary s;
  s.max_r_hat = get_num(j, "max_r_hat");
  s.min_ess = get_num(j, "min_ess");
  s.divergence_rate = get_num(j, "divergence_rate");
  s.divergence_flag = j.at("divergence_flag").get<bool>();
  s.degenerate_parameters = j.at("degenerate_parameters").get<std::size_t>();
  s.step_size = get_nums(j, "step_size");
  s.accept_rate = get_nums(j, "accept_rate");
  s.converged = j.at("converged").get<bool>();
  return s;
}

json to_json(const ArmResult& a) {
  json moments = json::array();
  for (const auto& m : a.moments) moments.push_back(to_json(m));
  return {{"name", a.name},
          {"prior", a.prior},
          {"conditioned", a.conditioned},
          {"conditioning_value", opt_num(a.conditioning_value)},
          {"coefficients", to_json(a.coefficients)},
          {"moments", moments},
          {"sampler", a.sampler ? to_json(*a.sampler) : json(nullptr)}};
}

ArmResult arm_result(const json& j) {
  ArmResult a;
  a.name = j.at("name").get<std::string>();
  a.prior = j.at("prior").get<std::string>();
  a.conditioned = j.at("conditioned").get<bool>();
  a.conditioning_value = get_opt_num(j, "conditioning_value");
  a.coefficients = coefficient_summary(j.at("coefficients"));
  for (const auto& m : j.at("moments")) a.moments.push_back(moment_summary(m));
  if (!j.at("sampler").is_null()) a.sampler = sampler_summary(j.at("sampler"));
  return a;
}

json to_json(const TrialRecord& t) {
  json rmse = json::array();
  for (const auto& e : t.rmse) {
    rmse.push_back({{"arm", e.arm},
                    {"output", e.output},
                    {"printed", num(e.value.printed)},
                    {"conventional", num(e.value.conventional)}});
  }
  return {{"trial", t.trial},
          {"n_train", t.n_train},
          {"split_seed", t.split_seed},
          {"sampler_seed", t.sampler_seed},
          {"train_rows", t.train_rows},
          {"test_rows", t.test_rows},
          {"rmse", rmse},
          {"max_r_hat", opt_num(t.max_r_hat)}};
}

TrialRecord trial_record(const json& j) {
  TrialRecord t;
  t.trial = j.at("trial").get<std::size_t>();
  t.n_train = j.at("n_train").get<std::size_t>();
  t.split_seed = j.at("split_seed").get<std::uint64_t>();
  t.sampler_seed = j.at("sampler_seed").get<std::uint64_t>();
  t.train_rows = j.at("train_rows").get<std::vector<std::size_t>>();
  t.test_rows = j.at("test_rows").get<std::vector<std::size_t>>();
  for (const auto& e : j.at("rmse")) {
    t.rmse.push_back({e.at("arm").get<std::string>(), e.at("output").get<std::size_t>(),
                      {get_num(e, "printed"), get_num(e, "conventional")}});
  }
  t.max_r_hat = get_opt_num(j, "max_r_hat");
  return t;
}

json to_json(const SweepRow& s) {
  return {{"n_train", s.n_train},
          {"arms", s.arms},
          {"median_printed", nums(s.median_printed)},
          {"median_conventional", nums(s.median_conventional)}};
}

SweepRow sweep_row(const json& j) {
  SweepRow s;
  s.n_train = j.at("n_train").get<std::size_t>();
  s.arms = j.at("arms").get<std::vector<std::string>>();
  s.median_printed = get_nums(j, "median_printed");
  s.median_conventional = get_nums(j, "median_conventional");
  return s;
}

json to_json(const CoregionalTrialSummary& c) {
  return {{"trial", c.trial},
          {"B_mean", matrix(c.B_mean)},
          {"B_sd", matrix(c.B_sd)},
          {"correlation", num(c.correlation)},
          {"sampler", to_json(c.sampler)}};
}

CoregionalTrialSummary coregional_summary(const json& j) {
  CoregionalTrialSummary c;
  c.trial = j.at("trial").get<std::size_t>();
  c.B_mean = get_matrix(j, "B_mean");
  c.B_sd = get_matrix(j, "B_sd");
  c.correlation = get_num(j, "correlation");
  c.sampler = sampler_summary(j.at("sampler"));
  return c;
}

json to_json(const OracleSummary& o) {
  return {{"mean", num(o.mean)},
          {"variance", num(o.variance)},
          {"mean_se", num(o.mean_se)},
          {"variance_se", num(o.variance_se)},
          {"samples", o.samples},
          {"closed_form_mean", num(o.closed_form_mean)},
          {"closed_form_variance", num(o.closed_form_variance)}};
}

OracleSummary oracle_summary(const json& j) {
  OracleSummary o;
  o.mean = get_num(j, "mean");
  o.variance = get_num(j, "variance");
  o.mean_se = get_num(j, "mean_se");
  o.variance_se = get_num(j, "variance_se");
  o.samples = j.at("samples").get<std::size_t>();
  o.closed_form_mean = get_num(j, "closed_form_mean");
  o.closed_form_variance = get_num(j, "closed_form_variance");
  return o;
}

}  // namespace

bool FitReport::converged() const {
  auto ok = [](const SamplerSummary& s) { return s.converged; };
  for (const auto& a : arms) {
    if (a.sampler && !ok(*a.sampler)) return false;
  }
  for (const auto& t : trials) {
    if (t.max_r_hat && !(*t.max_r_hat <= 1.1)) return false;
  }
  for (const auto& c : coregional) {
    if (!ok(c.sampler)) return false;
  }
  return true;
}

double FitReport::median_rmse(const std::string& arm, bool printed) const {
  std::vector<double> values;
  for (const auto& t : trials) {
    for (const auto& e : t.rmse) {
      if (e.arm == arm) values.push_back(printed ? e.value.printed : e.value.conventional);
    }
  }
  return median(values);
}

std::string to_json_text(const FitReport& report) {
  json j;
  j["format"] = "bpc-report-1";
  j["command"] = report.command;
  j["config"] = report.config.empty() ? json(nullptr) : json::parse(report.config);
  j["arm_names"] = report.arm_names;
  j["arms"] = json::array();
  for (const auto& a : report.arms) j["arms"].push_back(to_json(a));
  j["trials"] = json::array();
  for (const auto& t : report.trials) j["trials"].push_back(to_json(t));
  j["sweep"] = json::array();
  for (const auto& s : report.sweep) j["sweep"].push_back(to_json(s));
  j["coregional"] = json::array();
  for (const auto& c : report.coregional) j["coregional"].push_back(to_json(c));
  j["oracle"] = report.oracle ? to_json(*report.oracle) : json(nullptr);
  j["converged"] = report.converged();
  return j.dump(2) + "\n";
}

FitReport from_json_text(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "bpc-report-1") throw DataError("not a bpc report");
    FitReport r;
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config").is_null() ? std::string() : j.at("config").dump();
    r.arm_names = j.at("arm_names").get<std::vector<std::string>>();
    for (const auto& a : j.at("arms")) r.arms.push_back(arm_result(a));
    for (const auto& t : j.at("trials")) r.trials.push_back(trial_record(t));
    for (const auto& s : j.at("sweep")) r.sweep.push_back(sweep_row(s));
    for (const auto& c : j.at("coregional")) r.coregional.push_back(coregional_summary(c));
    if (!j.at("oracle").is_null()) r.oracle = oracle_summary(j.at("oracle"));
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const FitReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write report");
  out << to_json_text(report);
}

FitReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open report");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void write_prediction_table(const std::filesystem::path& path, const PredictionTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write predictions");
  out.precision(17);
  for (const auto& n : table.input_names) out << n << ',';
  if (table.truth) out << "truth,";
  out << "mean,sd\n";
  for (Eigen::Index r = 0; r < table.mean.size(); ++r) {
    for (Eigen::Index c = 0; c < table.inputs.cols(); ++c) out << table.inputs(r, c) << ',';
    if (table.truth) out << (*table.truth)(r) << ',';
    out << table.mean(r) << ',' << table.sd(r) << '\n';
  }
}

}  // namespace bpc::app
