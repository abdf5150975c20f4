#include "bpc/hier_sampler.hpp"

#include "bpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace bpc {

// ---------------------------------------------------------------------------
// LogDensityModel
// ---------------------------------------------------------------------------

double LogDensityModel::logp(const VectorXd& theta) const {
  VectorXd g(dim);
  return value_and_gradient(theta, g);
}

VectorXd LogDensityModel::grad(const VectorXd& theta) const {
  VectorXd g(dim);
  value_and_gradient(theta, g);
  return g;
}

Transform LogDensityModel::transform(Eigen::Index i) const {
  return transforms.empty() ? Transform::Identity : transforms[static_cast<std::size_t>(i)];
}

VectorXd LogDensityModel::to_constrained(const VectorXd& z) const {
  VectorXd theta = z;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (transform(i) == Transform::Log) theta(i) = std::exp(z(i));
  }
  return theta;
}

VectorXd LogDensityModel::to_unconstrained(const VectorXd& theta) const {
  VectorXd z = theta;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (transform(i) == Transform::Log) z(i) = std::log(theta(i));
  }
  return z;
}

double LogDensityModel::unconstrained_value_and_gradient(const VectorXd& z, VectorXd& grad_z) const {
  const VectorXd theta = to_constrained(z);
  grad_z.resize(dim);
  double lp = value_and_gradient(theta, grad_z);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (transform(i) == Transform::Log) {
      lp += z(i);
      grad_z(i) = grad_z(i) * theta(i) + 1.0;
    }
  }
  return lp;
}

std::string LogDensityModel::name(Eigen::Index i) const {
  if (static_cast<std::size_t>(i) < names.size()) return names[static_cast<std::size_t>(i)];
  return "theta[" + std::to_string(i) + "]";
}

void ChainConfig::validate() const {
  if (n_chains < 2) throw std::invalid_argument("need at least two chains for R-hat");
  if (draws < 1) throw std::invalid_argument("need at least one draw per chain");
  if (warmup < 0) throw std::invalid_argument("warmup must be non-negative");
  if (adapt_mass_matrix && warmup < 100) {
    throw std::invalid_argument("warmup must be >= 100 when adaptation is enabled");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw std::invalid_argument("target_accept must be in (0,1)");
  if (max_leapfrog < 1) throw std::invalid_argument("max_leapfrog must be >= 1");
  if (!(integration_time > 0.0)) throw std::invalid_argument("integration_time must be positive");
}

// ---------------------------------------------------------------------------
// SampleBatch
// ---------------------------------------------------------------------------

MatrixXd SampleBatch::pooled() const {
  if (chains.empty()) return {};
  MatrixXd out(draws_per_chain() * static_cast<Eigen::Index>(chains.size()), dim());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    out.middleRows(static_cast<Eigen::Index>(c) * draws_per_chain(), draws_per_chain()) = chains[c];
  }
  return out;
}

VectorXd SampleBatch::mean() const { return pooled().colwise().mean().transpose(); }

double SampleBatch::max_r_hat() const {
  double out = 0.0;
  for (const auto& d : diagnostics) {
    if (!d.degenerate) out = std::max(out, d.r_hat);
  }
  return out;
}

double SampleBatch::min_ess() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& d : diagnostics) {
    if (!d.degenerate) out = std::min(out, d.ess);
  }
  return out;
}

// ---------------------------------------------------------------------------
// HMC
// ---------------------------------------------------------------------------

namespace {

class DualAveraging {
 public:
  DualAveraging(double step, double target) : target_(target) { restart(step); }

  void restart(double step) {
    mu_ = std::log(10.0 * step);
    log_step_ = std::log(step);
    log_step_bar_ = 0.0;
    h_bar_ = 0.0;
    counter_ = 0;
  }

  double update(double accept_stat) {
    ++counter_;
    const double c = static_cast<double>(counter_);
    const double eta = 1.0 / (c + kT0);
    h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_stat);
    log_step_ = mu_ - std::sqrt(c) / kGamma * h_bar_;
    const double w = std::pow(c, -kKappa);
    log_step_bar_ = w * log_step_ + (1.0 - w) * log_step_bar_;
    return std::exp(log_step_);
  }

  double final_step() const { return counter_ > 0 ? std::exp(log_step_bar_) : std::exp(log_step_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  double target_;
  double mu_ = 0.0;
  double log_step_ = 0.0;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  long counter_ = 0;
};

// Slow-adaptation window ends (iteration indices, exclusive), Stan layout.
struct WarmupPlan {
  int init_buffer = 0;
  int term_buffer = 0;
  std::vector<int> window_ends;
};

WarmupPlan plan_warmup(int warmup, bool adapt_metric) {
  WarmupPlan plan;
  if (!adapt_metric || warmup < 20) return plan;
  int init = 75;
  int term = 50;
  int base = 25;
  if (init + term + base > warmup) {
    init = static_cast<int>(0.15 * warmup);
    term = static_cast<int>(0.1 * warmup);
    base = warmup - init - term;
  }
  plan.init_buffer = init;
  plan.term_buffer = term;
  const int slow_end = warmup - term;
  int start = init;
  int size = base;
  while (start < slow_end) {
    int end = start + size;
    if (end + 2 * size > slow_end) end = slow_end;
    plan.window_ends.push_back(end);
    start = end;
    size *= 2;
  }
  return plan;
}

struct ChainResult {
  MatrixXd draws;
  double accept_rate = 0.0;
  std::size_t divergences = 0;
  double step_size = 0.0;
};

class HmcChain {
 public:
  HmcChain(const LogDensityModel& model, const ChainConfig& cfg, int chain_index)
      : model_(model), cfg_(cfg), rng_(make_rng(cfg.seed, static_cast<std::uint64_t>(chain_index) + 1)) {
    inv_metric_ = VectorXd::Ones(model.dim);
  }

  ChainResult run() {
    initialize();
    step_ = find_reasonable_step();
    DualAveraging da(step_, cfg_.target_accept);
    const auto plan = plan_warmup(cfg_.warmup, cfg_.adapt_mass_matrix);
    std::size_t window = 0;
    int window_start = plan.init_buffer;
    std::vector<VectorXd> window_draws;

    ChainResult out;
    out.draws.resize(cfg_.draws, model_.dim);
    double accept_sum = 0.0;

    const int total = cfg_.warmup + cfg_.draws;
    for (int it = 0; it < total; ++it) {
      const bool warming = it < cfg_.warmup;
      const auto [accept_stat, divergent] = transition();
      if (warming) {
        step_ = da.update(accept_stat);
        if (window < plan.window_ends.size() && it >= window_start) {
          window_draws.push_back(z_);
          if (it + 1 == plan.window_ends[window]) {
            update_metric(window_draws);
            window_draws.clear();
            window_start = plan.window_ends[window];
            ++window;
            step_ = find_reasonable_step();
            da.restart(step_);
          }
        }
        if (it + 1 == cfg_.warmup) step_ = da.final_step();
      } else {
        accept_sum += accept_stat;
        if (divergent) ++out.divergences;
        out.draws.row(it - cfg_.warmup) = model_.to_constrained(z_).transpose();
      }
    }
    out.accept_rate = accept_sum / cfg_.draws;
    out.step_size = step_;
    return out;
  }

 private:
  void initialize() {
    std::normal_distribution<double> normal(0.0, cfg_.init_scale);
    for (int attempt = 0; attempt < 100; ++attempt) {
      z_.resize(model_.dim);
      for (Eigen::Index i = 0; i < model_.dim; ++i) z_(i) = normal(rng_);
      try {
        logp_ = model_.unconstrained_value_and_gradient(z_, grad_);
      } catch (const NumericalError&) {
        continue;
      }
      if (std::isfinite(logp_) && grad_.allFinite()) return;
    }
    throw NumericalError("log density is non-finite at every attempted initial point");
  }

  double kinetic(const VectorXd& p) const { return 0.5 * (p.array().square() * inv_metric_.array()).sum(); }

  VectorXd draw_momentum() {
    VectorXd p = standard_normal(rng_, model_.dim);
    return p.array() / inv_metric_.array().sqrt();
  }

  // One leapfrog trajectory of n steps from the current state. Returns the
  // proposal's Hamiltonian (infinity on non-finite evaluations).
  double integrate(VectorXd& z, VectorXd& p, VectorXd& g, double& lp, double eps, int n) const {
    for (int s = 0; s < n; ++s) {
      p += 0.5 * eps * g;
      z += eps * (inv_metric_.array() * p.array()).matrix();
      try {
        lp = model_.unconstrained_value_and_gradient(z, g);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();  // rejected like any divergent proposal
      }
      if (!std::isfinite(lp) || !g.allFinite()) return std::numeric_limits<double>::infinity();
      p += 0.5 * eps * g;
    }
    return -lp + kinetic(p);
  }

  double find_reasonable_step() {
    double eps = step_ > 0.0 ? step_ : 1.0;
    auto accept_prob = [&](double e) {
      VectorXd z = z_, g = grad_;
      VectorXd p = draw_momentum();
      double lp = logp_;
      const double h0 = -logp_ + kinetic(p);
      const double h1 = integrate(z, p, g, lp, e, 1);
      return std::isfinite(h1) ? std::exp(std::min(0.0, h0 - h1)) : 0.0;
    };
    const double a0 = accept_prob(eps);
    const double dir = a0 > 0.5 ? 1.0 : -1.0;
    for (int i = 0; i < 60; ++i) {
      const double a = accept_prob(eps);
      if ((dir > 0 && a <= 0.5) || (dir < 0 && a > 0.5)) break;
      eps *= dir > 0 ? 2.0 : 0.5;
      if (eps > 1e3 || eps < 1e-10) break;
    }
    return eps;
  }

  std::pair<double, bool> transition() {
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    const double length = unif(rng_) * cfg_.integration_time;
    const int n = std::clamp(static_cast<int>(std::ceil(length / step_)), 1, cfg_.max_leapfrog);

    VectorXd p = draw_momentum();
    const double h0 = -logp_ + kinetic(p);
    VectorXd z = z_, g = grad_;
    double lp = logp_;
    const double h1 = integrate(z, p, g, lp, step_, n);
    const double delta = h1 - h0;
    const bool divergent = !std::isfinite(delta) || delta > 1000.0;
    const double accept = divergent ? 0.0 : std::exp(std::min(0.0, -delta));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (!divergent && u01(rng_) < accept) {
      z_ = std::move(z);
      grad_ = std::move(g);
      logp_ = lp;
    }
    return {accept, divergent};
  }

  void update_metric(const std::vector<VectorXd>& draws) {
    if (draws.size() < 3) return;
    const double n = static_cast<double>(draws.size());
    VectorXd mean = VectorXd::Zero(model_.dim);
    for (const auto& d : draws) mean += d;
    mean /= n;
    VectorXd var = VectorXd::Zero(model_.dim);
    for (const auto& d : draws) var += (d - mean).array().square().matrix();
    var /= (n - 1.0);
    // Regularize toward a small unit metric, as in Stan.
    inv_metric_ = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

  const LogDensityModel& model_;
  const ChainConfig& cfg_;
  Rng rng_;
  VectorXd z_;
  VectorXd grad_;
  double logp_ = 0.0;
  double step_ = 0.0;
  VectorXd inv_metric_;
};

}  // namespace

SampleBatch sample(const LogDensityModel& model, const ChainConfig& cfg) {
  cfg.validate();
  if (model.dim < 1 || !model.value_and_gradient) throw std::invalid_argument("log density model is empty");
  if (!model.transforms.empty() && static_cast<Eigen::Index>(model.transforms.size()) != model.dim) {
    throw std::invalid_argument("transform list does not match model dimension");
  }

  std::vector<ChainResult> results(static_cast<std::size_t>(cfg.n_chains));
  std::vector<std::exception_ptr> errors(results.size());
  auto run_chain = [&](int c) {
    try {
      results[static_cast<std::size_t>(c)] = HmcChain(model, cfg, c).run();
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (cfg.parallel_chains && cfg.n_chains > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> workers;
    for (int c = 0; c < cfg.n_chains; ++c) workers.emplace_back(run_chain, c);
  } else {
    for (int c = 0; c < cfg.n_chains; ++c) run_chain(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SampleBatch batch;
  for (Eigen::Index i = 0; i < model.dim; ++i) batch.names.push_back(model.name(i));
  std::size_t divergent = 0;
  for (auto& r : results) {
    batch.chains.push_back(std::move(r.draws));
    batch.accept_rate.push_back(r.accept_rate);
    batch.divergences.push_back(r.divergences);
    batch.step_size.push_back(r.step_size);
    divergent += r.divergences;
  }
  batch.divergence_rate = static_cast<double>(divergent) / (static_cast<double>(cfg.n_chains) * cfg.draws);
  batch.divergence_flag = batch.divergence_rate > kDivergenceFlagRate;
  if (cfg.n_chains >= 2) batch.diagnostics = diagnostics(batch);
  return batch;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

namespace {

// Ridders' extrapolation of the central difference: shrinks the step
// geometrically and keeps the tableau entry with the smallest error estimate,
// which balances truncation error against rounding noise in f.
double ridders_derivative(const std::function<double(double)>& f, double h) {
  constexpr int kTable = 10;
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink, kSafe = 2.0;
  double a[kTable][kTable];
  auto central = [&](double step) { return (f(step) - f(-step)) / (2.0 * step); };
  a[0][0] = central(h);
  double best = a[0][0];
  double err = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kTable; ++i) {
    h /= kShrink;
    a[0][i] = central(h);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
  }
  return best;
}

}  // namespace

GradientCheckReport gradient_check(const LogDensityModel& model, int n_points, std::uint64_t seed, double scale) {
  GradientCheckReport report;
  auto rng = make_rng(seed, 0xC0FFEE);
  VectorXd g(model.dim), scratch(model.dim);
  for (int pt = 0; pt < n_points; ++pt) {
    const VectorXd z = scale * standard_normal(rng, model.dim);
    model.unconstrained_value_and_gradient(z, g);
    for (Eigen::Index i = 0; i < model.dim; ++i) {
      const double fd = ridders_derivative(
          [&](double offset) {
            VectorXd zs = z;
            zs(i) += offset;
            return model.unconstrained_value_and_gradient(zs, scratch);
          },
          0.05 * std::max(1.0, std::abs(z(i))));
      const double err = std::abs(g(i) - fd) / std::max({1.0, std::abs(fd), std::abs(g(i))});
      if (!(err <= report.max_relative_error)) {
        report.max_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        report.worst_parameter = i;
      }
    }
    ++report.points;
  }
  return report;
}

}  // namespace bpc
