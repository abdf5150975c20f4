// Convergence diagnostics: split R-hat (classic and rank-normalized) and bulk
// effective sample size with Geyer's initial monotone sequence.

#include "bpc/hier_sampler.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bpc {
namespace {

using Chains = std::vector<std::vector<double>>;

// Splits each chain into halves (dropping the middle draw when odd).
Chains split(const Chains& chains) {
  Chains out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1.0);
}

// Gelman-Rubin on already split chains; NaN when within variance is zero.
double rhat_basic(const Chains& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(var_of(c));
  }
  const double w = mean_of(vars);
  const double b_over_n = m > 1 ? var_of(means) : 0.0;
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

// Normal scores of pooled fractional ranks (average ranks for ties).
Chains rank_normalize(const Chains& chains) {
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i) pooled.emplace_back(chains[c][i], c * chains[c].size() + i);
  }
  std::sort(pooled.begin(), pooled.end());
  const double s = static_cast<double>(pooled.size());
  std::vector<double> rank(pooled.size());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1].first == pooled[i].first) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = r;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> normal;
  Chains out = chains;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i) {
      const double r = rank[c * chains[c].size() + i];
      out[c][i] = boost::math::quantile(normal, (r - 0.375) / (s + 0.25));
    }
  }
  return out;
}

Chains fold(const Chains& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2), all.end());
  const double median = all[all.size() / 2];
  Chains out = chains;
  for (auto& c : out) {
    for (double& x : c) x = std::abs(x - median);
  }
  return out;
}

double autocov(const std::vector<double>& c, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t i = 0; i + lag < c.size(); ++i) s += (c[i] - mean) * (c[i + lag] - mean);
  return s / static_cast<double>(c.size());
}

// Multi-chain ESS (Stan's algorithm) on already split chains.
double ess_split(const Chains& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> means(m), acov0(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    acov0[c] = autocov(chains[c], means[c], 0);
  }
  const double dn = static_cast<double>(n);
  double mean_var = 0.0;
  for (std::size_t c = 0; c < m; ++c) mean_var += acov0[c] * dn / (dn - 1.0);
  mean_var /= static_cast<double>(m);
  double var_plus = mean_var * (dn - 1.0) / dn;
  if (m > 1) var_plus += var_of(means);
  if (!(var_plus > 0.0)) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](std::size_t lag) {
    double acov_mean = 0.0;
    for (std::size_t c = 0; c < m; ++c) acov_mean += autocov(chains[c], means[c], lag);
    acov_mean /= static_cast<double>(m);
    return 1.0 - (mean_var - acov_mean) / var_plus;
  };

  std::vector<double> rho_hat;
  rho_hat.push_back(1.0);
  rho_hat.push_back(rho(1));
  double rho_even = rho_hat[0];
  double rho_odd = rho_hat[1];
  std::size_t t = 1;
  while (t < n - 5 && rho_even + rho_odd > 0.0) {
    rho_even = rho(t + 1);
    rho_odd = rho(t + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho_hat.push_back(rho_even);
      rho_hat.push_back(rho_odd);
    }
    t += 2;
  }
  const std::size_t max_t = rho_hat.size();
  if (max_t >= 4 && rho_even > 0.0) rho_hat[max_t - 1] = rho_even;  // improve the tail estimate
  // Initial monotone sequence on pairs.
  for (std::size_t k = 2; k + 1 < max_t; k += 2) {
    const double prev = rho_hat[k - 2] + rho_hat[k - 1];
    if (rho_hat[k] + rho_hat[k + 1] > prev) {
      rho_hat[k] = prev / 2.0;
      rho_hat[k + 1] = prev / 2.0;
    }
  }
  double tau = -1.0;
  for (std::size_t k = 0; k < max_t; ++k) tau += 2.0 * rho_hat[k];
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

}  // namespace

std::vector<ParameterDiagnostics> diagnostics(const std::vector<MatrixXd>& chain_draws) {
  if (chain_draws.size() < 2) throw std::invalid_argument("diagnostics need at least two chains");
  const Eigen::Index dim = chain_draws.front().cols();
  const Eigen::Index n = chain_draws.front().rows();
  for (const auto& c : chain_draws) {
    if (c.cols() != dim || c.rows() != n) throw std::invalid_argument("chains have inconsistent shapes");
  }
  if (n < 4) throw std::invalid_argument("diagnostics need at least four draws per chain");

  std::vector<ParameterDiagnostics> out(static_cast<std::size_t>(dim));
  for (Eigen::Index p = 0; p < dim; ++p) {
    Chains chains;
    for (const auto& c : chain_draws) {
      chains.emplace_back(c.col(p).data(), c.col(p).data() + n);
    }
    const Chains halves = split(chains);
    const double classic = rhat_basic(halves);
    auto& d = out[static_cast<std::size_t>(p)];
    if (std::isnan(classic)) {
      d.r_hat = std::numeric_limits<double>::quiet_NaN();
      d.ess = std::numeric_limits<double>::quiet_NaN();
      d.degenerate = true;
      continue;
    }
    const Chains z = rank_normalize(halves);
    const double bulk = rhat_basic(z);
    const double tail = rhat_basic(rank_normalize(fold(halves)));
    d.r_hat = std::max({classic, bulk, std::isnan(tail) ? 0.0 : tail});
    d.ess = ess_split(z);
  }
  return out;
}

std::vector<ParameterDiagnostics> diagnostics(const SampleBatch& batch) { return diagnostics(batch.chains); }

}  // namespace bpc
