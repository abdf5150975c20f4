#include "bpc/moments.hpp"

#include "bpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bpc {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SampleSummary summarize(std::vector<double> samples, double mass) {
  if (samples.empty()) throw std::invalid_argument("cannot summarize an empty sample");
  SampleSummary s;
  const double n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(samples.begin(), samples.end());
  s.median = quantile_sorted(samples, 0.5);
  s.lower = quantile_sorted(samples, 0.5 * (1.0 - mass));
  s.upper = quantile_sorted(samples, 0.5 * (1.0 + mass));
  return s;
}

namespace {

void fill_sample_stats(MomentDistribution& out) {
  const double n = static_cast<double>(out.samples.size());
  out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : out.samples) ss += (v - out.mean) * (v - out.mean);
  out.variance = n > 1 ? ss / (n - 1.0) : 0.0;
}

void check_posterior(const CoefficientPosterior& post) {
  if (post.size() < 1) throw std::invalid_argument("empty coefficient posterior");
  if (post.covariance.rows() != post.size() || post.covariance.cols() != post.size()) {
    throw std::invalid_argument("posterior covariance does not match mean dimension");
  }
}

}  // namespace

MomentDistribution output_mean_distribution(const CoefficientPosterior& post) {
  check_posterior(post);
  MomentDistribution out;
  out.kind = MomentKind::GaussianClosedForm;
  out.mean = post.mean(0);
  out.variance = post.covariance(0, 0);
  out.analytic_mean = out.mean;
  return out;
}

MomentDistribution output_variance_distribution(const CoefficientPosterior& post, std::size_t samples,
                                                std::uint64_t seed) {
  check_posterior(post);
  if (samples < kMinMomentSamples) {
    throw std::invalid_argument("variance distribution needs at least " + std::to_string(kMinMomentSamples) +
                                " samples");
  }
  const Eigen::Index n = post.size();
  const GaussianSampler sampler(post.mean, post.covariance);
  auto rng = make_rng(seed);
  MomentDistribution out;
  out.kind = MomentKind::SampleCloud;
  out.samples.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const VectorXd a = sampler.draw(rng);
    out.samples.push_back(a.tail(n - 1).squaredNorm());
  }
  fill_sample_stats(out);
  out.analytic_mean = post.mean.tail(n - 1).squaredNorm() + post.covariance.diagonal().tail(n - 1).sum();
  return out;
}

namespace {

void check_quadratic_form(const QuadraticForm& qf) {
  check_posterior(qf.base);
  if (qf.E.rows() != qf.base.size() || qf.E.cols() != qf.base.size()) {
    throw std::invalid_argument("quadratic form matrix does not match posterior dimension");
  }
  if (!is_symmetric(qf.E, 1e-12)) throw std::invalid_argument("quadratic form matrix must be symmetric");
}

}  // namespace

std::vector<double> quadratic_form_samples(const QuadraticForm& qf, std::size_t samples, std::uint64_t seed) {
  check_quadratic_form(qf);
  const MatrixXd& e = qf.E;
  const VectorXd& mu = qf.base.mean;
  const MatrixXd l = psd_factor(qf.base.covariance);
  const MatrixXd whitened = l.transpose() * e * l;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (whitened + whitened.transpose()));
  const VectorXd& lambda = eig.eigenvalues();
  const VectorXd b = eig.eigenvectors().transpose() * (l.transpose() * (e * mu));
  const double constant = mu.dot(e * mu);

  auto rng = make_rng(seed);
  std::vector<double> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const VectorXd w = standard_normal(rng, mu.size());
    out.push_back((lambda.array() * w.array().square()).sum() + 2.0 * b.dot(w) + constant);
  }
  return out;
}

std::vector<double> quadratic_form_samples_direct(const QuadraticForm& qf, std::size_t samples, std::uint64_t seed) {
  check_quadratic_form(qf);
  const GaussianSampler sampler(qf.base.mean, qf.base.covariance);
  auto rng = make_rng(seed);
  std::vector<double> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const VectorXd a = sampler.draw(rng);
    out.push_back(a.dot(qf.E * a));
  }
  return out;
}

QuadraticFormMoments quadratic_form_moments(const QuadraticForm& qf) {
  check_quadratic_form(qf);
  const MatrixXd es = qf.E * qf.base.covariance;
  const VectorXd emu = qf.E * qf.base.mean;
  return {es.trace() + qf.base.mean.dot(emu), 2.0 * (es * es).trace() + 4.0 * emu.dot(qf.base.covariance * emu)};
}

MultiIndexSet subselect(const MultiIndexSet& idx, int degree, std::size_t dimension) {
  if (dimension >= idx.dim()) {
    throw std::out_of_range("subselect dimension " + std::to_string(dimension) + " outside 0.." +
                            std::to_string(idx.dim() - 1));
  }
  std::vector<MultiIndex> kept;
  for (const auto& m : idx) {
    if (m[dimension] == degree) kept.push_back(m);
  }
  return MultiIndexSet(idx.dim(), std::move(kept), idx.scheme(), idx.max_degree());
}

MultiIndexSet first_order_set(const MultiIndexSet& idx, std::size_t dimension) {
  std::vector<MultiIndex> kept;
  const int top = idx.max_axis_degree();
  for (int p = 1; p <= top; ++p) {
    for (const auto& m : subselect(idx, p, dimension)) {
      bool others_zero = true;
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (k != dimension && m[k] != 0) others_zero = false;
      }
      if (others_zero) kept.push_back(m);
    }
  }
  return MultiIndexSet(idx.dim(), std::move(kept), idx.scheme(), idx.max_degree());
}

MultiIndexSet total_effect_set(const MultiIndexSet& idx, std::size_t dimension) {
  if (dimension >= idx.dim()) throw std::out_of_range("total-effect dimension out of range");
  std::vector<MultiIndex> kept;
  for (const auto& m : idx) {
    if (m[dimension] > 0) kept.push_back(m);
  }
  return MultiIndexSet(idx.dim(), std::move(kept), idx.scheme(), idx.max_degree());
}

namespace {

std::vector<Eigen::Index> numerator_positions(const MultiIndexSet& idx, const MultiIndexSet& subsel) {
  std::vector<Eigen::Index> pos;
  for (const auto& m : subsel) {
    const auto p = idx.position(m);
    if (!p) throw std::invalid_argument("subselected index is not part of the full index set");
    if (*p != 0) pos.push_back(static_cast<Eigen::Index>(*p));
  }
  return pos;
}

double ratio(const VectorXd& alpha, const std::vector<Eigen::Index>& pos) {
  const double denom = alpha.tail(alpha.size() - 1).squaredNorm();
  if (!(denom > 0.0)) throw NumericalError("Sobol denominator is zero (no non-constant variance)");
  double num = 0.0;
  for (auto p : pos) num += alpha(p) * alpha(p);
  return num / denom;
}

}  // namespace

double sobol_ratio(const VectorXd& alpha, const MultiIndexSet& idx, const MultiIndexSet& subsel) {
  if (static_cast<std::size_t>(alpha.size()) != idx.size()) {
    throw std::invalid_argument("coefficient vector does not match index set");
  }
  return ratio(alpha, numerator_positions(idx, subsel));
}

std::vector<double> sobol_ratio_samples(const CoefficientPosterior& post, const MultiIndexSet& idx,
                                        const MultiIndexSet& subsel, std::size_t samples, std::uint64_t seed) {
  check_posterior(post);
  if (static_cast<std::size_t>(post.size()) != idx.size()) {
    throw std::invalid_argument("posterior dimension does not match index set");
  }
  const auto pos = numerator_positions(idx, subsel);
  const GaussianSampler sampler(post.mean, post.covariance);
  auto rng = make_rng(seed);
  std::vector<double> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) out.push_back(ratio(sampler.draw(rng), pos));
  return out;
}

MomentDistribution output_variance_from_draws(const MatrixXd& coefficient_draws) {
  if (coefficient_draws.rows() < 2 || coefficient_draws.cols() < 1)
    throw std::invalid_argument("variance cloud needs at least two coefficient draws");
  const Eigen::Index n = coefficient_draws.cols();
  MomentDistribution out;
  out.kind = MomentKind::SampleCloud;
  for (Eigen::Index s = 0; s < coefficient_draws.rows(); ++s)
    out.samples.push_back(coefficient_draws.row(s).tail(n - 1).squaredNorm());
  fill_sample_stats(out);
  return out;
}

std::vector<double> sobol_ratio_from_draws(const MatrixXd& coefficient_draws, const MultiIndexSet& idx,
                                           const MultiIndexSet& subsel) {
  if (static_cast<std::size_t>(coefficient_draws.cols()) != idx.size())
    throw std::invalid_argument("coefficient draws do not match index set");
  const auto pos = numerator_positions(idx, subsel);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(coefficient_draws.rows()));
  for (Eigen::Index s = 0; s < coefficient_draws.rows(); ++s) out.push_back(ratio(coefficient_draws.row(s).transpose(), pos));
  return out;
}

}  // namespace bpc
