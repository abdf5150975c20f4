#include "bpc/sparse_prior.hpp"

#include "bpc/moments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bpc {

void HorseshoeConfig::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("horseshoe nu must be positive");
  if (!(s > 0.0)) throw std::invalid_argument("horseshoe s must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("horseshoe beta must lie in (0,1)");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  if (M < 1) throw std::invalid_argument("training count M must be >= 1");
}

double tau(const HorseshoeConfig& cfg) {
  cfg.validate();
  return cfg.beta * std::sqrt(cfg.noise_variance) / ((1.0 - cfg.beta) * std::sqrt(static_cast<double>(cfg.M)));
}

VectorXd HorseshoeState::pack() const {
  const Eigen::Index n = alpha.size();
  VectorXd theta(2 * n + 2);
  theta << alpha, lambda_tilde, tau_tilde, c2;
  return theta;
}

HorseshoeState HorseshoeState::unpack(const VectorXd& theta) {
  if (theta.size() < 4 || theta.size() % 2 != 0) throw std::invalid_argument("bad packed horseshoe state");
  const Eigen::Index n = (theta.size() - 2) / 2;
  HorseshoeState s;
  s.alpha = theta.head(n);
  s.lambda_tilde = theta.segment(n, n);
  s.tau_tilde = theta(2 * n);
  s.c2 = theta(2 * n + 1);
  return s;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double half_cauchy_logpdf(double x) { return std::log(2.0 / std::numbers::pi) - std::log1p(x * x); }
double half_cauchy_dlogpdf(double x) { return -2.0 * x / (1.0 + x * x); }

double inv_gamma_logpdf(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}
double inv_gamma_dlogpdf(double x, double a, double b) { return -(a + 1.0) / x + b / (x * x); }

struct Likelihood {
  double value;
  VectorXd grad_alpha;
};

Likelihood gaussian_likelihood(const DesignMatrix& V, const VectorXd& y, const VectorXd& alpha, double noise_variance) {
  const VectorXd r = y - V.values * alpha;
  const double m = static_cast<double>(y.size());
  return {-0.5 * m * (kLog2Pi + std::log(noise_variance)) - 0.5 * r.squaredNorm() / noise_variance,
          V.values.transpose() * r / noise_variance};
}

void check_data(const DesignMatrix& V, const VectorXd& y) {
  if (V.rows() != y.size()) throw std::invalid_argument("design matrix rows do not match outputs");
  if (V.cols() < 1) throw std::invalid_argument("design matrix has no columns");
}

// Prior precision 1 / (tau lambda_i)^2 = 1/(tau^2 lambda~_i^2) + 1/c^2.
VectorXd precisions(const VectorXd& lambda_tilde, double tau_eff, double c2) {
  return (1.0 / (tau_eff * tau_eff * lambda_tilde.array().square()) + 1.0 / c2).matrix();
}

}  // namespace

VectorXd regularized_local_scales(const HorseshoeState& state, const HorseshoeConfig& cfg) {
  const double t = tau(cfg) * state.tau_tilde;
  const double c = std::sqrt(state.c2);
  const auto lt = state.lambda_tilde.array();
  return (c * lt / (state.c2 + t * t * lt.square()).sqrt()).matrix();
}

LogDensityValue horseshoe_logdensity(const HorseshoeState& state, const HorseshoeConfig& cfg, const DesignMatrix& V,
                                     const VectorXd& y) {
  check_data(V, y);
  const Eigen::Index n = state.alpha.size();
  if (state.lambda_tilde.size() != n || V.cols() != n) throw std::invalid_argument("horseshoe state dimension mismatch");
  if (!(state.tau_tilde > 0.0) || !(state.c2 > 0.0) || !(state.lambda_tilde.array() > 0.0).all()) {
    throw std::domain_error("horseshoe latent scales must be positive");
  }
  const double tau0 = tau(cfg);
  const double t = tau0 * state.tau_tilde;
  const double a = 0.5 * cfg.nu;
  const double b = 0.5 * cfg.nu * cfg.s * cfg.s;

  LogDensityValue out;
  out.gradient = VectorXd::Zero(2 * n + 2);
  auto g_alpha = out.gradient.head(n);
  auto g_lambda = out.gradient.segment(n, n);
  double& g_tau = out.gradient(2 * n);
  double& g_c2 = out.gradient(2 * n + 1);

  double lp = half_cauchy_logpdf(state.tau_tilde) + inv_gamma_logpdf(state.c2, a, b);
  g_tau = half_cauchy_dlogpdf(state.tau_tilde);
  g_c2 = inv_gamma_dlogpdf(state.c2, a, b);

  const VectorXd p = precisions(state.lambda_tilde, t, state.c2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lt = state.lambda_tilde(i);
    const double al = state.alpha(i);
    lp += half_cauchy_logpdf(lt) - 0.5 * kLog2Pi + 0.5 * std::log(p(i)) - 0.5 * al * al * p(i);
    g_lambda(i) = half_cauchy_dlogpdf(lt);
    g_alpha(i) = -al * p(i);
    const double dp = 0.5 / p(i) - 0.5 * al * al;  // d/dP_i
    g_lambda(i) += dp * (-2.0 / (t * t * lt * lt * lt));
    g_tau += dp * (-2.0 / (tau0 * tau0 * state.tau_tilde * state.tau_tilde * state.tau_tilde * lt * lt));
    g_c2 += dp * (-1.0 / (state.c2 * state.c2));
  }
  const auto like = gaussian_likelihood(V, y, state.alpha, cfg.noise_variance);
  lp += like.value;
  g_alpha += like.grad_alpha;
  out.value = lp;
  return out;
}

namespace {

std::vector<std::string> horseshoe_names(Eigen::Index n, const char* first) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(std::string(first) + "[" + std::to_string(i) + "]");
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("lambda_tilde[" + std::to_string(i) + "]");
  names.emplace_back("tau_tilde");
  names.emplace_back("c2");
  return names;
}

std::vector<Transform> horseshoe_transforms(Eigen::Index n) {
  std::vector<Transform> t(static_cast<std::size_t>(2 * n + 2), Transform::Log);
  for (Eigen::Index i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = Transform::Identity;
  return t;
}

}  // namespace

LogDensityModel horseshoe_model(const HorseshoeConfig& cfg, const DesignMatrix& V, const VectorXd& y) {
  cfg.validate();
  check_data(V, y);
  const Eigen::Index n = V.cols();
  LogDensityModel model;
  model.dim = 2 * n + 2;
  model.transforms = horseshoe_transforms(n);
  model.names = horseshoe_names(n, "alpha");
  model.value_and_gradient = [cfg, V, y](const VectorXd& theta, VectorXd& grad) {
    auto r = horseshoe_logdensity(HorseshoeState::unpack(theta), cfg, V, y);
    grad = std::move(r.gradient);
    return r.value;
  };
  return model;
}

VectorXd noncentered_coefficients(const VectorXd& theta, const HorseshoeConfig& cfg) {
  const auto st = HorseshoeState::unpack(theta);  // alpha slot holds z
  const VectorXd p = precisions(st.lambda_tilde, tau(cfg) * st.tau_tilde, st.c2);
  return (st.alpha.array() / p.array().sqrt()).matrix();
}

LogDensityModel horseshoe_noncentered_model(const HorseshoeConfig& cfg, const DesignMatrix& V, const VectorXd& y) {
  cfg.validate();
  check_data(V, y);
  const Eigen::Index n = V.cols();
  const double tau0 = tau(cfg);
  const double a = 0.5 * cfg.nu;
  const double b = 0.5 * cfg.nu * cfg.s * cfg.s;
  LogDensityModel model;
  model.dim = 2 * n + 2;
  model.transforms = horseshoe_transforms(n);
  model.names = horseshoe_names(n, "z");
  model.value_and_gradient = [=](const VectorXd& theta, VectorXd& grad) {
    const auto z = theta.head(n);
    const auto lt = theta.segment(n, n);
    const double tt = theta(2 * n);
    const double c2 = theta(2 * n + 1);
    const double t = tau0 * tt;
    const VectorXd p = precisions(lt, t, c2);
    const VectorXd scale = p.array().rsqrt();
    const VectorXd alpha = (z.array() * scale.array()).matrix();
    const auto like = gaussian_likelihood(V, y, alpha, cfg.noise_variance);

    grad.resize(2 * n + 2);
    double lp = -0.5 * z.squaredNorm() + half_cauchy_logpdf(tt) + inv_gamma_logpdf(c2, a, b) + like.value;
    grad.head(n) = -z + (like.grad_alpha.array() * scale.array()).matrix();
    double g_tau = half_cauchy_dlogpdf(tt);
    double g_c2 = inv_gamma_dlogpdf(c2, a, b);
    for (Eigen::Index i = 0; i < n; ++i) {
      lp += half_cauchy_logpdf(lt(i));
      // d loglik / dP_i through alpha_i = z_i P_i^{-1/2}.
      const double r = like.grad_alpha(i) * z(i) * (-0.5) * scale(i) / p(i);
      grad(n + i) = half_cauchy_dlogpdf(lt(i)) + r * (-2.0 / (t * t * lt(i) * lt(i) * lt(i)));
      g_tau += r * (-2.0 / (tau0 * tau0 * tt * tt * tt * lt(i) * lt(i)));
      g_c2 += r * (-1.0 / (c2 * c2));
    }
    grad(2 * n) = g_tau;
    grad(2 * n + 1) = g_c2;
    return lp;
  };
  return model;
}

LogDensityModel hierarchical_gaussian_model(const DesignMatrix& V, const VectorXd& y, double noise_variance) {
  check_data(V, y);
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  const Eigen::Index n = V.cols();
  LogDensityModel model;
  model.dim = n + 1;
  model.transforms.assign(static_cast<std::size_t>(n + 1), Transform::Identity);
  model.transforms.back() = Transform::Log;
  for (Eigen::Index i = 0; i < n; ++i) model.names.push_back("z[" + std::to_string(i) + "]");
  model.names.emplace_back("prior_variance");
  model.value_and_gradient = [=](const VectorXd& theta, VectorXd& grad) {
    const auto z = theta.head(n);
    const double s = theta(n);
    const double root = std::sqrt(s);
    const auto like = gaussian_likelihood(V, y, root * z, noise_variance);
    grad.resize(n + 1);
    grad.head(n) = -z + root * like.grad_alpha;
    grad(n) = -s + like.grad_alpha.dot(z) / (2.0 * root);
    return -0.5 * z.squaredNorm() - 0.5 * s * s + like.value;
  };
  return model;
}

CoefficientPosterior SparseFit::moment_matched() const {
  CoefficientPosterior post;
  post.mean = coefficient_draws.colwise().mean().transpose();
  const MatrixXd centred = coefficient_draws.rowwise() - post.mean.transpose();
  post.covariance = centred.transpose() * centred / std::max<double>(1.0, coefficient_draws.rows() - 1.0);
  return post;
}

namespace {

void summarize_coefficients(SparseFit& fit) {
  const Eigen::Index n = fit.coefficient_draws.cols();
  fit.mean = fit.coefficient_draws.colwise().mean().transpose();
  fit.lower.resize(n);
  fit.upper.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto col = fit.coefficient_draws.col(j);
    const auto s = summarize(std::vector<double>(col.data(), col.data() + col.size()), 0.9);
    fit.lower(j) = s.lower;
    fit.upper(j) = s.upper;
  }
}

}  // namespace

SparseFit fit_sparse(const DesignMatrix& V, const VectorXd& y, const HorseshoeConfig& cfg,
                     const ChainConfig& chain_cfg) {
  SparseFit fit;
  fit.kind = SparsePriorKind::RegularizedHorseshoe;
  fit.config = cfg;
  fit.tau0 = tau(cfg);
  const auto model = horseshoe_noncentered_model(cfg, V, y);
  fit.batch = sample(model, chain_cfg);

  const MatrixXd pooled = fit.batch.pooled();
  const Eigen::Index n = V.cols();
  fit.coefficient_draws.resize(pooled.rows(), n);
  fit.shrinkage = VectorXd::Zero(n);
  const double m_over_var = static_cast<double>(cfg.M) / cfg.noise_variance;
  for (Eigen::Index s = 0; s < pooled.rows(); ++s) {
    const VectorXd theta = pooled.row(s).transpose();
    fit.coefficient_draws.row(s) = noncentered_coefficients(theta, cfg).transpose();
    const VectorXd p = precisions(theta.segment(n, n), fit.tau0 * theta(2 * n), theta(2 * n + 1));
    fit.shrinkage += (1.0 / (1.0 + m_over_var / p.array())).matrix();
  }
  fit.shrinkage /= static_cast<double>(pooled.rows());
  summarize_coefficients(fit);
  return fit;
}

SparseFit fit_hierarchical_gaussian(const DesignMatrix& V, const VectorXd& y, double noise_variance,
                                    const ChainConfig& chain_cfg) {
  SparseFit fit;
  fit.kind = SparsePriorKind::HierarchicalGaussian;
  fit.config.noise_variance = noise_variance;
  fit.config.M = static_cast<std::size_t>(y.size());
  const auto model = hierarchical_gaussian_model(V, y, noise_variance);
  fit.batch = sample(model, chain_cfg);
  const MatrixXd pooled = fit.batch.pooled();
  const Eigen::Index n = V.cols();
  fit.coefficient_draws.resize(pooled.rows(), n);
  for (Eigen::Index s = 0; s < pooled.rows(); ++s) {
    fit.coefficient_draws.row(s) = std::sqrt(pooled(s, n)) * pooled.row(s).head(n);
  }
  summarize_coefficients(fit);
  return fit;
}

}  // namespace bpc
