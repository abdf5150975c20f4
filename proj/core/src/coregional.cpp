#include "bpc/coregional.hpp"

#include "bpc/errors.hpp"
#include "bpc/linalg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bpc {

MatrixXd CoregionalModel::B() const {
  MatrixXd b = W * W.transpose();
  b.diagonal() += kappa;
  return b;
}

void CoregionalModel::validate() const {
  if (!basis) throw std::invalid_argument("coregional model has no basis");
  if (A.rows() != static_cast<Eigen::Index>(basis->size()))
    throw std::invalid_argument("coregional A must have one row per basis function");
  if (A.cols() < 1) throw std::invalid_argument("coregional model needs at least one output");
  if (W.size() != A.cols() || kappa.size() != A.cols())
    throw std::invalid_argument("coregional W and kappa must have one entry per output");
  if ((kappa.array() <= 0.0).any()) throw std::invalid_argument("coregional kappa must be positive");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
}

Eigen::Index StackedDataset::total_rows() const {
  Eigen::Index n = 0;
  for (const auto& x : X) n += x.rows();
  return n;
}

VectorXd StackedDataset::stacked_y() const {
  VectorXd out(total_rows());
  Eigen::Index off = 0;
  for (const auto& v : y) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

void StackedDataset::validate(std::size_t dim) const {
  if (X.empty() || X.size() != y.size()) throw std::invalid_argument("stacked dataset needs matching X and y lists");
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].rows() != y[i].size())
      throw std::invalid_argument("output " + std::to_string(i) + ": X rows do not match y length");
    if (X[i].rows() > 0 && X[i].cols() != static_cast<Eigen::Index>(dim))
      throw std::invalid_argument("output " + std::to_string(i) + ": wrong input dimension");
  }
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Stacked {
  std::vector<MatrixXd> V;
  std::vector<Eigen::Index> offset;
  VectorXd y;
  Eigen::Index n = 0;
};

Stacked stack(const PolynomialBasis& basis, const StackedDataset& data) {
  data.validate(basis.dim());
  Stacked s;
  for (const auto& x : data.X) {
    s.offset.push_back(s.n);
    s.V.push_back(basis.design_matrix(x).values);
    s.n += x.rows();
  }
  s.y = data.stacked_y();
  return s;
}

MatrixXd training_covariance(const Stacked& s, const MatrixXd& abs_a, const MatrixXd& b) {
  const auto o = abs_a.cols();
  std::vector<MatrixXd> phi(static_cast<std::size_t>(o));
  for (Eigen::Index i = 0; i < o; ++i) phi[i] = s.V[i] * abs_a.col(i).asDiagonal();
  MatrixXd k(s.n, s.n);
  for (Eigen::Index i = 0; i < o; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto mi = s.V[i].rows();
      const auto mj = s.V[j].rows();
      k.block(s.offset[i], s.offset[j], mi, mj).noalias() = b(i, j) * phi[i] * phi[j].transpose();
      if (j < i) k.block(s.offset[j], s.offset[i], mj, mi) = k.block(s.offset[i], s.offset[j], mi, mj).transpose();
    }
  }
  return k;
}

CoregionalLogDensity evaluate(const Stacked& s, const MatrixXd& A, const VectorXd& W, const VectorXd& kappa,
                              double noise_variance) {
  const Eigen::Index o = A.cols();
  const Eigen::Index nb = A.rows();
  MatrixXd b = W * W.transpose();
  b.diagonal() += kappa;
  const MatrixXd abs_a = A.cwiseAbs();

  MatrixXd k = training_covariance(s, abs_a, b);
  k.diagonal().array() += noise_variance;
  const auto chol = robust_cholesky(k, "coregional covariance");
  const VectorXd beta = chol.solve(s.y);

  CoregionalLogDensity out;
  out.log_likelihood = -0.5 * s.y.dot(beta) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(s.n) * kLog2Pi;

  // dL = tr(G dK) with G = (beta beta^T - K^-1) / 2.
  MatrixXd g = chol.llt.solve(MatrixXd::Identity(s.n, s.n));
  g = 0.5 * (beta * beta.transpose() - g);

  MatrixXd t(o, o);
  MatrixXd grad_a = MatrixXd::Zero(nb, o);
  for (Eigen::Index j = 0; j < o; ++j) {
    const MatrixXd p = g.middleCols(s.offset[j], s.V[j].rows()) * s.V[j];
    for (Eigen::Index i = 0; i < o; ++i) {
      // h[k] = V_i[:,k]^T G_ij V_j[:,k]
      const Eigen::RowVectorXd h = s.V[i].cwiseProduct(p.middleRows(s.offset[i], s.V[i].rows())).colwise().sum();
      t(i, j) = (h.array() * abs_a.col(i).transpose().array() * abs_a.col(j).transpose().array()).sum();
      grad_a.col(i).array() += 2.0 * b(i, j) * h.transpose().array() * abs_a.col(j).array();
    }
  }
  grad_a.array() *= A.array().sign();

  const double n_params = static_cast<double>(A.size() + W.size());
  const double log_prior = -0.5 * A.squaredNorm() - 0.5 * W.squaredNorm() - 0.5 * n_params * kLog2Pi +
                           static_cast<double>(o) * 0.5 * std::log(2.0 / std::numbers::pi) -
                           0.5 * kappa.squaredNorm();
  out.value = out.log_likelihood + log_prior;

  out.gradient.resize(A.size() + 2 * o);
  out.gradient.head(A.size()) = (grad_a - A).reshaped();
  out.gradient.segment(A.size(), o) = 2.0 * t * W - W;
  out.gradient.tail(o) = t.diagonal() - kappa;
  return out;
}

}  // namespace

MatrixXd cross_covariance(const CoregionalModel& model, Eigen::Index i, Eigen::Index j, const MatrixXd& Xi,
                          const MatrixXd& Xj, bool training_block) {
  model.validate();
  if (i < 0 || j < 0 || i >= model.n_outputs() || j >= model.n_outputs())
    throw std::out_of_range("coregional output index out of range");
  const MatrixXd vi = model.basis->design_matrix(Xi).values;
  const MatrixXd vj = model.basis->design_matrix(Xj).values;
  const VectorXd d = model.A.col(i).cwiseAbs().cwiseProduct(model.A.col(j).cwiseAbs());
  MatrixXd k = model.B()(i, j) * vi * d.asDiagonal() * vj.transpose();
  if (training_block && i == j) {
    if (Xi.rows() != Xj.rows()) throw std::invalid_argument("training block needs identical input sets");
    k.diagonal().array() += model.noise_variance;
  }
  return k;
}

MatrixXd block_covariance(const CoregionalModel& model, const StackedDataset& data) {
  model.validate();
  if (data.n_outputs() != static_cast<std::size_t>(model.n_outputs()))
    throw std::invalid_argument("dataset and model disagree on the number of outputs");
  const Stacked s = stack(*model.basis, data);
  return training_covariance(s, model.A.cwiseAbs(), model.B());
}

VectorXd pack_coregional(const CoregionalModel& model) {
  const Eigen::Index o = model.n_outputs();
  VectorXd theta(model.A.size() + 2 * o);
  theta << model.A.reshaped(), model.W, model.kappa;
  return theta;
}

CoregionalModel unpack_coregional(const VectorXd& theta, const std::shared_ptr<const PolynomialBasis>& basis,
                                  Eigen::Index n_outputs, double noise_variance) {
  if (!basis) throw std::invalid_argument("coregional model has no basis");
  const auto nb = static_cast<Eigen::Index>(basis->size());
  if (theta.size() != (nb + 2) * n_outputs) throw std::invalid_argument("bad packed coregional parameters");
  CoregionalModel m;
  m.basis = basis;
  m.A = theta.head(nb * n_outputs).reshaped(nb, n_outputs);
  m.W = theta.segment(nb * n_outputs, n_outputs);
  m.kappa = theta.tail(n_outputs);
  m.noise_variance = noise_variance;
  return m;
}

CoregionalLogDensity coregional_logdensity(const CoregionalModel& params, const StackedDataset& data) {
  params.validate();
  if (data.n_outputs() != static_cast<std::size_t>(params.n_outputs()))
    throw std::invalid_argument("dataset and model disagree on the number of outputs");
  const Stacked s = stack(*params.basis, data);
  return evaluate(s, params.A, params.W, params.kappa, params.noise_variance);
}

LogDensityModel coregional_sampling_model(std::shared_ptr<const PolynomialBasis> basis, const StackedDataset& data,
                                          double noise_variance) {
  if (!basis) throw std::invalid_argument("coregional model has no basis");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  auto s = std::make_shared<const Stacked>(stack(*basis, data));
  const auto o = static_cast<Eigen::Index>(data.n_outputs());
  const auto nb = static_cast<Eigen::Index>(basis->size());

  LogDensityModel model;
  model.dim = (nb + 2) * o;
  model.transforms.assign(static_cast<std::size_t>(model.dim), Transform::Log);
  for (Eigen::Index i = 1; i < o; ++i) model.transforms[static_cast<std::size_t>(nb * o + i)] = Transform::Identity;
  for (Eigen::Index i = 0; i < o; ++i) {
    for (Eigen::Index k = 0; k < nb; ++k) model.names.push_back("A[" + std::to_string(k) + "," + std::to_string(i) + "]");
  }
  for (Eigen::Index i = 0; i < o; ++i) model.names.push_back("W[" + std::to_string(i) + "]");
  for (Eigen::Index i = 0; i < o; ++i) model.names.push_back("kappa[" + std::to_string(i) + "]");

  model.value_and_gradient = [s, o, nb, noise_variance](const VectorXd& theta, VectorXd& grad) {
    const MatrixXd a = theta.head(nb * o).reshaped(nb, o);
    const auto r = evaluate(*s, a, theta.segment(nb * o, o), theta.tail(o), noise_variance);
    grad = r.gradient;
    return r.value;
  };
  return model;
}

CoregionalPrediction predict_conditional(const CoregionalModel& model, const StackedDataset& train,
                                         const std::vector<MatrixXd>& x_star) {
  model.validate();
  const Eigen::Index o = model.n_outputs();
  if (train.n_outputs() != static_cast<std::size_t>(o) || x_star.size() != static_cast<std::size_t>(o))
    throw std::invalid_argument("dataset and model disagree on the number of outputs");
  const Stacked s = stack(*model.basis, train);
  const MatrixXd abs_a = model.A.cwiseAbs();
  const MatrixXd b = model.B();

  MatrixXd k = training_covariance(s, abs_a, b);
  k.diagonal().array() += model.noise_variance;
  const auto chol = robust_cholesky(k, "coregional covariance");
  const VectorXd beta = chol.solve(s.y);

  CoregionalPrediction out;
  out.coefficient_mean = MatrixXd::Zero(model.n_coefficients(), o);
  for (Eigen::Index i = 0; i < o; ++i) {
    const MatrixXd vs = model.basis->design_matrix(x_star[i]).values;
    MatrixXd k_star(vs.rows(), s.n);
    for (Eigen::Index j = 0; j < o; ++j) {
      const VectorXd d = abs_a.col(i).cwiseProduct(abs_a.col(j));
      out.coefficient_mean.col(i) += b(i, j) * d.cwiseProduct(s.V[j].transpose() * beta.segment(s.offset[j], s.V[j].rows()));
      k_star.middleCols(s.offset[j], s.V[j].rows()).noalias() = b(i, j) * vs * d.asDiagonal() * s.V[j].transpose();
    }
    const MatrixXd half = chol.llt.matrixL().solve(k_star.transpose());
    PredictiveDistribution p;
    p.mean = vs * out.coefficient_mean.col(i);
    p.covariance = b(i, i) * vs * abs_a.col(i).array().square().matrix().asDiagonal() * vs.transpose();
    p.covariance.noalias() -= half.transpose() * half;
    out.outputs.push_back(std::move(p));
  }
  return out;
}

PredictiveDistribution mixture_moments(const std::vector<PredictiveDistribution>& components) {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  const Eigen::Index q = components.front().size();
  const double n = static_cast<double>(components.size());
  PredictiveDistribution out;
  out.mean = VectorXd::Zero(q);
  out.covariance = MatrixXd::Zero(q, q);
  for (const auto& c : components) {
    if (c.size() != q) throw std::invalid_argument("mixture components differ in size");
    out.mean += c.mean;
  }
  out.mean /= n;
  for (const auto& c : components) {
    const VectorXd d = c.mean - out.mean;
    out.covariance += c.covariance + d * d.transpose();
  }
  out.covariance /= n;
  return out;
}

CoregionalPrediction predict(const std::vector<CoregionalModel>& draws, const StackedDataset& train,
                             const std::vector<MatrixXd>& x_star) {
  if (draws.size() < kMinMixtureDraws)
    throw std::invalid_argument("mixture prediction needs at least " + std::to_string(kMinMixtureDraws) +
                                " hyperparameter draws");
  const auto o = static_cast<std::size_t>(draws.front().n_outputs());
  std::vector<std::vector<PredictiveDistribution>> per_output(o);
  CoregionalPrediction out;
  out.coefficient_mean = MatrixXd::Zero(draws.front().n_coefficients(), draws.front().n_outputs());
  for (const auto& d : draws) {
    auto p = predict_conditional(d, train, x_star);
    for (std::size_t i = 0; i < o; ++i) per_output[i].push_back(std::move(p.outputs[i]));
    out.coefficient_mean += p.coefficient_mean;
  }
  out.coefficient_mean /= static_cast<double>(draws.size());
  for (auto& comps : per_output) out.outputs.push_back(mixture_moments(comps));
  return out;
}

std::vector<CoregionalModel> CoregionalFit::mixture_draws(std::size_t count, std::size_t window) const {
  if (count == 0) throw std::invalid_argument("mixture needs at least one draw");
  const auto per_chain = static_cast<std::size_t>(batch.draws_per_chain());
  const std::size_t keep = std::min(window, per_chain);
  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < batch.n_chains(); ++c) {
    for (std::size_t i = per_chain - keep; i < per_chain; ++i) pool.push_back(c * per_chain + i);
  }
  if (pool.size() < count) throw std::invalid_argument("not enough posterior draws for the requested mixture size");
  std::vector<CoregionalModel> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(draws[pool[k * pool.size() / count]]);
  return out;
}

CoregionalFit fit_coregional(std::shared_ptr<const PolynomialBasis> basis, const StackedDataset& data,
                             double noise_variance, const ChainConfig& chain_cfg) {
  const auto model = coregional_sampling_model(basis, data, noise_variance);
  const auto o = static_cast<Eigen::Index>(data.n_outputs());
  CoregionalFit fit;
  fit.batch = sample(model, chain_cfg);
  const MatrixXd pooled = fit.batch.pooled();
  fit.B_mean = MatrixXd::Zero(o, o);
  MatrixXd second = MatrixXd::Zero(o, o);
  for (Eigen::Index s = 0; s < pooled.rows(); ++s) {
    fit.draws.push_back(unpack_coregional(pooled.row(s).transpose(), basis, o, noise_variance));
    const MatrixXd b = fit.draws.back().B();
    fit.B_mean += b;
    second += b.cwiseProduct(b);
  }
  const double n = static_cast<double>(pooled.rows());
  fit.B_mean /= n;
  fit.B_sd = (second / n - fit.B_mean.cwiseProduct(fit.B_mean)).cwiseMax(0.0).cwiseSqrt();
  return fit;
}

std::vector<PredictiveDistribution> predict_independent(const PolynomialBasis& basis, const StackedDataset& train,
                                                        const std::vector<MatrixXd>& x_star, double prior_variance,
                                                        double noise_variance) {
  train.validate(basis.dim());
  if (x_star.size() != train.n_outputs()) throw std::invalid_argument("one test set per output is required");
  const auto nb = static_cast<Eigen::Index>(basis.size());
  std::vector<PredictiveDistribution> out;
  for (std::size_t i = 0; i < train.n_outputs(); ++i) {
    const auto post = conjugate_posterior(basis.design_matrix(train.X[i]), train.y[i],
                                          GaussianPrior::isotropic(nb, prior_variance), NoiseSpec(noise_variance));
    out.push_back(predictive(post, basis, x_star[i]));
  }
  return out;
}

}  // namespace bpc
