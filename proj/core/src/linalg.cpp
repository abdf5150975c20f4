#include "bpc/linalg.hpp"

#include "bpc/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpc {

double JitteredCholesky::log_det() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

JitteredCholesky robust_cholesky(const MatrixXd& a, std::string_view what) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(what) + " is not square");
  if (!a.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
  JitteredCholesky out;
  MatrixXd work = a;
  double applied = 0.0;
  for (double jitter : kJitterLadder) {
    work.diagonal().array() += jitter - applied;
    applied = jitter;
    out.llt.compute(work);
    if (out.llt.info() == Eigen::Success && out.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError(std::string(what) + " is not positive definite after jitter 1e-8");
}

bool is_symmetric(const MatrixXd& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

MatrixXd psd_factor(const MatrixXd& a) {
  if (a.rows() == 0) return a;
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0) {
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (a + a.transpose()));
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

double min_eigenvalue(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

VectorXd standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

GaussianSampler::GaussianSampler(VectorXd mean, const MatrixXd& covariance)
    : mean_(std::move(mean)), factor_(psd_factor(covariance)) {
  if (covariance.rows() != mean_.size() || covariance.cols() != mean_.size()) {
    throw std::invalid_argument("covariance dimension does not match mean");
  }
}

VectorXd GaussianSampler::draw(Rng& rng) const { return mean_ + factor_ * standard_normal(rng, mean_.size()); }

}  // namespace bpc
