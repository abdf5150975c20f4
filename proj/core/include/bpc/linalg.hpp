#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace bpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Jitter ladder shared by every factorization: none, then 1e-12 .. 1e-8.
inline constexpr double kJitterLadder[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};

/// Cholesky factor with the jitter that was needed to obtain it.
struct JitteredCholesky {
  Eigen::LLT<MatrixXd> llt;
  double jitter = 0.0;

  VectorXd solve(const VectorXd& b) const { return llt.solve(b); }
  MatrixXd solve(const MatrixXd& b) const { return llt.solve(b); }
  MatrixXd lower() const { return llt.matrixL(); }
  double log_det() const;
};

/// Factorizes a symmetric matrix, adding diagonal jitter along kJitterLadder
/// until LLT succeeds. Throws NumericalError naming `what` on failure.
JitteredCholesky robust_cholesky(const MatrixXd& a, std::string_view what = "matrix");

bool is_symmetric(const MatrixXd& a, double tol = 1e-10);

/// Symmetric square root factor L with L L^T = a, for PSD `a`. Uses Cholesky
/// when it succeeds without jitter, otherwise an eigendecomposition with
/// negative eigenvalues clamped to zero (exact for singular covariances).
MatrixXd psd_factor(const MatrixXd& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& a);

using Rng = std::mt19937_64;

/// Deterministic generator for stream `stream` under master seed `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

VectorXd standard_normal(Rng& rng, Eigen::Index n);

/// Draws from N(mean, L L^T) given a precomputed factor.
class GaussianSampler {
 public:
  GaussianSampler(VectorXd mean, const MatrixXd& covariance);

  VectorXd draw(Rng& rng) const;
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& factor() const { return factor_; }

 private:
  VectorXd mean_;
  MatrixXd factor_;
};

}  // namespace bpc
