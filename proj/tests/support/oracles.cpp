#include "oracles.hpp"

#include <cmath>
#include <functional>

namespace bpc::oracle {

std::vector<std::vector<int>> enumerate_indices(int scheme, int d, int p) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(static_cast<std::size_t>(d), 0);
  std::function<void(int)> rec = [&](int k) {
    if (k == d) {
      int sum = 0;
      long prod = 1;
      for (int v : t) {
        sum += v;
        prod *= v + 1;
      }
      const bool keep = scheme == 0 || (scheme == 1 && sum <= p) || (scheme == 2 && prod <= p + 1);
      if (keep) out.push_back(t);
      return;
    }
    for (int v = 0; v <= p; ++v) {
      t[static_cast<std::size_t>(k)] = v;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double legendre_orthonormal(int n, double x) {
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double c = binomial(n, k);
    s += c * c * std::pow(x - 1.0, n - k) * std::pow(x + 1.0, k);
  }
  return std::sqrt(2.0 * n + 1.0) * s / std::pow(2.0, n);
}

double hermite_orthonormal(int n, double x) {
  double s = 0.0;
  for (int m = 0; 2 * m <= n; ++m) {
    s += std::pow(-1.0, m) * std::pow(x, n - 2 * m) /
         (std::tgamma(m + 1.0) * std::tgamma(n - 2.0 * m + 1.0) * std::pow(2.0, m));
  }
  return s * std::tgamma(n + 1.0) / std::sqrt(std::tgamma(n + 1.0));
}

Posterior naive_posterior(const MatrixXd& V, const VectorXd& y, const VectorXd& prior_mean, const MatrixXd& prior_cov,
                          double noise_variance) {
  const MatrixXd prior_prec = prior_cov.inverse();
  Posterior p;
  p.cov = (V.transpose() * V / noise_variance + prior_prec).inverse();
  p.mean = p.cov * (V.transpose() * y / noise_variance + prior_prec * prior_mean);
  return p;
}

VectorXd normal_equations(const MatrixXd& V, const VectorXd& y) {
  return (V.transpose() * V).inverse() * (V.transpose() * y);
}

double gaussian_logpdf(const VectorXd& y, const MatrixXd& K) {
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(K.inverse() * y) - 0.5 * std::log(K.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
}

MeanSe mean_and_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  MeanSe r;
  for (double x : xs) r.mean += x;
  r.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - r.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  r.variance = m2 * n / (n - 1.0);
  r.se = std::sqrt(r.variance / n);
  r.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return r;
}

}  // namespace bpc::oracle
