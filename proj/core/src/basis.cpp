#include "bpc/basis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bpc {

// ---------------------------------------------------------------------------
// InputDistribution / InputSpace
// ---------------------------------------------------------------------------

InputDistribution InputDistribution::uniform(double lower, double upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw std::invalid_argument("uniform input requires finite lower < upper");
  }
  return {DistributionKind::UniformInterval, lower, upper};
}

InputDistribution InputDistribution::standard_gaussian() {
  return {DistributionKind::StandardGaussian, -HUGE_VAL, HUGE_VAL};
}

double InputDistribution::to_reference(double x) const {
  if (kind_ == DistributionKind::StandardGaussian) return x;
  return (2.0 * x - lower_ - upper_) / (upper_ - lower_);
}

double InputDistribution::from_reference(double t) const {
  if (kind_ == DistributionKind::StandardGaussian) return t;
  return 0.5 * (lower_ + upper_) + 0.5 * (upper_ - lower_) * t;
}

InputSpace::InputSpace(std::vector<InputDistribution> d) : dims(std::move(d)) {
  if (dims.empty()) throw std::invalid_argument("input space needs at least one dimension");
}

InputSpace InputSpace::uniform_cube(std::size_t d, double lower, double upper) {
  return InputSpace(std::vector<InputDistribution>(d, InputDistribution::uniform(lower, upper)));
}

InputSpace InputSpace::gaussian(std::size_t d) {
  return InputSpace(std::vector<InputDistribution>(d, InputDistribution::standard_gaussian()));
}

// ---------------------------------------------------------------------------
// Multi-index sets
// ---------------------------------------------------------------------------

std::string_view to_string(IndexScheme s) {
  switch (s) {
    case IndexScheme::TensorGrid: return "tensor_grid";
    case IndexScheme::TotalOrder: return "total_order";
    case IndexScheme::HyperbolicCross: return "hyperbolic_cross";
  }
  return "unknown";
}

IndexScheme index_scheme_from_string(std::string_view s) {
  if (s == "tensor_grid") return IndexScheme::TensorGrid;
  if (s == "total_order") return IndexScheme::TotalOrder;
  if (s == "hyperbolic_cross") return IndexScheme::HyperbolicCross;
  throw std::invalid_argument("unknown index scheme '" + std::string(s) + "'");
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = std::accumulate(a.begin(), a.end(), 0);
  const int db = std::accumulate(b.begin(), b.end(), 0);
  if (da != db) return da < db;
  // Lexicographically larger first: (1,0) precedes (0,1).
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

MultiIndexSet::MultiIndexSet(std::size_t dim, std::vector<MultiIndex> indices, IndexScheme scheme, int max_degree)
    : dim_(dim), indices_(std::move(indices)), scheme_(scheme), max_degree_(max_degree) {
  for (const auto& m : indices_) {
    if (m.size() != dim_) throw std::invalid_argument("multi-index has wrong dimension");
    if (std::any_of(m.begin(), m.end(), [](int c) { return c < 0; })) {
      throw std::invalid_argument("multi-index components must be non-negative");
    }
  }
  std::sort(indices_.begin(), indices_.end(), graded_lex_less);
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw std::invalid_argument("duplicate multi-index");
  }
}

std::optional<std::size_t> MultiIndexSet::position(const MultiIndex& m) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), m, graded_lex_less);
  if (it != indices_.end() && *it == m) return static_cast<std::size_t>(it - indices_.begin());
  return std::nullopt;
}

int MultiIndexSet::max_axis_degree() const {
  int out = 0;
  for (const auto& m : indices_) {
    for (int c : m) out = std::max(out, c);
  }
  return out;
}

MultiIndexSet build_index_set(IndexScheme scheme, int d, int p) {
  if (d < 1) throw std::invalid_argument("index set dimension must be >= 1");
  if (p < 0) throw std::invalid_argument("index set degree must be >= 0");

  // All three schemes are downward closed, so a partial tuple padded with
  // zeros is admissible iff some completion is; prune depth-first.
  auto admissible = [scheme, p](const MultiIndex& m, int upto) {
    switch (scheme) {
      case IndexScheme::TensorGrid: return m[upto] <= p;
      case IndexScheme::TotalOrder: {
        int s = 0;
        for (int k = 0; k <= upto; ++k) s += m[k];
        return s <= p;
      }
      case IndexScheme::HyperbolicCross: {
        long prod = 1;
        for (int k = 0; k <= upto; ++k) prod *= (m[k] + 1);
        return prod <= p + 1;
      }
    }
    return false;
  };

  std::vector<MultiIndex> out;
  MultiIndex current(static_cast<std::size_t>(d), 0);
  std::function<void(int)> recurse = [&](int k) {
    if (k == d) {
      out.push_back(current);
      return;
    }
    for (int c = 0; c <= p; ++c) {
      current[k] = c;
      if (!admissible(current, k)) break;
      recurse(k + 1);
    }
    current[k] = 0;
  };
  recurse(0);
  return MultiIndexSet(static_cast<std::size_t>(d), std::move(out), scheme, p);
}

// ---------------------------------------------------------------------------
// Univariate bases
// ---------------------------------------------------------------------------

PolynomialFamily matched_family(DistributionKind kind) {
  return kind == DistributionKind::UniformInterval ? PolynomialFamily::LegendreOrthonormal
                                                   : PolynomialFamily::HermiteOrthonormal;
}

UnivariateBasis::UnivariateBasis(PolynomialFamily family, int max_degree)
    : family_(family), max_degree_(max_degree) {
  if (max_degree < 0) throw std::invalid_argument("max degree must be >= 0");
  a_.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
  b_.assign(static_cast<std::size_t>(max_degree) + 2, 0.0);
  for (int n = 1; n <= max_degree + 1; ++n) {
    const double dn = n;
    b_[n] = family == PolynomialFamily::LegendreOrthonormal ? dn / std::sqrt(4.0 * dn * dn - 1.0) : std::sqrt(dn);
  }
}

double UnivariateBasis::eval(int degree, double t) const {
  if (degree < 0 || degree > max_degree_) {
    throw std::out_of_range("degree " + std::to_string(degree) + " beyond stored recurrence (max " +
                            std::to_string(max_degree_) + ")");
  }
  double prev = 0.0;
  double cur = 1.0;
  for (int n = 0; n < degree; ++n) {
    const double next = ((t - a_[n]) * cur - b_[n] * prev) / b_[n + 1];
    prev = cur;
    cur = next;
  }
  return cur;
}

void UnivariateBasis::eval_all(double t, std::span<double> out) const {
  if (out.empty()) return;
  if (out.size() > static_cast<std::size_t>(max_degree_) + 1) {
    throw std::out_of_range("requested degrees beyond stored recurrence");
  }
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = (t - a_[0]) / b_[1];
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    out[n + 1] = ((t - a_[n]) * out[n] - b_[n] * out[n - 1]) / b_[n + 1];
  }
}

double eval_univariate(const UnivariateBasis& basis, int degree, double x) { return basis.eval(degree, x); }

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

QuadratureRule gauss_quadrature(const InputDistribution& dist, int n_points) {
  if (n_points < 1) throw std::invalid_argument("quadrature needs n_points >= 1");
  const UnivariateBasis basis(matched_family(dist.kind()), n_points);
  MatrixXd jacobi = MatrixXd::Zero(n_points, n_points);
  for (int i = 0; i < n_points; ++i) {
    jacobi(i, i) = basis.diagonal()[i];
    if (i + 1 < n_points) {
      jacobi(i, i + 1) = basis.off_diagonal()[i + 1];
      jacobi(i + 1, i) = basis.off_diagonal()[i + 1];
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n_points);
  rule.weights.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.nodes[i] = eig.eigenvalues()(i);
    rule.weights[i] = v0 * v0;
  }
  // Symmetric weight functions: enforce exact node symmetry.
  for (int i = 0; i < n_points / 2; ++i) {
    const int j = n_points - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n_points % 2 == 1) rule.nodes[n_points / 2] = 0.0;
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  for (double& x : rule.nodes) x = dist.from_reference(x);
  return rule;
}

TensorQuadrature tensor_gauss_quadrature(const InputSpace& space, int n_points_per_dim) {
  const std::size_t d = space.dim();
  std::vector<QuadratureRule> rules;
  rules.reserve(d);
  for (const auto& dist : space.dims) rules.push_back(gauss_quadrature(dist, n_points_per_dim));

  Eigen::Index total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= n_points_per_dim;
  TensorQuadrature out{MatrixXd(total, static_cast<Eigen::Index>(d)), VectorXd(total)};
  std::vector<int> counter(d, 0);
  for (Eigen::Index row = 0; row < total; ++row) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      out.nodes(row, static_cast<Eigen::Index>(k)) = rules[k].nodes[counter[k]];
      w *= rules[k].weights[counter[k]];
    }
    out.weights(row) = w;
    for (std::size_t k = 0; k < d; ++k) {
      if (++counter[k] < n_points_per_dim) break;
      counter[k] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

PolynomialBasis::PolynomialBasis(InputSpace space, MultiIndexSet idx) : space_(std::move(space)), idx_(std::move(idx)) {
  if (space_.dim() != idx_.dim()) {
    throw std::invalid_argument("index set dimension " + std::to_string(idx_.dim()) +
                                " does not match input space dimension " + std::to_string(space_.dim()));
  }
  std::vector<int> max_deg(space_.dim(), 0);
  for (const auto& m : idx_) {
    for (std::size_t k = 0; k < m.size(); ++k) max_deg[k] = std::max(max_deg[k], m[k]);
  }
  univariate_.reserve(space_.dim());
  for (std::size_t k = 0; k < space_.dim(); ++k) {
    univariate_.emplace_back(matched_family(space_.dims[k].kind()), max_deg[k]);
  }
}

std::size_t PolynomialBasis::evaluate_into(const double* x, Eigen::Index stride, double* row, Eigen::Index row_stride,
                                           std::vector<double>& scratch) const {
  const std::size_t d = space_.dim();
  std::size_t excursions = 0;
  // scratch holds per-dimension p_0..p_maxdeg, laid out back to back.
  std::vector<std::size_t> offset(d + 1, 0);
  for (std::size_t k = 0; k < d; ++k) offset[k + 1] = offset[k] + univariate_[k].max_degree() + 1;
  scratch.resize(offset[d]);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& dist = space_.dims[k];
    double t = dist.to_reference(x[static_cast<Eigen::Index>(k) * stride]);
    if (dist.bounded() && std::abs(t) > 1.0) {
      ++excursions;
      if (std::abs(t) - 1.0 <= kSupportTolerance) t = std::copysign(1.0, t);
    }
    univariate_[k].eval_all(t, std::span<double>(scratch.data() + offset[k], offset[k + 1] - offset[k]));
  }
  for (std::size_t j = 0; j < idx_.size(); ++j) {
    const auto& m = idx_[j];
    double v = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      if (m[k] != 0) v *= scratch[offset[k] + m[k]];
    }
    row[static_cast<Eigen::Index>(j) * row_stride] = v;
  }
  return excursions;
}

VectorXd PolynomialBasis::evaluate(std::span<const double> x) const {
  if (x.size() != space_.dim()) throw std::invalid_argument("point dimension does not match input space");
  VectorXd out(static_cast<Eigen::Index>(idx_.size()));
  std::vector<double> scratch;
  evaluate_into(x.data(), 1, out.data(), 1, scratch);
  return out;
}

DesignMatrix PolynomialBasis::design_matrix(const MatrixXd& X, const std::optional<VectorXd>& weights) const {
  if (static_cast<std::size_t>(X.cols()) != space_.dim()) {
    throw std::invalid_argument("input matrix has " + std::to_string(X.cols()) + " columns, input space has " +
                                std::to_string(space_.dim()));
  }
  const Eigen::Index m = X.rows();
  DesignMatrix out;
  out.weights = weights.value_or(VectorXd::Ones(m));
  if (out.weights.size() != m) throw std::invalid_argument("weight vector length does not match row count");
  out.values.resize(m, static_cast<Eigen::Index>(idx_.size()));
  std::vector<double> scratch;
  for (Eigen::Index i = 0; i < m; ++i) {
    // Column-major storage: X row stride is X.rows(), output row stride is m.
    out.support_excursions += evaluate_into(X.data() + i, X.rows(), out.values.data() + i, m, scratch);
  }
  if (weights) out.values = out.weights.asDiagonal() * out.values;
  if (!out.values.allFinite()) throw std::invalid_argument("design matrix has non-finite entries");
  return out;
}

DesignMatrix design_matrix(const InputSpace& space, const MultiIndexSet& idx, const MatrixXd& X,
                           const std::optional<VectorXd>& weights) {
  return PolynomialBasis(space, idx).design_matrix(X, weights);
}

}  // namespace bpc
