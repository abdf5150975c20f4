#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Input distributions
// ---------------------------------------------------------------------------

enum class DistributionKind { UniformInterval, StandardGaussian };

/// Marginal density of one input. Uniform marginals carry their bounds; the
/// standard Gaussian has unbounded support.
class InputDistribution {
 public:
  static InputDistribution uniform(double lower = -1.0, double upper = 1.0);
  static InputDistribution standard_gaussian();

  DistributionKind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  bool bounded() const { return kind_ == DistributionKind::UniformInterval; }

  /// Affine map of x onto the reference support ([-1,1] for uniform, identity
  /// for Gaussian).
  double to_reference(double x) const;
  double from_reference(double t) const;

  bool operator==(const InputDistribution&) const = default;

 private:
  InputDistribution(DistributionKind kind, double lower, double upper)
      : kind_(kind), lower_(lower), upper_(upper) {}

  DistributionKind kind_;
  double lower_;
  double upper_;
};

/// Product-measure input space D = D_1 x ... x D_d.
struct InputSpace {
  std::vector<InputDistribution> dims;

  InputSpace() = default;
  explicit InputSpace(std::vector<InputDistribution> d);

  static InputSpace uniform_cube(std::size_t d, double lower = -1.0, double upper = 1.0);
  static InputSpace gaussian(std::size_t d);

  std::size_t dim() const { return dims.size(); }
  bool operator==(const InputSpace&) const = default;
};

// ---------------------------------------------------------------------------
// Multi-index sets
// ---------------------------------------------------------------------------

enum class IndexScheme { TensorGrid, TotalOrder, HyperbolicCross };

std::string_view to_string(IndexScheme s);
IndexScheme index_scheme_from_string(std::string_view s);

using MultiIndex = std::vector<int>;

/// Ordered, duplicate-free set of multi-indices. The first entry is always the
/// all-zeros index; the remainder is graded lexicographic (total degree
/// ascending, then lexicographically descending so that x_1 leads).
class MultiIndexSet {
 public:
  MultiIndexSet() = default;

  /// Wraps an explicit list. Duplicates are rejected, ordering is normalized.
  /// Unlike build_index_set, the zero index is not required (subsets of a
  /// full set may omit it).
  MultiIndexSet(std::size_t dim, std::vector<MultiIndex> indices, IndexScheme scheme, int max_degree);

  std::size_t size() const { return indices_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return indices_.empty(); }
  IndexScheme scheme() const { return scheme_; }
  int max_degree() const { return max_degree_; }

  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  /// Position of `m` in the set, if present.
  std::optional<std::size_t> position(const MultiIndex& m) const;
  bool contains(const MultiIndex& m) const { return position(m).has_value(); }

  /// Largest degree along any single axis.
  int max_axis_degree() const;

  bool operator==(const MultiIndexSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<MultiIndex> indices_;
  IndexScheme scheme_ = IndexScheme::TotalOrder;
  int max_degree_ = 0;
};

/// Graded-lexicographic comparison used for basis ordering.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

MultiIndexSet build_index_set(IndexScheme scheme, int d, int p);

// ---------------------------------------------------------------------------
// Univariate orthonormal families
// ---------------------------------------------------------------------------

enum class PolynomialFamily { LegendreOrthonormal, HermiteOrthonormal };

/// Family matched to a distribution: Legendre for uniform, Hermite for Gaussian.
PolynomialFamily matched_family(DistributionKind kind);

/// Orthonormal polynomials defined by their three-term recurrence
///
///   x p_n(x) = b_{n+1} p_{n+1}(x) + a_n p_n(x) + b_n p_{n-1}(x),  p_0 = 1,
///
/// on the reference support. Coefficients are stored up to `max_degree`.
class UnivariateBasis {
 public:
  UnivariateBasis(PolynomialFamily family, int max_degree);

  PolynomialFamily family() const { return family_; }
  int max_degree() const { return max_degree_; }

  /// a_n for n = 0..max_degree.
  const std::vector<double>& diagonal() const { return a_; }
  /// b_n for n = 0..max_degree+1 (b_0 is unused and set to 0).
  const std::vector<double>& off_diagonal() const { return b_; }

  /// p_degree(t) at a reference-space point t.
  double eval(int degree, double t) const;

  /// Writes p_0(t)..p_{out.size()-1}(t) into `out`.
  void eval_all(double t, std::span<double> out) const;

 private:
  PolynomialFamily family_;
  int max_degree_;
  std::vector<double> a_;
  std::vector<double> b_;
};

/// Evaluate the orthonormal polynomial of given degree at x. For the Legendre
/// family x lives on [-1,1]; for Hermite on the real line.
double eval_univariate(const UnivariateBasis& basis, int degree, double x);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (probability measure)
};

/// n-point Gauss rule for the density of `dist` (Golub-Welsch).
QuadratureRule gauss_quadrature(const InputDistribution& dist, int n_points);

/// Tensor product of per-dimension Gauss rules. Nodes are rows of `nodes`.
struct TensorQuadrature {
  MatrixXd nodes;
  VectorXd weights;
};
TensorQuadrature tensor_gauss_quadrature(const InputSpace& space, int n_points_per_dim);

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

struct DesignMatrix {
  MatrixXd values;   // M x N, entry (i,j) = w_i * phi_j(x_i)
  VectorXd weights;  // length M
  /// Number of input coordinates that lay outside their support. Excursions of
  /// at most kSupportTolerance are clamped; larger ones are evaluated as-is.
  std::size_t support_excursions = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

inline constexpr double kSupportTolerance = 1e-9;

/// Basis-row evaluator bound to an input space and an index set.
class PolynomialBasis {
 public:
  PolynomialBasis(InputSpace space, MultiIndexSet idx);

  const InputSpace& space() const { return space_; }
  const MultiIndexSet& index_set() const { return idx_; }
  std::size_t size() const { return idx_.size(); }
  std::size_t dim() const { return space_.dim(); }

  /// v(x): all basis functions at one point (length N).
  VectorXd evaluate(std::span<const double> x) const;

  DesignMatrix design_matrix(const MatrixXd& X, const std::optional<VectorXd>& weights = std::nullopt) const;

 private:
  // Fills `row` with v(x); returns the number of support excursions.
  std::size_t evaluate_into(const double* x, Eigen::Index stride, double* row, Eigen::Index row_stride,
                            std::vector<double>& scratch) const;

  InputSpace space_;
  MultiIndexSet idx_;
  std::vector<UnivariateBasis> univariate_;
};

DesignMatrix design_matrix(const InputSpace& space, const MultiIndexSet& idx, const MatrixXd& X,
                           const std::optional<VectorXd>& weights = std::nullopt);

}  // namespace bpc
