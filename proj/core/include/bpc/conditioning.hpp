#pragma once

#include "bpc/basis.hpp"
#include "bpc/linear_bayes.hpp"

namespace bpc {

/// Joint Gaussian of the process on a point set (block 1, length M) and of L
/// linear functionals of it (block 2, length L).
struct LinearFunctionalBlocks {
  VectorXd mu1;  // M
  VectorXd mu2;  // L
  MatrixXd s11;  // M x M
  MatrixXd s12;  // M x L
  MatrixXd s22;  // L x L
};

/// Functional value known up to Gaussian uncertainty, a ~ N(mean, covariance).
struct UncertainFunctionalValue {
  VectorXd mean;
  MatrixXd covariance;
};

/// Blocks for functionals L{g} = C^T alpha, one column of `c` per functional.
LinearFunctionalBlocks functional_blocks(const CoefficientPosterior& post, const DesignMatrix& V, const MatrixXd& c);

/// Spatial-mean specialization (C = e_1): mu2 = [mu]_1, S12 = V [Sigma]_{:,1},
/// S22 = [Sigma]_11.
LinearFunctionalBlocks spatial_mean_blocks(const CoefficientPosterior& post, const DesignMatrix& V);

/// g(X) | L{g} = a: mean mu1 + S12 S22^-1 (a - mu2), covariance
/// S11 - S12 S22^-1 S12^T. Throws NumericalError when S22 is singular, which
/// means the prior carries no uncertainty about the functional.
PredictiveDistribution condition_on_value(const LinearFunctionalBlocks& blocks, const VectorXd& a);

/// Law of total covariance over a ~ N(mu_a, Sigma_a): the exact-conditioning
/// covariance plus G Sigma_a G^T with G = S12 S22^-1.
PredictiveDistribution condition_on_uncertain_value(const LinearFunctionalBlocks& blocks,
                                                    const UncertainFunctionalValue& a);

/// The same conditioning carried out on the coefficients themselves; the
/// returned posterior can be pushed through predictive() or the moment
/// routines.
CoefficientPosterior condition_coefficients(const CoefficientPosterior& post, const MatrixXd& c,
                                            const UncertainFunctionalValue& a);

/// Coefficient-space conditioning of the spatial mean on a value a with
/// variance `value_variance` (0 for exact).
CoefficientPosterior condition_spatial_mean(const CoefficientPosterior& post, double a, double value_variance = 0.0);

}  // namespace bpc
