#pragma once

#include <stdexcept>
#include <string>

namespace bpc {

// Dimension mismatches and other contract violations throw std::invalid_argument.
// The types below carry the failure classes that the CLI maps onto exit codes.

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: unparsable cells, non-finite values, out-of-bounds inputs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A factorization or solve that failed even after jitter escalation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sampler output that failed its convergence or divergence checks.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bpc
