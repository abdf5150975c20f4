#pragma once

#include "bpc/errors.hpp"
#include "bpc/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bpc::app {

struct Dataset {
  MatrixXd inputs;   // M x d
  VectorXd outputs;  // M
  std::vector<std::string> column_names;  // d inputs, then the output
  std::string source;

  Eigen::Index size() const { return inputs.rows(); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;
};

/// A cell that could not be used. Rows count file lines from 1 (the header is
/// row 1); columns count from 1.
class CsvError : public DataError {
 public:
  CsvError(const std::string& path, std::size_t row, std::size_t column, const std::string& what);

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct Bounds {
  double lower = -1.0;
  double upper = 1.0;

  bool operator==(const Bounds&) const = default;
};

/// Relative tolerance (fraction of the interval width) on bound violations.
inline constexpr double kBoundTolerance = 1e-6;

/// Parses a header + numeric rows file whose last column is the output.
Dataset read_csv(const std::filesystem::path& path);

/// read_csv followed by map_to_reference when bounds are given.
Dataset ingest_csv(const std::filesystem::path& path, const std::vector<Bounds>& bounds = {},
                   double tolerance = kBoundTolerance);

/// Maps every input column affinely onto [-1, 1]. Values outside the bounds by
/// more than `tolerance` * width are rejected; smaller excursions are clamped.
Dataset map_to_reference(Dataset data, const std::vector<Bounds>& bounds, double tolerance = kBoundTolerance);

/// Inputs-only file (header + rows, every column an input).
MatrixXd read_inputs_csv(const std::filesystem::path& path, std::size_t expected_dim);

void write_csv(const std::filesystem::path& path, const Dataset& data);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Random partition of rows 0..M-1 into n_train training rows and the rest.
Split random_split(std::size_t M, std::size_t n_train, std::uint64_t seed);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);

}  // namespace bpc::app
