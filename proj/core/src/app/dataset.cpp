#include "bpc/app/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bpc::app {

void Dataset::validate() const {
  if (inputs.rows() < 1) throw DataError(source + ": dataset has no rows");
  if (outputs.size() != inputs.rows()) throw DataError(source + ": input and output row counts differ");
  if (!inputs.allFinite() || !outputs.allFinite()) throw DataError(source + ": dataset contains non-finite values");
}

CsvError::CsvError(const std::string& path, std::size_t row, std::size_t column, const std::string& what)
    : DataError(path + ": row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column) {}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw CsvError(path.string(), line_no, std::min(cells.size(), t.header.size()) + 1,
                     "expected " + std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      const char* begin = s.data();
      const char* end = s.data() + s.size();
      if (!s.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, row[c]);
      if (s.empty() || ec != std::errc() || ptr != end) {
        throw CsvError(path.string(), line_no, c + 1, "non-numeric value '" + s + "'");
      }
      if (!std::isfinite(row[c])) throw CsvError(path.string(), line_no, c + 1, "non-finite value '" + s + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw DataError(path.string() + ": missing header row");
  if (t.rows.empty()) throw DataError(path.string() + ": no data rows");
  return t;
}

}  // namespace

Dataset read_csv(const std::filesystem::path& path) {
  const Table t = read_table(path);
  if (t.header.size() < 2) throw DataError(path.string() + ": need at least one input column and one output column");
  const auto m = static_cast<Eigen::Index>(t.rows.size());
  const auto d = static_cast<Eigen::Index>(t.header.size() - 1);
  Dataset data;
  data.inputs.resize(m, d);
  data.outputs.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) data.inputs(r, c) = t.rows[r][c];
    data.outputs(r) = t.rows[r][d];
  }
  data.column_names = t.header;
  data.source = path.string();
  return data;
}

Dataset map_to_reference(Dataset data, const std::vector<Bounds>& bounds, double tolerance) {
  if (bounds.size() != data.dim()) {
    throw DataError(data.source + ": " + std::to_string(bounds.size()) + " bounds given for " +
                    std::to_string(data.dim()) + " input columns");
  }
  for (std::size_t c = 0; c < bounds.size(); ++c) {
    const auto [lo, hi] = bounds[c];
    if (!(hi > lo)) throw ConfigError("bounds for input " + std::to_string(c + 1) + " are empty");
    const double slack = tolerance * (hi - lo);
    for (Eigen::Index r = 0; r < data.size(); ++r) {
      double& x = data.inputs(r, static_cast<Eigen::Index>(c));
      if (x < lo - slack || x > hi + slack) {
        throw CsvError(data.source, static_cast<std::size_t>(r) + 2, c + 1,
                       "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                           "]");
      }
      x = std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0);
    }
  }
  return data;
}

Dataset ingest_csv(const std::filesystem::path& path, const std::vector<Bounds>& bounds, double tolerance) {
  Dataset data = read_csv(path);
  if (!bounds.empty()) data = map_to_reference(std::move(data), bounds, tolerance);
  return data;
}

MatrixXd read_inputs_csv(const std::filesystem::path& path, std::size_t expected_dim) {
  const Table t = read_table(path);
  if (t.header.size() != expected_dim) {
    throw DataError(path.string() + ": expected " + std::to_string(expected_dim) + " input columns, found " +
                    std::to_string(t.header.size()));
  }
  MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(expected_dim));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < expected_dim; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][c];
  }
  return x;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write file");
  out.precision(17);
  for (std::size_t c = 0; c < data.column_names.size(); ++c) out << (c ? "," : "") << data.column_names[c];
  out << '\n';
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) out << data.inputs(r, c) << ',';
    out << data.outputs(r) << '\n';
  }
}

Split random_split(std::size_t M, std::size_t n_train, std::uint64_t seed) {
  if (n_train < 1 || n_train > M) {
    throw ConfigError("training count " + std::to_string(n_train) + " is not within 1.." + std::to_string(M));
  }
  std::vector<std::size_t> rows(M);
  std::iota(rows.begin(), rows.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  Split s;
  s.train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.inputs.cols());
  out.outputs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(data.size())) throw std::out_of_range("row index out of range");
    out.inputs.row(static_cast<Eigen::Index>(k)) = data.inputs.row(static_cast<Eigen::Index>(rows[k]));
    out.outputs(static_cast<Eigen::Index>(k)) = data.outputs(static_cast<Eigen::Index>(rows[k]));
  }
  out.column_names = data.column_names;
  out.source = data.source;
  return out;
}

}  // namespace bpc::app
