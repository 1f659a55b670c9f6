#pragma once

#include <charconv>
#include <fstream>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Core>

#include "hatgp/errors.hpp"

namespace hatgp {

// Training table: inputs in [0,1]^D plus one response column.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::string output_name;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw, long line_no, const std::string& column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": cell '" + cell + "' in column " +
                    column + " is not numeric");
  }
  return value;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

// Reads a numeric table whose first columns must be named x1..xD; returns the
// header cells and the parsed rows.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline RawTable read_numeric_table(const std::string& path, bool allow_empty) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  RawTable table;
  std::string line;
  if (!std::getline(in, line)) {
    if (allow_empty) return table;
    throw DataError("'" + path + "' is empty");
  }
  table.header = split_csv_line(line);
  for (std::string& h : table.header) h = trim(h);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;  // ignore blank lines
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row[c] = parse_cell(cells[c], line_no, table.header[c]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline int count_input_columns(const std::vector<std::string>& header, std::size_t reserved,
                               const std::string& path) {
  if (header.size() < reserved + 1) {
    throw DataError("'" + path + "' needs input columns x1..xD before the output");
  }
  const std::size_t inputs = header.size() - reserved;
  for (std::size_t c = 0; c < inputs; ++c) {
    const std::string expected = "x" + std::to_string(c + 1);
    if (header[c] != expected) {
      throw DataError("'" + path + "': expected column '" + expected + "', found '" + header[c] +
                      "'");
    }
  }
  return static_cast<int>(inputs);
}

}  // namespace detail

// Loads a training CSV: header x1..xD plus exactly one output column, inputs
// in [0,1] unless `rescale` maps each input column to [0,1] by its min/max
// (a constant column collapses to 0.5).
inline Dataset ingest_csv(const std::string& path, bool rescale = false) {
  detail::RawTable table = detail::read_numeric_table(path, /*allow_empty=*/false);
  const int dim = detail::count_input_columns(table.header, 1, path);
  if (table.rows.empty()) throw DataError("'" + path + "' has a header but no data rows");

  Dataset data;
  data.output_name = table.header.back();
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  data.x.resize(n, dim);
  data.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::vector<double>& row = table.rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < dim; ++c) data.x(r, c) = row[static_cast<std::size_t>(c)];
    data.y[r] = row.back();
  }

  if (rescale) {
    for (int c = 0; c < dim; ++c) {
      const double lo = data.x.col(c).minCoeff();
      const double hi = data.x.col(c).maxCoeff();
      if (hi > lo) {
        data.x.col(c) = (data.x.col(c).array() - lo) / (hi - lo);
      } else {
        data.x.col(c).setConstant(0.5);
      }
    }
  } else {
    for (Eigen::Index r = 0; r < n; ++r) {
      for (int c = 0; c < dim; ++c) {
        const double v = data.x(r, c);
        if (v < 0.0 || v > 1.0) {
          throw DataError("input " + table.header[static_cast<std::size_t>(c)] + " = " +
                          detail::format_double(v) + " on data row " + std::to_string(r + 1) +
                          " lies outside [0,1]; enable rescaling or normalize the data");
        }
      }
    }
  }
  return data;
}

// Loads a prediction-points CSV (header x1..xD, no output column).  A
// zero-byte or header-only file yields zero rows.
inline Eigen::MatrixXd read_points_csv(const std::string& path, int ambient_dim) {
  detail::RawTable table = detail::read_numeric_table(path, /*allow_empty=*/true);
  if (table.header.empty()) return Eigen::MatrixXd(0, ambient_dim);
  const int dim = detail::count_input_columns(table.header, 0, path);
  if (dim != ambient_dim) {
    throw DataError("'" + path + "' has " + std::to_string(dim) + " input columns but the model" +
                    " expects " + std::to_string(ambient_dim));
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(table.rows.size()), dim);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (int c = 0; c < dim; ++c) {
      const double v = table.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (v < 0.0 || v > 1.0) {
        throw DataError("point on data row " + std::to_string(r + 1) + " lies outside [0,1]^D");
      }
      points(r, c) = v;
    }
  }
  return points;
}

// Writes a tidy CSV table; cells are preformatted strings so callers can mix
// labels and shortest-round-trip numbers.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw ConfigError("table row width disagrees with header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace hatgp
