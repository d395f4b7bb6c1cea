#include "pairdiff/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pairdiff/error.hpp"

namespace pairdiff {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* kExpected = "expected header 'y,x1,...,xk,w1,...,wd' with k >= 1 and d >= 1";

void parse_header(const std::vector<std::string>& cells, const std::string& origin, int& k, int& d) {
  if (cells.empty() || cells[0] != "y") throw DataError(origin + ": malformed header; " + kExpected);
  k = 0;
  d = 0;
  std::size_t i = 1;
  while (i < cells.size() && cells[i] == "x" + std::to_string(k + 1)) {
    ++k;
    ++i;
  }
  while (i < cells.size() && cells[i] == "w" + std::to_string(d + 1)) {
    ++d;
    ++i;
  }
  if (k < 1 || d < 1 || i != cells.size()) {
    throw DataError(origin + ": malformed header (column " + std::to_string(std::min(i, cells.size() - 1) + 1) +
                    " '" + (i < cells.size() ? cells[i] : std::string()) + "'); " + kExpected);
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw DataError(origin + ": empty file; " + kExpected);
  int k = 0;
  int d = 0;
  parse_header(header, origin, k, d);
  const std::size_t cols = header.size();

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != cols) {
      throw DataError(origin + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& s = cells[c];
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
        throw DataError(origin + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                        "': non-numeric value '" + s + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw DataError(origin + ": need at least 2 data rows, found " + std::to_string(rows));

  Vector y(rows);
  RowMatrix x(rows, k);
  RowMatrix w(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double* row = values.data() + r * static_cast<Eigen::Index>(cols);
    y[r] = row[0];
    for (int j = 0; j < k; ++j) x(r, j) = row[1 + j];
    for (int j = 0; j < d; ++j) w(r, j) = row[1 + k + j];
  }
  return Dataset(std::move(y), std::move(x), std::move(w));
}

Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_csv(const std::string& path, const Dataset& data) {
  std::vector<std::string> header{"y"};
  for (Eigen::Index j = 0; j < data.k(); ++j) header.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < data.d(); ++j) header.push_back("w" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row{format_real(data.y()[i])};
    for (Eigen::Index j = 0; j < data.k(); ++j) row.push_back(format_real(data.x()(i, j)));
    for (Eigen::Index j = 0; j < data.d(); ++j) row.push_back(format_real(data.w()(i, j)));
    rows.push_back(std::move(row));
  }
  write_table(path, header, rows);
}

}  // namespace pairdiff
