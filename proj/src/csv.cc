#include "pgsync/csv.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pgsync/errors.h"

namespace pgsync::csv {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

// strtod flags subnormal results with ERANGE; only overflow is an error.
double parse_number(const std::string& s, const std::filesystem::path& path) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  const bool overflow = errno == ERANGE && std::isinf(v);
  if (s.empty() || end != s.c_str() + s.size() || overflow) {
    throw ConfigError("csv " + path.string() + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv file " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write csv file " + path.string());
  return out;
}

bool skip(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_matrix(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m,
                  const std::vector<std::string>& comments) {
  std::ofstream out = open_out(path);
  for (const auto& c : comments) out << "# " << c << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(parse_number(cell, path));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("csv " + path.string() + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("csv " + path.string() + ": no data");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<double> Table::column(std::size_t index) const {
  if (index >= columns.size()) throw InvalidInput("csv table: column index out of range");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[index]);
  return out;
}

std::vector<double> Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return column(i);
  }
  throw InvalidInput("csv table has no column '" + name + "'");
}

void write_table(const std::filesystem::path& path, const Table& table,
                 const std::vector<std::string>& comments) {
  std::ofstream out = open_out(path);
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j > 0) out << ',';
    out << table.columns[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << format_number(row[j]);
    }
    out << '\n';
  }
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    if (header) {
      t.columns = split(line);
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(parse_number(cell, path));
    if (row.size() != t.columns.size()) {
      throw ConfigError("csv " + path.string() + ": row width differs from header");
    }
    t.rows.push_back(std::move(row));
  }
  if (header) throw ConfigError("csv " + path.string() + ": missing header");
  return t;
}

}  // namespace pgsync::csv
