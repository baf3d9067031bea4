#pragma once

// CSV in and out. Numbers are written with %.17g so a read-back is exact.
// Lines starting with '#' are comments (used for provenance such as seeds)
// and are skipped on input.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pgsync::csv {

std::string format_number(double x);

void write_matrix(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m,
                  const std::vector<std::string>& comments = {});
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
  std::vector<double> column(std::size_t index) const;
};

void write_table(const std::filesystem::path& path, const Table& table,
                 const std::vector<std::string>& comments = {});
/// First non-comment line is the header.
Table read_table(const std::filesystem::path& path);

}  // namespace pgsync::csv
