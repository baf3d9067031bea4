#pragma once

// Shared fixtures and random generators for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pgsync/pgroup_algebra.h"

namespace pgsync::testing {

// The running example: sizes [2, 2] with a compatible A and D = C_p^T C_p.
inline Eigen::MatrixXd example_a() {
  Eigen::MatrixXd a(4, 4);
  // clang-format off
  a << 2, -1, 0, 0,
      -1,  2, 0, 0,
       0,  0, 1, 0,
       0,  0, 0, 1;
  // clang-format on
  return a;
}

inline Eigen::MatrixXd example_d() {
  Eigen::MatrixXd d(4, 4);
  // clang-format off
  d << 1, -1,  0,  0,
      -1,  1,  0,  0,
       0,  0,  1, -1,
       0,  0, -1,  1;
  // clang-format on
  return d;
}

inline GroupPartition example_partition() { return GroupPartition::from_sizes({2, 2}); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform();
    }
    return m;
  }

  /// X X^T with X of shape n x rank.
  Eigen::MatrixXd psd(Eigen::Index n, Eigen::Index rank) {
    const Eigen::MatrixXd x = matrix(n, rank);
    return x * x.transpose();
  }

  /// Well-conditioned SPD: X X^T + shift I.
  Eigen::MatrixXd spd(Eigen::Index n, double shift = 1.0) {
    return psd(n, n) + shift * Eigen::MatrixXd::Identity(n, n);
  }

  /// Random partition with p <= max_groups groups and N <= max_components.
  GroupPartition partition(int max_groups, int max_components) {
    const int p = integer(1, max_groups);
    std::vector<int> sizes(static_cast<std::size_t>(p), 2);
    int n = 2 * p;
    while (n < max_components && uniform(0.0, 1.0) < 0.6) {
      ++sizes[static_cast<std::size_t>(integer(0, p - 1))];
      ++n;
    }
    return GroupPartition::from_sizes(sizes);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Orthonormal basis of Ker(C_p): e_r / |e_r|, built without the library.
inline Eigen::MatrixXd normalized_indicators(const GroupPartition& part) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(part.components(), part.groups());
  for (int r = 0; r < part.groups(); ++r) {
    q.col(r).segment(part.begin(r), part.size(r)).setConstant(1.0 / std::sqrt(part.size(r)));
  }
  return q;
}

/// Orthonormal complement of the group indicators (columns span Im C_p^T).
inline Eigen::MatrixXd indicator_complement(const GroupPartition& part) {
  const int n = part.components();
  const Eigen::MatrixXd q = normalized_indicators(part);
  Eigen::MatrixXd basis(n, 0);
  for (int k = 0; k < n && basis.cols() < n - part.groups(); ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, k);
    v -= q * (q.transpose() * v);
    v -= basis * (basis.transpose() * v);
    if (v.norm() > 1e-8) {
      basis.conservativeResize(n, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v.normalized();
    }
  }
  return basis;
}

/// A symmetric PSD matrix mapping Ker(C_p) into itself: it is block diagonal
/// in the orthogonal splitting Ker(C_p) + Im(C_p^T).
inline Eigen::MatrixXd random_compatible(Rng& rng, const GroupPartition& part) {
  const Eigen::MatrixXd q = normalized_indicators(part);
  const Eigen::MatrixXd c = indicator_complement(part);
  const Eigen::MatrixXd s1 = rng.psd(part.groups(), part.groups());
  const Eigen::MatrixXd s2 = rng.psd(c.cols(), c.cols());
  Eigen::MatrixXd a = q * s1 * q.transpose() + c * s2 * c.transpose();
  return 0.5 * (a + a.transpose());
}

/// C_p^T R C_p with C_p rebuilt here from its definition.
inline Eigen::MatrixXd raw_sync_matrix(const GroupPartition& part) {
  const int n = part.components();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n - part.groups(), n);
  int row = 0;
  for (int r = 0; r < part.groups(); ++r) {
    for (int k = part.begin(r); k + 1 < part.end(r); ++k, ++row) {
      c(row, k) = 1.0;
      c(row, k + 1) = -1.0;
    }
  }
  return c;
}

}  // namespace pgsync::testing
