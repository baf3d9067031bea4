#pragma once

// Synchronization by p-groups: the block first-difference matrix C_p, its
// kernel, the compatibility conditions on the coupling matrices and the
// reduced / limit systems they induce.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pgsync {

inline constexpr double kDefaultCompatTol = 1e-10;

/// Partition 0 = n_0 < n_1 < ... < n_p = N of the components into p groups,
/// every group holding at least two components.
class GroupPartition {
 public:
  /// Throws InvalidInput when `sizes` is empty or a size is < 2.
  static GroupPartition from_sizes(std::vector<int> sizes);

  int groups() const { return static_cast<int>(sizes_.size()); }
  int components() const { return boundaries_.back(); }
  int size(int r) const { return sizes_.at(r); }
  /// First component index of group r (0-based), i.e. n_{r}.
  int begin(int r) const { return boundaries_.at(r); }
  int end(int r) const { return boundaries_.at(r + 1); }
  /// Group owning component k.
  int group_of(int k) const;
  const std::vector<int>& sizes() const { return sizes_; }

  bool operator==(const GroupPartition&) const = default;

 private:
  std::vector<int> sizes_;
  std::vector<int> boundaries_;
};

/// A validated symmetric positive semi-definite coupling matrix. The stored
/// matrix is the exact symmetrization of the input.
class CouplingMatrix {
 public:
  enum class Role { kStiffness, kDamping };

  /// Throws InvalidInput unless `m` is square, symmetric to
  /// 1e-12 * max|m_ij| and PSD to -1e-10 * lambda_max.
  CouplingMatrix(Eigen::MatrixXd m, Role role);

  static CouplingMatrix stiffness(Eigen::MatrixXd m) {
    return CouplingMatrix(std::move(m), Role::kStiffness);
  }
  static CouplingMatrix damping(Eigen::MatrixXd m) {
    return CouplingMatrix(std::move(m), Role::kDamping);
  }

  const Eigen::MatrixXd& matrix() const { return m_; }
  int order() const { return static_cast<int>(m_.rows()); }
  Role role() const { return role_; }
  char tag() const { return role_ == Role::kStiffness ? 'A' : 'D'; }

 private:
  Eigen::MatrixXd m_;
  Role role_;
};

/// C_p with its kernel basis and the normalizer (C_p C_p^T)^{-1/2} C_p.
struct SyncBasis {
  GroupPartition partition;
  Eigen::MatrixXd sync;        // C_p, (N-p) x N
  Eigen::MatrixXd kernel;      // columns e_1..e_p, N x p
  Eigen::MatrixXd gram_sqrt;   // (C_p C_p^T)^{1/2}
  Eigen::MatrixXd gram_inv;    // (C_p C_p^T)^{-1}
  Eigen::MatrixXd normalizer;  // M, (N-p) x N, M M^T = I

  int components() const { return partition.components(); }
  int groups() const { return partition.groups(); }
  int reduced_order() const { return components() - groups(); }
  /// Rows of C_p (and M) belonging to group r: [row_begin(r), row_begin(r+1)).
  int row_begin(int r) const { return partition.begin(r) - r; }
};

SyncBasis build_sync_matrix(const GroupPartition& partition);

struct CompatibilityReport {
  bool compatible = false;
  double residual = 0.0;  // max_r ||C_p A e_r||
  int worst_kernel_vector = -1;
  Eigen::MatrixXd alpha;  // p x p block row sums (mean over the rows of block r)
  double block_row_sum_deviation = 0.0;
  bool block_criterion = false;  // row-sum-by-blocks test, must agree with `compatible`
};

/// A Ker(C_p) subset of Ker(C_p) test, together with the equivalent constant
/// row-sum-by-blocks test.
CompatibilityReport check_cp_compatibility(const CouplingMatrix& a,
                                           const GroupPartition& partition,
                                           double rel_tol = kDefaultCompatTol);

struct StrongCompatibilityReport {
  bool strong = false;
  double residual = 0.0;  // max_r ||D e_r||
  int worst_kernel_vector = -1;
  std::optional<Eigen::MatrixXd> factor;  // R with D = C_p^T R C_p
  double reconstruction_residual = 0.0;
  int factor_rank = 0;
};

/// Ker(C_p) subset of Ker(D); when it holds, recovers R through
/// R = (C_p C_p^T)^{-1} C_p D C_p^T (C_p C_p^T)^{-1}.
StrongCompatibilityReport check_strong_compatibility(const CouplingMatrix& d,
                                                     const GroupPartition& partition,
                                                     double rel_tol = kDefaultCompatTol);

struct SyncReduction {
  SyncBasis basis;
  Eigen::MatrixXd a_reduced;  // M A M^T
  Eigen::MatrixXd d_reduced;  // M D M^T
  Eigen::MatrixXd factor;     // R
  Eigen::MatrixXd beta;       // p x p limit coupling
  double intertwining_residual_a = 0.0;  // ||M A - A_reduced M||
  double intertwining_residual_d = 0.0;
  double d_reduced_crosscheck = 0.0;     // ||D_reduced - G^{1/2} R G^{1/2}||
};

/// Reduced system for W = M U. Throws IncompatibleCoupling naming the
/// violated condition and offending kernel vector when A is not
/// C_p-compatible or D is not strongly C_p-compatible.
SyncReduction reduce_system(const CouplingMatrix& a, const CouplingMatrix& d,
                            const GroupPartition& partition,
                            double rel_tol = kDefaultCompatTol);

/// beta_rs = (A e_r, e_s) / (|e_r| |e_s|). Throws IncompatibleCoupling when the
/// expansion A e_r = sum_s beta_rs |e_r|/|e_s| e_s does not close.
Eigen::MatrixXd beta_matrix(const CouplingMatrix& a, const GroupPartition& partition,
                            double rel_tol = kDefaultCompatTol);

struct RankReport {
  int rank_d = 0;
  int rank_cp_d = 0;
  bool minimal_rank_ok = false;  // rank(D) = rank(C_p D) = N - p
  // Pairing matrix between orthonormal bases of Ker(D) and Ker(C_p) is square
  // and invertible. Such a pair can then always be renormalized to a
  // bi-orthonormal one.
  bool biorthogonal = false;
  double pairing_sigma_min = 0.0;
  int kalman_rank = 0;  // rank [D, AD, ..., A^{N-1} D]
};

RankReport rank_diagnostics(const CouplingMatrix& a, const CouplingMatrix& d,
                            const GroupPartition& partition);

/// Human-readable name of a kernel vector, e.g. "e_2" (1-based).
std::string kernel_vector_name(int r);

}  // namespace pgsync
