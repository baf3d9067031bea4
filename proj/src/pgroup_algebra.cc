#include "pgsync/pgroup_algebra.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "pgsync/errors.h"
#include "pgsync/linalg.h"

namespace pgsync {
namespace {

// Smallest admissible principal-angle cosine between Ker(D) and Ker(C_p).
constexpr double kPairingTol = 1e-10;

void require_order(const CouplingMatrix& m, const GroupPartition& partition) {
  if (m.order() != partition.components()) {
    std::ostringstream msg;
    msg << "coupling matrix " << m.tag() << " has order " << m.order()
        << " but the partition has " << partition.components() << " components";
    throw DimensionMismatch(msg.str());
  }
}

Eigen::MatrixXd kernel_basis(const GroupPartition& partition) {
  const int n = partition.components();
  const int p = partition.groups();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, p);
  for (int r = 0; r < p; ++r) {
    e.col(r).segment(partition.begin(r), partition.size(r)).setOnes();
  }
  return e;
}

}  // namespace

GroupPartition GroupPartition::from_sizes(std::vector<int> sizes) {
  if (sizes.empty()) {
    throw InvalidInput("invalid partition: at least one group is required");
  }
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    if (sizes[r] < 2) {
      std::ostringstream msg;
      msg << "invalid partition: group " << r + 1 << " has size " << sizes[r]
          << ", every group needs at least 2 components";
      throw InvalidInput(msg.str());
    }
  }
  GroupPartition out;
  out.sizes_ = std::move(sizes);
  out.boundaries_.assign(1, 0);
  for (int s : out.sizes_) out.boundaries_.push_back(out.boundaries_.back() + s);
  return out;
}

int GroupPartition::group_of(int k) const {
  if (k < 0 || k >= components()) throw InvalidInput("component index out of range");
  const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), k);
  return static_cast<int>(it - boundaries_.begin()) - 1;
}

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd m, Role role) : role_(role) {
  const char tag = role == Role::kStiffness ? 'A' : 'D';
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string("coupling matrix ") + tag + " must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw InvalidInput(std::string("coupling matrix ") + tag + " has non-finite entries");
  }
  if (!is_symmetric(m, 1e-12)) {
    throw InvalidInput(std::string("coupling matrix ") + tag + " is not symmetric");
  }
  if (!is_psd(m, 1e-10)) {
    throw InvalidInput(std::string("coupling matrix ") + tag +
                       " is not positive semi-definite");
  }
  m_ = 0.5 * (m + m.transpose());
}

std::string kernel_vector_name(int r) { return "e_" + std::to_string(r + 1); }

SyncBasis build_sync_matrix(const GroupPartition& partition) {
  const int n = partition.components();
  const int p = partition.groups();
  SyncBasis out{partition, Eigen::MatrixXd::Zero(n - p, n), kernel_basis(partition), {}, {}, {}};
  for (int r = 0; r < p; ++r) {
    const int row0 = out.row_begin(r);
    const int col0 = partition.begin(r);
    for (int k = 0; k + 1 < partition.size(r); ++k) {
      out.sync(row0 + k, col0 + k) = 1.0;
      out.sync(row0 + k, col0 + k + 1) = -1.0;
    }
  }
  const Eigen::MatrixXd gram = out.sync * out.sync.transpose();
  SpdRoots roots = spd_roots(gram);
  if (roots.inv_sqrt.size() == 0) throw SingularMatrix("C_p C_p^T is singular");
  out.gram_sqrt = std::move(roots.sqrt);
  out.gram_inv = roots.inv_sqrt * roots.inv_sqrt;
  out.normalizer = roots.inv_sqrt * out.sync;
  return out;
}

CompatibilityReport check_cp_compatibility(const CouplingMatrix& a,
                                           const GroupPartition& partition,
                                           double rel_tol) {
  require_order(a, partition);
  const SyncBasis basis = build_sync_matrix(partition);
  const Eigen::MatrixXd& am = a.matrix();
  const double scale = 1.0 + norm2(am);
  const int p = partition.groups();

  CompatibilityReport rep;
  const Eigen::MatrixXd image = basis.sync * am * basis.kernel;
  for (int r = 0; r < p; ++r) {
    const double res = image.col(r).norm();
    if (rep.worst_kernel_vector < 0 || res > rep.residual) {
      rep.residual = res;
      rep.worst_kernel_vector = r;
    }
  }
  rep.compatible = rep.residual <= rel_tol * scale;

  // Row sums by blocks: column block s summed for every row.
  const Eigen::MatrixXd row_sums = am * basis.kernel;  // N x p
  rep.alpha = Eigen::MatrixXd::Zero(p, p);
  for (int r = 0; r < p; ++r) {
    const auto block = row_sums.middleRows(partition.begin(r), partition.size(r));
    for (int s = 0; s < p; ++s) {
      const double mean = block.col(s).mean();
      rep.alpha(r, s) = mean;
      rep.block_row_sum_deviation =
          std::max(rep.block_row_sum_deviation, (block.col(s).array() - mean).abs().maxCoeff());
    }
  }
  rep.block_criterion = rep.block_row_sum_deviation <= rel_tol * scale;
  return rep;
}

StrongCompatibilityReport check_strong_compatibility(const CouplingMatrix& d,
                                                     const GroupPartition& partition,
                                                     double rel_tol) {
  require_order(d, partition);
  const SyncBasis basis = build_sync_matrix(partition);
  const Eigen::MatrixXd& dm = d.matrix();
  const double scale = 1.0 + norm2(dm);

  StrongCompatibilityReport rep;
  const Eigen::MatrixXd image = dm * basis.kernel;
  for (int r = 0; r < partition.groups(); ++r) {
    const double res = image.col(r).norm();
    if (rep.worst_kernel_vector < 0 || res > rep.residual) {
      rep.residual = res;
      rep.worst_kernel_vector = r;
    }
  }
  rep.strong = rep.residual <= rel_tol * scale;
  if (!rep.strong) return rep;

  Eigen::MatrixXd r = basis.gram_inv * basis.sync * dm * basis.sync.transpose() * basis.gram_inv;
  r = 0.5 * (r + r.transpose());
  rep.reconstruction_residual = norm2(dm - basis.sync.transpose() * r * basis.sync);
  rep.factor_rank = numerical_rank(r);
  rep.factor = std::move(r);
  return rep;
}

Eigen::MatrixXd beta_matrix(const CouplingMatrix& a, const GroupPartition& partition,
                            double rel_tol) {
  require_order(a, partition);
  const CompatibilityReport compat = check_cp_compatibility(a, partition, rel_tol);
  if (!compat.compatible) {
    throw IncompatibleCoupling("C_p-compatibility: C_p A " +
                               kernel_vector_name(compat.worst_kernel_vector) +
                               " != 0, the limit coupling does not close");
  }
  const Eigen::MatrixXd e = kernel_basis(partition);
  const Eigen::MatrixXd& am = a.matrix();
  const int p = partition.groups();
  Eigen::VectorXd norms(p);
  for (int r = 0; r < p; ++r) norms(r) = e.col(r).norm();

  Eigen::MatrixXd beta(p, p);
  for (int r = 0; r < p; ++r) {
    const Eigen::VectorXd ae = am * e.col(r);
    for (int s = 0; s < p; ++s) beta(r, s) = ae.dot(e.col(s)) / (norms(r) * norms(s));
  }

  const double scale = 1.0 + norm2(am);
  for (int r = 0; r < p; ++r) {
    Eigen::VectorXd expansion = Eigen::VectorXd::Zero(e.rows());
    for (int s = 0; s < p; ++s) expansion += beta(r, s) * norms(r) / norms(s) * e.col(s);
    if ((am * e.col(r) - expansion).norm() > rel_tol * scale) {
      throw IncompatibleCoupling("expansion of A " + kernel_vector_name(r) +
                                 " over the kernel basis does not close");
    }
  }
  return 0.5 * (beta + beta.transpose());
}

SyncReduction reduce_system(const CouplingMatrix& a, const CouplingMatrix& d,
                            const GroupPartition& partition, double rel_tol) {
  require_order(a, partition);
  require_order(d, partition);
  const CompatibilityReport compat = check_cp_compatibility(a, partition, rel_tol);
  if (!compat.compatible) {
    std::ostringstream msg;
    msg << "C_p-compatibility violated: C_p A " << kernel_vector_name(compat.worst_kernel_vector)
        << " != 0 (residual " << compat.residual << ")";
    throw IncompatibleCoupling(msg.str());
  }
  StrongCompatibilityReport strong = check_strong_compatibility(d, partition, rel_tol);
  if (!strong.strong) {
    std::ostringstream msg;
    msg << "strong C_p-compatibility violated: D " << kernel_vector_name(strong.worst_kernel_vector)
        << " != 0 (residual " << strong.residual << ")";
    throw IncompatibleCoupling(msg.str());
  }

  SyncReduction out;
  out.basis = build_sync_matrix(partition);
  const Eigen::MatrixXd& m = out.basis.normalizer;
  const Eigen::MatrixXd& am = a.matrix();
  const Eigen::MatrixXd& dm = d.matrix();

  out.a_reduced = m * am * m.transpose();
  out.a_reduced = 0.5 * (out.a_reduced + out.a_reduced.transpose()).eval();
  out.d_reduced = m * dm * m.transpose();
  out.d_reduced = 0.5 * (out.d_reduced + out.d_reduced.transpose()).eval();
  out.factor = std::move(*strong.factor);
  out.beta = beta_matrix(a, partition, rel_tol);

  out.intertwining_residual_a = norm2(m * am - out.a_reduced * m);
  out.intertwining_residual_d = norm2(m * dm - out.d_reduced * m);
  out.d_reduced_crosscheck =
      norm2(out.d_reduced - out.basis.gram_sqrt * out.factor * out.basis.gram_sqrt);
  return out;
}

RankReport rank_diagnostics(const CouplingMatrix& a, const CouplingMatrix& d,
                            const GroupPartition& partition) {
  require_order(a, partition);
  require_order(d, partition);
  const SyncBasis basis = build_sync_matrix(partition);
  const Eigen::MatrixXd& am = a.matrix();
  const Eigen::MatrixXd& dm = d.matrix();
  const int n = partition.components();
  const int p = partition.groups();

  RankReport rep;
  rep.rank_d = numerical_rank(dm);
  rep.rank_cp_d = numerical_rank(basis.sync * dm, norm2(basis.sync) * norm2(dm));
  rep.minimal_rank_ok = rep.rank_d == n - p && rep.rank_cp_d == n - p;

  const Eigen::MatrixXd ker_d = null_space(dm);
  if (ker_d.cols() == p) {
    Eigen::MatrixXd e = basis.kernel;
    for (int r = 0; r < p; ++r) e.col(r).normalize();
    const Eigen::MatrixXd pairing = ker_d.transpose() * e;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pairing);
    rep.pairing_sigma_min = svd.singularValues().minCoeff();
    rep.biorthogonal = rep.pairing_sigma_min > kPairingTol;
  }

  Eigen::MatrixXd kalman(n, n * n);
  kalman.leftCols(n) = dm;
  for (int k = 1; k < n; ++k) {
    kalman.middleCols(n * k, n) = am * kalman.middleCols(n * (k - 1), n);
  }
  rep.kalman_rank = numerical_rank(kalman);
  return rep;
}

}  // namespace pgsync
