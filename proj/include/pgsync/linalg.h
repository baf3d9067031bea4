#pragma once

#include <Eigen/Core>

namespace pgsync {

/// Largest absolute entry, 0 for an empty matrix.
double max_abs(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// True when max|m_ij - m_ji| <= rel_tol * max|m_ij|.
bool is_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m,
                  double rel_tol = 1e-12);

/// Smallest and largest eigenvalue of a symmetric matrix.
struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};
EigenRange symmetric_eigen_range(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// True for symmetric m with smallest eigenvalue >= -rel_tol * largest.
bool is_psd(const Eigen::Ref<const Eigen::MatrixXd>& m, double rel_tol = 1e-10);

// Square root and inverse square root of a symmetric PSD matrix through one
// symmetric eigendecomposition. Eigenvalues below kSqrtClamp * lambda_max
// are clamped to zero for the square root and rejected (SingularMatrix) for
// the inverse square root. Asymmetric or indefinite input throws DomainError.
inline constexpr double kSqrtClamp = 1e-13;

struct SpdRoots {
  Eigen::MatrixXd sqrt;
  Eigen::MatrixXd inv_sqrt;
};

Eigen::MatrixXd sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& s);
Eigen::MatrixXd inv_sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& s);
SpdRoots spd_roots(const Eigen::Ref<const Eigen::MatrixXd>& s);

/// Numerical rank by singular-value thresholding with
/// tau = max(rows, cols) * eps * max(sigma_max, scale). Pass the product of
/// factor norms as `scale` when `m` is a computed product.
int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m, double scale = 0.0);

/// Orthonormal basis (columns) of the null space, using the same threshold
/// as numerical_rank.
Eigen::MatrixXd null_space(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Spectral norm (largest singular value).
double norm2(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace pgsync
