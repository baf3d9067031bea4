#include "pgsync/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pgsync/errors.h"

namespace pgsync {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double rank_threshold(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd, Eigen::Index rows,
                      Eigen::Index cols, double scale = 0.0) {
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  return static_cast<double>(std::max(rows, cols)) * kEps * std::max(sigma_max, scale);
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_eigen(
    const Eigen::Ref<const Eigen::MatrixXd>& s) {
  if (s.rows() != s.cols()) {
    throw DomainError("matrix square root: input is not square");
  }
  if (!is_symmetric(s)) {
    throw DomainError("matrix square root: input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) {
    throw DomainError("matrix square root: eigendecomposition failed");
  }
  const auto& ev = es.eigenvalues();
  if (ev.size() > 0) {
    const double scale = std::max(std::abs(ev.maxCoeff()), std::abs(ev.minCoeff()));
    if (ev.minCoeff() < -1e-10 * scale) {
      throw DomainError("matrix square root: input is indefinite (eigenvalue " +
                        std::to_string(ev.minCoeff()) + ")");
    }
  }
  return es;
}

}  // namespace

double max_abs(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return max_abs(m - m.transpose()) <= rel_tol * max_abs(m);
}

EigenRange symmetric_eigen_range(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

bool is_psd(const Eigen::Ref<const Eigen::MatrixXd>& m, double rel_tol) {
  if (!is_symmetric(m)) return false;
  const EigenRange r = symmetric_eigen_range(m);
  return r.min >= -rel_tol * std::max(r.max, 0.0);
}

SpdRoots spd_roots(const Eigen::Ref<const Eigen::MatrixXd>& s) {
  const auto es = checked_eigen(s);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Eigen::MatrixXd& q = es.eigenvectors();
  const double floor = ev.size() > 0 ? kSqrtClamp * std::max(ev.maxCoeff(), 0.0) : 0.0;

  Eigen::VectorXd root(ev.size());
  Eigen::VectorXd inv_root(ev.size());
  bool singular = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= floor) {
      root(i) = 0.0;
      inv_root(i) = 0.0;
      singular = true;
    } else {
      root(i) = std::sqrt(ev(i));
      inv_root(i) = 1.0 / root(i);
    }
  }
  SpdRoots out;
  out.sqrt = q * root.asDiagonal() * q.transpose();
  if (!singular) out.inv_sqrt = q * inv_root.asDiagonal() * q.transpose();
  return out;
}

Eigen::MatrixXd sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& s) {
  return spd_roots(s).sqrt;
}

Eigen::MatrixXd inv_sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& s) {
  SpdRoots r = spd_roots(s);
  if (r.inv_sqrt.size() == 0 && s.size() > 0) {
    throw SingularMatrix("inverse square root: eigenvalue below clamp floor");
  }
  return std::move(r.inv_sqrt);
}

int numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& m, double scale) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double tau = rank_threshold(svd, m.rows(), m.cols(), scale);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tau) ++rank;
  }
  return rank;
}

Eigen::MatrixXd null_space(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const double tau = rank_threshold(svd, m.rows(), m.cols());
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tau) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

double norm2(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace pgsync
