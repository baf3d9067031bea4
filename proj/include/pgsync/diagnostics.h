#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pgsync/integrator.h"
#include "pgsync/models.h"
#include "pgsync/pgroup_algebra.h"

namespace pgsync {

/// Energy norm of the normalized projection W = M U (per node):
/// sqrt(W^T (K_h x I) W + W'^T (M_h x I) W'), total and per group.
struct SyncError {
  double total = 0.0;
  std::vector<double> per_group;
};

SyncError sync_error(const State& s, const SyncBasis& basis, const DiscreteModel& model);

/// Same energy norm for an arbitrary per-node row operator P (rows x N),
/// e.g. the raw C_p.
double projected_energy_norm(const State& s, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                             const DiscreteModel& model);

/// Energy norm of a full N-component state, sqrt(U^T (K_h x I) U + U'^T (M_h x I) U').
double state_energy_norm(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         const DiscreteModel& model, int components);

/// Synchronized fields u_r = ((U, e_r)) / |e_r| taken nodewise, and the
/// assembled u = sum_r u_r e_r / |e_r| in the flat node-major layout.
struct SynchronizedState {
  Eigen::MatrixXd fields;      // p x dof
  Eigen::MatrixXd velocities;  // p x dof
  Eigen::VectorXd u;           // N * dof
  Eigen::VectorXd v;
};

SynchronizedState synchronized_state(const State& s, const GroupPartition& partition);

/// max-abs of (U - u) - C_p^T (C_p C_p^T)^{-1} C_p U over displacements and
/// velocities.
double pinning_residual(const State& s, const SyncBasis& basis);

/// E = sum_r u_r'K u_r + sum_{r,s} beta_rs u_r'M u_s + sum_r v_r'M v_r.
/// Throws InvalidInput for an asymmetric B.
double limit_energy(const Eigen::Ref<const Eigen::MatrixXd>& fields,
                    const Eigen::Ref<const Eigen::MatrixXd>& velocities,
                    const Eigen::Ref<const Eigen::MatrixXd>& beta, const DiscreteModel& model);

/// Residual of  M_h u_r'' + K_h u_r + sum_s beta_rs M_h u_s = 0  evaluated on
/// the fields extracted from a full-system state, with u_r'' taken from the
/// full equation of motion.
struct LimitResidual {
  double residual = 0.0;
  double scale = 0.0;  // norm of the largest term, for relative comparisons
};

LimitResidual limit_system_residual(const CoupledSystem& system, const State& s,
                                    const GroupPartition& partition,
                                    const Eigen::Ref<const Eigen::MatrixXd>& beta);

struct DecayWindow {
  double start = 0.0;
  double end = 0.0;
};

struct DecayFit {
  double omega = 0.0;
  double prefactor = 1.0;  // exp(intercept) / value(0)
  double r_squared = 0.0;
  DecayWindow window;
  std::size_t samples = 0;
};

inline constexpr double kDecayFloor = 1e-13;

/// Least-squares line through (t, log value) on the window, skipping values
/// at or below kDecayFloor * value(0). Throws InsufficientData with fewer
/// than 10 usable samples.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value,
                   DecayWindow window);

struct DecayVerdict {
  bool fitted = false;
  DecayFit fit;
  double final_ratio = 0.0;       // value(T) / value(0)
  bool decay_observed = false;    // omega > 0 and r^2 >= 0.9
  bool no_uniform_decay = false;  // final_ratio >= 0.1
};

DecayVerdict decay_verdict(const std::vector<double>& t, const std::vector<double>& value,
                           DecayWindow window);

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // sorted by (re, im)
  double abscissa = 0.0;
  int near_imaginary_count = 0;
};

inline constexpr int kSpectrumCap = 2000;
inline constexpr double kNearImaginaryTol = 1e-8;

/// Eigenvalues of the first-order generator
/// [[0, I], [-(M x I)^{-1} (K x I + M x A), -(M x I)^{-1} (G x D)]].
/// Throws SizeCapExceeded when the system has more than `cap` unknowns.
SpectrumReport spectrum(const CoupledSystem& system, int cap = kSpectrumCap,
                        double near_imaginary_tol = kNearImaginaryTol);

}  // namespace pgsync
