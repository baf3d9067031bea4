#pragma once

// Semi-discrete realizations of u'' + L u + g u' = 0 on the unit interval and
// their coupling into N-component systems
//
//   (M_h x I) U'' + (K_h x I + M_h x A) U + (G_h x D) U' = 0,
//
// with unknowns ordered node-major, component-minor (flat = dof * N + comp).

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pgsync/pgroup_algebra.h"

namespace pgsync {

enum class ModelKind {
  kWaveBoundary,     // u(0) = 0, u_x(1) + u_t(1) = 0, linear elements
  kWaveDistributed,  // u(0) = u(1) = 0, damping a(x) u_t, linear elements
  kBeamDistributed,  // clamped ends, damping a(x) u_t, cubic Hermite elements
  kOscillator,       // single degree of freedom with M = K = G = 1
};

std::string_view to_string(ModelKind kind);
/// Accepts "wave_boundary", "wave_distributed", "beam_distributed", "oscillator".
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kWaveBoundary;
  int elements = 64;
  double damping_left = 0.2;   // delta_left, width of the damped region at x = 0
  double damping_right = 0.2;  // delta_right
  double damping_floor = 1.0;  // a_0

  /// Throws InvalidInput when the spec violates its invariants.
  void validate() const;
};

/// Continuous piecewise-linear coefficient a(x) on [0, 1].
class DampingProfile {
 public:
  struct Knot {
    double x;
    double value;
  };

  static DampingProfile constant(double value);
  /// a_0 on [0, left - ramp] and [1 - right + ramp, 1], linear ramps down to
  /// zero at x = left and x = 1 - right, zero in between. A zero width
  /// removes that side.
  static DampingProfile plateau(double left, double right, double floor, double ramp);

  double operator()(double x) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  explicit DampingProfile(std::vector<Knot> knots);
  std::vector<Knot> knots_;
};

/// Meaning of one scalar unknown of a discrete model.
struct DofLabel {
  double x = 0.0;
  int derivative = 0;  // 0: value u(x), 1: slope u_x(x)
};

struct DiscreteModel {
  ModelKind kind = ModelKind::kWaveBoundary;
  int elements = 0;
  Eigen::MatrixXd mass;       // M_h, SPD
  Eigen::MatrixXd stiffness;  // K_h, SPD
  Eigen::MatrixXd damping;    // G_h, symmetric PSD
  std::vector<DofLabel> labels;

  int dof() const { return static_cast<int>(mass.rows()); }
};

DiscreteModel assemble(const ModelSpec& spec);

/// Distributed-damping kinds with an explicit coefficient profile.
DiscreteModel assemble(ModelKind kind, int elements, const DampingProfile& profile);

/// Nodal interpolant of a field given its value and first derivative.
Eigen::VectorXd interpolate(const DiscreteModel& model,
                            const std::function<double(double)>& value,
                            const std::function<double(double)>& slope);

struct CoupledSystem {
  DiscreteModel model;
  CouplingMatrix a;
  CouplingMatrix d;
  Eigen::SparseMatrix<double> mass;       // M_h x I_N
  Eigen::SparseMatrix<double> stiffness;  // K_h x I_N + M_h x A
  Eigen::SparseMatrix<double> damping;    // G_h x D

  int components() const { return a.order(); }
  int unknowns() const { return model.dof() * components(); }
};

/// Throws DimensionMismatch when A and D differ in order.
CoupledSystem couple(DiscreteModel model, CouplingMatrix a, CouplingMatrix d);

/// Kronecker product left x right as a sparse matrix, structural zeros dropped.
Eigen::SparseMatrix<double> sparse_kron(const Eigen::Ref<const Eigen::MatrixXd>& left,
                                        const Eigen::Ref<const Eigen::MatrixXd>& right);

}  // namespace pgsync
