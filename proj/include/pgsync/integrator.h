#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "pgsync/models.h"

namespace pgsync {

struct State {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double t = 0.0;
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 40.0;
  int stride = 1;

  void validate() const;
  std::size_t steps() const;
};

/// Implicit midpoint rule for  M u'' + K u + C u' = 0  written in (u, v).
/// The step matrix M + dt/2 C + dt^2/4 K is factored once at construction.
/// For C = 0 the energy  1/2 v'Mv + 1/2 u'Ku  is conserved to round-off,
/// for symmetric PSD C it is non-increasing.
class MidpointStepper {
 public:
  MidpointStepper(const CoupledSystem& system, double dt);

  State step(const State& s) const;

  /// Relative residual of the linear solve that produced `next` from `prev`.
  double solve_residual(const State& prev, const State& next) const;

  double energy(const State& s) const;
  double dt() const { return dt_; }

 private:
  double dt_;
  Eigen::SparseMatrix<double> mass_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::SparseMatrix<double> step_matrix_;
  Eigen::SparseMatrix<double> explicit_matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

/// One midpoint step; factors the step matrix on every call.
State step_midpoint(const CoupledSystem& system, const State& s, double dt);

/// Columns evaluated on recorded states.
struct Observer {
  std::vector<std::string> columns;
  std::function<std::vector<double>(const State&)> evaluate;
};

struct Trajectory {
  std::vector<std::string> columns;  // observer columns, "t" excluded
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::vector<double> energy;        // full energy at each recorded time
  std::vector<State> states;         // only when requested
  std::size_t steps = 0;
  double max_energy_increase = 0.0;  // max_n (E_{n+1} - E_n) / E_0 over all steps
  double max_energy_drift = 0.0;     // max_n |E_n - E_0| / E_0 over all steps

  /// Column by name; throws InvalidInput when absent.
  std::vector<double> series(const std::string& name) const;
};

/// Runs the scheme from `init` over cfg.horizon, recording observers every
/// cfg.stride steps and at the final step. Throws NonFiniteState on NaN/Inf.
Trajectory simulate(const CoupledSystem& system, const State& init, const SimConfig& cfg,
                    const std::vector<Observer>& observers = {}, bool keep_states = false);

State zero_state(const CoupledSystem& system);

}  // namespace pgsync
