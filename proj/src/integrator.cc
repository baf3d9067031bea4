#include "pgsync/integrator.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pgsync/errors.h"

namespace pgsync {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("sim config: dt must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidInput("sim config: horizon T must be > 0");
  }
  if (dt > horizon) throw InvalidInput("sim config: dt must not exceed T");
  if (stride < 1) throw InvalidInput("sim config: stride must be >= 1");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

MidpointStepper::MidpointStepper(const CoupledSystem& system, double dt)
    : dt_(dt), mass_(system.mass), stiffness_(system.stiffness) {
  const double q = 0.25 * dt * dt;
  step_matrix_ = mass_ + (0.5 * dt) * system.damping + q * stiffness_;
  explicit_matrix_ = mass_ - (0.5 * dt) * system.damping - q * stiffness_;
  solver_.compute(step_matrix_);
  if (solver_.info() != Eigen::Success) {
    throw SingularMatrix("midpoint step matrix could not be factored");
  }
}

State MidpointStepper::step(const State& s) const {
  const Eigen::VectorXd rhs = explicit_matrix_ * s.v - dt_ * (stiffness_ * s.u);
  State next;
  next.v = solver_.solve(rhs);
  next.u = s.u + (0.5 * dt_) * (s.v + next.v);
  next.t = s.t + dt_;
  return next;
}

double MidpointStepper::solve_residual(const State& prev, const State& next) const {
  const Eigen::VectorXd rhs = explicit_matrix_ * prev.v - dt_ * (stiffness_ * prev.u);
  const double scale = std::max(rhs.norm(), 1e-300);
  return (step_matrix_ * next.v - rhs).norm() / scale;
}

double MidpointStepper::energy(const State& s) const {
  return 0.5 * s.v.dot(mass_ * s.v) + 0.5 * s.u.dot(stiffness_ * s.u);
}

State step_midpoint(const CoupledSystem& system, const State& s, double dt) {
  return MidpointStepper(system, dt).step(s);
}

std::vector<double> Trajectory::series(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidInput("trajectory has no column '" + name + "'");
  const auto col = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[col]);
  return out;
}

State zero_state(const CoupledSystem& system) {
  return {Eigen::VectorXd::Zero(system.unknowns()), Eigen::VectorXd::Zero(system.unknowns()), 0.0};
}

Trajectory simulate(const CoupledSystem& system, const State& init, const SimConfig& cfg,
                    const std::vector<Observer>& observers, bool keep_states) {
  cfg.validate();
  if (init.u.size() != system.unknowns() || init.v.size() != system.unknowns()) {
    throw DimensionMismatch("initial state does not match the system size");
  }
  const MidpointStepper stepper(system, cfg.dt);

  Trajectory traj;
  for (const auto& obs : observers) {
    traj.columns.insert(traj.columns.end(), obs.columns.begin(), obs.columns.end());
  }
  const std::size_t n = cfg.steps();
  const double t0 = init.t;

  auto record = [&](const State& s, double e) {
    traj.times.push_back(s.t);
    std::vector<double> row;
    row.reserve(traj.columns.size());
    for (const auto& obs : observers) {
      const std::vector<double> vals = obs.evaluate(s);
      if (vals.size() != obs.columns.size()) {
        throw InvalidInput("observer returned the wrong number of values");
      }
      row.insert(row.end(), vals.begin(), vals.end());
    }
    traj.rows.push_back(std::move(row));
    traj.energy.push_back(e);
    if (keep_states) traj.states.push_back(s);
  };

  State s = init;
  const double e0 = stepper.energy(s);
  const double escale = e0 > 0.0 ? e0 : 1.0;
  double e_prev = e0;
  record(s, e0);
  for (std::size_t k = 1; k <= n; ++k) {
    s = stepper.step(s);
    s.t = t0 + static_cast<double>(k) * cfg.dt;
    if (!s.u.allFinite() || !s.v.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at step " << k << " (t = " << s.t << ")";
      throw NonFiniteState(k, msg.str());
    }
    const double e = stepper.energy(s);
    traj.max_energy_increase = std::max(traj.max_energy_increase, (e - e_prev) / escale);
    traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(e - e0) / escale);
    e_prev = e;
    if (k % static_cast<std::size_t>(cfg.stride) == 0 || k == n) record(s, e);
  }
  traj.steps = n;
  return traj;
}

}  // namespace pgsync
