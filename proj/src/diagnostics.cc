#include "pgsync/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pgsync/errors.h"
#include "pgsync/linalg.h"

namespace pgsync {
namespace {

using NodeView = Eigen::Map<const Eigen::MatrixXd>;

// Flat node-major vector seen as an N x dof matrix (column = node).
NodeView by_node(const Eigen::VectorXd& x, int components) {
  return NodeView(x.data(), components, x.size() / components);
}

int components_of(const State& s, int n, int dof) {
  if (s.u.size() != static_cast<Eigen::Index>(n) * dof || s.v.size() != s.u.size()) {
    throw DimensionMismatch("state size does not match components x model dof");
  }
  return n;
}

// sum over rows of x_row K x_row^T
double row_energy(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& k) {
  return (x * k).cwiseProduct(x).sum();
}

}  // namespace

double projected_energy_norm(const State& s, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                             const DiscreteModel& model) {
  const int n = components_of(s, static_cast<int>(rows.cols()), model.dof());
  const Eigen::MatrixXd w = rows * by_node(s.u, n);
  const Eigen::MatrixXd wv = rows * by_node(s.v, n);
  return std::sqrt(row_energy(w, model.stiffness) + row_energy(wv, model.mass));
}

SyncError sync_error(const State& s, const SyncBasis& basis, const DiscreteModel& model) {
  const int n = components_of(s, basis.components(), model.dof());
  const Eigen::MatrixXd w = basis.normalizer * by_node(s.u, n);
  const Eigen::MatrixXd wv = basis.normalizer * by_node(s.v, n);
  SyncError out;
  double total = 0.0;
  for (int r = 0; r < basis.groups(); ++r) {
    const int row0 = basis.row_begin(r);
    const int rows = basis.partition.size(r) - 1;
    const double e2 = row_energy(w.middleRows(row0, rows), model.stiffness) +
                      row_energy(wv.middleRows(row0, rows), model.mass);
    out.per_group.push_back(std::sqrt(e2));
    total += e2;
  }
  out.total = std::sqrt(total);
  return out;
}

double state_energy_norm(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         const DiscreteModel& model, int components) {
  return std::sqrt(row_energy(by_node(u, components), model.stiffness) +
                   row_energy(by_node(v, components), model.mass));
}

SynchronizedState synchronized_state(const State& s, const GroupPartition& partition) {
  const int n = partition.components();
  if (s.u.size() % n != 0 || s.v.size() != s.u.size()) {
    throw DimensionMismatch("state size is not a multiple of the component count");
  }
  const Eigen::Index dof = s.u.size() / n;
  const int p = partition.groups();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, p);
  for (int r = 0; r < p; ++r) {
    e.col(r).segment(partition.begin(r), partition.size(r)).setOnes();
    e.col(r) /= std::sqrt(static_cast<double>(partition.size(r)));
  }
  SynchronizedState out;
  out.fields = e.transpose() * by_node(s.u, n);
  out.velocities = e.transpose() * by_node(s.v, n);
  out.u.resize(s.u.size());
  out.v.resize(s.v.size());
  Eigen::Map<Eigen::MatrixXd>(out.u.data(), n, dof) = e * out.fields;
  Eigen::Map<Eigen::MatrixXd>(out.v.data(), n, dof) = e * out.velocities;
  return out;
}

double pinning_residual(const State& s, const SyncBasis& basis) {
  const int n = basis.components();
  const SynchronizedState sync = synchronized_state(s, basis.partition);
  const Eigen::MatrixXd proj = basis.sync.transpose() * basis.gram_inv * basis.sync;
  const Eigen::MatrixXd ru = (by_node(s.u, n) - by_node(sync.u, n)) - proj * by_node(s.u, n);
  const Eigen::MatrixXd rv = (by_node(s.v, n) - by_node(sync.v, n)) - proj * by_node(s.v, n);
  return std::max(max_abs(ru), max_abs(rv));
}

double limit_energy(const Eigen::Ref<const Eigen::MatrixXd>& fields,
                    const Eigen::Ref<const Eigen::MatrixXd>& velocities,
                    const Eigen::Ref<const Eigen::MatrixXd>& beta, const DiscreteModel& model) {
  if (beta.rows() != beta.cols() || beta.rows() != fields.rows() ||
      velocities.rows() != fields.rows()) {
    throw DimensionMismatch("limit energy: B and the field count disagree");
  }
  if (!is_symmetric(beta, 1e-12)) throw InvalidInput("limit energy: B is not symmetric");
  const Eigen::MatrixXd mu = fields * model.mass;  // rows u_r^T M
  return row_energy(fields, model.stiffness) + (beta.cwiseProduct(mu * fields.transpose())).sum() +
         row_energy(velocities, model.mass);
}

LimitResidual limit_system_residual(const CoupledSystem& system, const State& s,
                                    const GroupPartition& partition,
                                    const Eigen::Ref<const Eigen::MatrixXd>& beta) {
  if (system.components() != partition.components()) {
    throw DimensionMismatch("limit residual: partition does not match the system");
  }
  const Eigen::VectorXd force = -(system.stiffness * s.u) - system.damping * s.v;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass(system.mass);
  State accel{mass.solve(force), Eigen::VectorXd::Zero(force.size()), s.t};

  const SynchronizedState fields = synchronized_state(s, partition);
  const SynchronizedState accel_fields = synchronized_state(accel, partition);
  const DiscreteModel& m = system.model;
  const Eigen::MatrixXd inertia = accel_fields.fields * m.mass;
  const Eigen::MatrixXd elastic = fields.fields * m.stiffness;
  const Eigen::MatrixXd coupling = beta * fields.fields * m.mass;

  LimitResidual out;
  out.residual = (inertia + elastic + coupling).norm();
  out.scale = std::max({inertia.norm(), elastic.norm(), coupling.norm()});
  return out;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value,
                   DecayWindow window) {
  if (t.size() != value.size()) throw DimensionMismatch("fit_decay: t and value differ in length");
  if (t.empty()) throw InsufficientData("fit_decay: empty series");
  const double floor = kDecayFloor * std::abs(value.front());
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window.start || t[i] > window.end) continue;
    if (!(value[i] > floor) || !std::isfinite(value[i])) continue;
    xs.push_back(t[i]);
    ys.push_back(std::log(value[i]));
  }
  if (xs.size() < 10) {
    std::ostringstream msg;
    msg << "fit_decay: only " << xs.size() << " usable samples in window [" << window.start
        << ", " << window.end << "], need at least 10";
    throw InsufficientData(msg.str());
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InsufficientData("fit_decay: window holds a single time");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }
  DecayFit fit;
  fit.omega = -slope;
  fit.prefactor = std::exp(intercept) / value.front();
  // A flat log-series is fitted exactly.
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.window = window;
  fit.samples = xs.size();
  return fit;
}

DecayVerdict decay_verdict(const std::vector<double>& t, const std::vector<double>& value,
                           DecayWindow window) {
  DecayVerdict v;
  if (value.empty()) throw InsufficientData("decay verdict: empty series");
  v.final_ratio = value.front() > 0.0 ? value.back() / value.front() : 0.0;
  v.no_uniform_decay = v.final_ratio >= 0.1;
  try {
    v.fit = fit_decay(t, value, window);
    v.fitted = true;
    v.decay_observed = v.fit.omega > 0.0 && v.fit.r_squared >= 0.9;
  } catch (const InsufficientData&) {
    v.fitted = false;
  }
  return v;
}

SpectrumReport spectrum(const CoupledSystem& system, int cap, double near_imaginary_tol) {
  const int n = system.unknowns();
  if (n > cap) {
    std::ostringstream msg;
    msg << "spectrum: " << n << " unknowns exceed the cap of " << cap
        << "; reduce the number of elements";
    throw SizeCapExceeded(msg.str());
  }
  // Generator in M-orthonormal modal coordinates (sqrt(lambda) q, q').
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> modes(
      Eigen::MatrixXd(system.stiffness), Eigen::MatrixXd(system.mass));
  if (modes.info() != Eigen::Success) throw SingularMatrix("spectrum: mass matrix is singular");
  const Eigen::MatrixXd& phi = modes.eigenvectors();
  const Eigen::VectorXd freq = modes.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  gen.topRightCorner(n, n) = freq.asDiagonal();
  gen.bottomLeftCorner(n, n) = -freq.asDiagonal().toDenseMatrix();
  gen.bottomRightCorner(n, n) = -phi.transpose() * system.damping * phi;

  Eigen::EigenSolver<Eigen::MatrixXd> es(gen, false);
  if (es.info() != Eigen::Success) throw SingularMatrix("spectrum: eigen-solve failed");

  SpectrumReport rep;
  rep.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + 2 * n);
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
  rep.abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& z : rep.eigenvalues) {
    rep.abscissa = std::max(rep.abscissa, z.real());
    if (std::abs(z.real()) <= near_imaginary_tol) ++rep.near_imaginary_count;
  }
  return rep;
}

}  // namespace pgsync
