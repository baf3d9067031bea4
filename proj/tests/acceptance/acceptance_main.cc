// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "pgsync/diagnostics.h"
#include "pgsync/integrator.h"
#include "pgsync/linalg.h"
#include "pgsync/models.h"
#include "pgsync/pgroup_algebra.h"
#include "pgsync/scenario.h"
#include "test_util.h"

namespace pgsync {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Scenario scenario(const std::string& file) { return load_scenario(fs::path(PGSYNC_SCENARIO_DIR) / file); }

CoupledSystem build(const Scenario& sc) {
  return couple(assemble(sc.model), sc.coupling_a(), sc.coupling_d());
}

// Applies a row operator P (rows x N) at every node of a node-major vector.
Eigen::VectorXd per_node(const Eigen::MatrixXd& p, const Eigen::VectorXd& x) {
  const Eigen::Index n = p.cols();
  const Eigen::Map<const Eigen::MatrixXd> nodes(x.data(), n, x.size() / n);
  const Eigen::MatrixXd out = p * nodes;
  return Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
}

double rel(const Eigen::MatrixXd& diff, const Eigen::MatrixXd& ref) {
  return diff.norm() / std::max(ref.norm(), 1.0);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd projector_with_kernel(const Eigen::MatrixXd& kernel_cols) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel_cols);
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(kernel_cols.rows(), kernel_cols.cols());
  return Eigen::MatrixXd::Identity(kernel_cols.rows(), kernel_cols.rows()) - q * q.transpose();
}

Outcome a1_algebra() {
  constexpr double kTol = 1e-10;
  const auto start = Clock::now();
  testing::Rng rng(2024);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const GroupPartition part = rng.partition(4, 10);
    const int n = part.components();
    const int p = part.groups();
    const Eigen::MatrixXd raw = testing::raw_sync_matrix(part);
    const Eigen::MatrixXd q = testing::normalized_indicators(part);
    const SyncBasis basis = build_sync_matrix(part);

    std::vector<double> errs;
    errs.push_back(max_abs(basis.sync - raw));
    errs.push_back(max_abs(basis.sync * basis.kernel));
    errs.push_back(max_abs(basis.normalizer * basis.normalizer.transpose() -
                           Eigen::MatrixXd::Identity(n - p, n - p)));
    errs.push_back(max_abs(basis.gram_sqrt * basis.normalizer - raw));

    const Eigen::MatrixXd a = testing::random_compatible(rng, part);
    const Eigen::MatrixXd r = rng.spd(n - p);
    Eigen::MatrixXd d = raw.transpose() * r * raw;
    d = 0.5 * (d + d.transpose()).eval();
    const SyncReduction red =
        reduce_system(CouplingMatrix::stiffness(a), CouplingMatrix::damping(d), part);
    const Eigen::MatrixXd& m = basis.normalizer;
    errs.push_back(rel(m * a - red.a_reduced * m, a));
    errs.push_back(rel(m * d - red.d_reduced * m, d));
    errs.push_back(rel(red.factor - r, r));
    errs.push_back(rel(red.beta - red.beta.transpose(), red.beta));
    errs.push_back(rel(red.beta - q.transpose() * a * q, a));

    Eigen::MatrixXd dr;
    switch (trial % 4) {
      case 0:
        dr = rng.psd(n, n - p);
        break;
      case 1:
        dr = d;
        break;
      case 2: {
        Eigen::MatrixXd ker = q;
        ker.col(p - 1) = testing::indicator_complement(part).col(0);
        dr = projector_with_kernel(ker);
        break;
      }
      default:
        dr = rng.psd(n, rng.integer(0, n - p - 1));
        break;
    }
    dr = 0.5 * (dr + dr.transpose()).eval();
    const RankReport ranks =
        rank_diagnostics(CouplingMatrix::stiffness(a), CouplingMatrix::damping(dr), part);

    double case_worst = 0.0;
    for (double e : errs) case_worst = std::max(case_worst, e);
    worst = std::max(worst, case_worst);
    if (case_worst > kTol || ranks.minimal_rank_ok != ranks.biorthogonal) ++failures;
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = failures == 0 && elapsed < 5.0;
  o.detail = "200 cases, failures " + std::to_string(failures) + ", worst relative error " +
             num(worst) + ", " + num(elapsed) + " s";
  return o;
}

// ---------------------------------------------------------------------------

Outcome a2_reduction() {
  const auto start = Clock::now();
  Scenario sc = scenario("s1_wave_boundary.json");
  sc.sim.horizon = 10.0;
  const CoupledSystem full = build(sc);
  const SyncReduction red = reduce_system(sc.coupling_a(), sc.coupling_d(), sc.partition);
  const CoupledSystem reduced = couple(full.model, CouplingMatrix::stiffness(red.a_reduced),
                                       CouplingMatrix::damping(red.d_reduced));
  const Eigen::MatrixXd& m = red.basis.normalizer;

  const State init = make_initial_state(sc, full);
  const State w0{per_node(m, init.u), per_node(m, init.v), 0.0};
  const Trajectory tf = simulate(full, init, sc.sim, {}, true);
  const Trajectory tr = simulate(reduced, w0, sc.sim, {}, true);

  double gap = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < tf.states.size(); ++i) {
    const Eigen::VectorXd wu = per_node(m, tf.states[i].u);
    const Eigen::VectorXd wv = per_node(m, tf.states[i].v);
    gap = std::max(gap, std::hypot((wu - tr.states[i].u).norm(), (wv - tr.states[i].v).norm()));
    scale = std::max(scale, std::hypot(wu.norm(), wv.norm()));
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = tf.states.size() == tr.states.size() && gap <= 1e-8 * scale && elapsed < 30.0;
  o.detail = "max relative gap " + num(gap / scale) + " over T = 10, " + num(elapsed) + " s";
  return o;
}

// ---------------------------------------------------------------------------

struct SyncRun {
  Scenario sc;
  Trajectory traj;
  DecayVerdict verdict;
  double seconds = 0.0;
};

SyncRun run_sync(const std::string& file, std::vector<Observer> extra = {}) {
  const auto start = Clock::now();
  SyncRun r{scenario(file), {}, {}, 0.0};
  const CoupledSystem sys = build(r.sc);
  const SyncBasis basis = build_sync_matrix(r.sc.partition);
  std::vector<Observer> obs{{{"sync"}, [&](const State& s) {
                               return std::vector<double>{sync_error(s, basis, sys.model).total};
                             }}};
  for (auto& o : extra) obs.push_back(std::move(o));
  r.traj = simulate(sys, make_initial_state(r.sc, sys), r.sc.sim, obs);
  r.verdict = decay_verdict(r.traj.times, r.traj.series("sync"), r.sc.window());
  r.seconds = seconds_since(start);
  return r;
}

bool decay_ok(const SyncRun& r, std::string& detail) {
  const DecayVerdict& v = r.verdict;
  const bool ok = v.fitted && v.fit.omega > 0.0 && v.fit.r_squared >= 0.9 && v.final_ratio <= 1e-3 &&
                  r.traj.max_energy_increase <= 1e-12 && r.seconds < 60.0;
  detail += r.sc.name + (ok ? " ok" : " FAILED") + " (omega " + num(v.fit.omega) + ", r^2 " +
            num(v.fit.r_squared) + ", ratio " + num(v.final_ratio) + ", energy increase " +
            num(r.traj.max_energy_increase) + ", " + num(r.seconds) + " s)";
  return ok;
}

// Limit dynamics along S1. The observers record the pinning residual and the
// residual of the limit system on the extracted fields.
Outcome a5_limit(const SyncRun& s1, const Eigen::MatrixXd& beta) {
  const std::vector<double> pin = s1.traj.series("pinning");
  const std::vector<double> res = s1.traj.series("limit_residual");
  const std::vector<double> scale = s1.traj.series("limit_scale");
  double worst_pin = 0.0;
  for (double x : pin) worst_pin = std::max(worst_pin, x);

  // Envelope r(0) M exp(-omega t) from the fitted synchronization rate.
  const DecayFit& fit = s1.verdict.fit;
  double worst_excess = 0.0;
  bool residual_ok = s1.verdict.fitted;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double t = s1.traj.times[i];
    const double bound =
        res.front() * std::max(fit.prefactor, 1.0) * std::exp(-fit.omega * t) + 1e-10 * scale[i];
    if (res[i] > bound) residual_ok = false;
    worst_excess = std::max(worst_excess, res[i] / scale[i]);
  }

  // Independent run of the conservative limit system from the extracted fields.
  const Scenario& sc = s1.sc;
  const CoupledSystem full = build(sc);
  const SynchronizedState init = synchronized_state(make_initial_state(sc, full), sc.partition);
  const int groups = sc.partition.groups();
  const CoupledSystem limit = couple(full.model, CouplingMatrix::stiffness(beta),
                                     CouplingMatrix::damping(Eigen::MatrixXd::Zero(groups, groups)));
  const auto flat = [&](const Eigen::MatrixXd& fields) {
    const Eigen::MatrixXd nodes = fields;  // p x dof, column-major = node-major flat
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(nodes.data(), nodes.size()));
  };
  const auto energy = [&](const State& s) {
    const Eigen::Map<const Eigen::MatrixXd> u(s.u.data(), groups, full.model.dof());
    const Eigen::Map<const Eigen::MatrixXd> v(s.v.data(), groups, full.model.dof());
    return std::vector<double>{limit_energy(u, v, beta, full.model)};
  };
  const Trajectory lt = simulate(limit, State{flat(init.fields), flat(init.velocities), 0.0}, sc.sim,
                                 {{{"E"}, energy}});
  const std::vector<double> e = lt.series("E");
  double drift = 0.0;
  for (double x : e) drift = std::max(drift, std::abs(x - e.front()) / e.front());

  Outcome o;
  o.pass = worst_pin <= 1e-12 && residual_ok && drift <= 1e-10;
  o.detail = "pinning " + num(worst_pin) + ", limit residual " + (residual_ok ? "within" : "ABOVE") +
             " envelope (max relative " + num(worst_excess) + "), limit energy drift " + num(drift);
  return o;
}

// ---------------------------------------------------------------------------

Outcome a6_spectrum() {
  const auto start = Clock::now();
  Scenario sc = scenario("s1_wave_boundary.json");
  sc.model.elements = 16;
  const CoupledSystem s1 = build(sc);
  const SpectrumReport rep = spectrum(s1);

  Scenario full_damping = sc;
  full_damping.d = Eigen::MatrixXd::Identity(4, 4);
  const SpectrumReport damped = spectrum(build(full_damping));

  const int target = 2 * sc.partition.groups() * s1.model.dof();
  bool rest_stable = true;
  for (const auto& l : rep.eigenvalues) {
    if (std::abs(l.real()) > kNearImaginaryTol && l.real() >= 0.0) rest_stable = false;
  }
  const double elapsed = seconds_since(start);
  Outcome o;
  o.pass = damped.abscissa < 0.0 && rep.near_imaginary_count == target && rest_stable &&
           elapsed < 20.0;
  o.detail = "D = I abscissa " + num(damped.abscissa) + "; S1 near-imaginary " +
             std::to_string(rep.near_imaginary_count) + " of " +
             std::to_string(rep.eigenvalues.size()) + " (expected " + std::to_string(target) +
             "), others " + (rest_stable ? "in Re < 0" : "NOT all in Re < 0") + ", " + num(elapsed) +
             " s";
  return o;
}

// ---------------------------------------------------------------------------

double oscillator_error(double dt) {
  ModelSpec spec;
  spec.kind = ModelKind::kOscillator;
  const CoupledSystem sys = couple(assemble(spec), CouplingMatrix::stiffness(Eigen::MatrixXd::Zero(2, 2)),
                                   CouplingMatrix::damping(Eigen::MatrixXd::Identity(2, 2)));
  SimConfig cfg;
  cfg.dt = dt;
  cfg.horizon = 10.0;
  cfg.stride = 1000000;
  const State init{Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2), 0.0};
  const Trajectory t = simulate(sys, init, cfg, {}, true);
  const State& last = t.states.back();
  // u'' + u' + u = 0, u(0) = 1, u'(0) = 0.
  const double wd = std::sqrt(3.0) / 2.0;
  const double x = last.t;
  const double u = std::exp(-x / 2) * (std::cos(wd * x) + std::sin(wd * x) / (2 * wd));
  const double v = -std::exp(-x / 2) * std::sin(wd * x) / wd;
  return std::max((last.u.array() - u).abs().maxCoeff(), (last.v.array() - v).abs().maxCoeff());
}

Outcome a7_order() {
  const double e1 = oscillator_error(0.1);
  const double e2 = oscillator_error(0.05);
  const double e3 = oscillator_error(0.025);
  const double r1 = e1 / e2;
  const double r2 = e2 / e3;
  Outcome o;
  o.pass = r1 >= 3.6 && r1 <= 4.4 && r2 >= 3.6 && r2 <= 4.4;
  o.detail = "errors " + num(e1) + ", " + num(e2) + ", " + num(e3) + "; ratios " + num(r1) + ", " +
             num(r2);
  return o;
}

// ---------------------------------------------------------------------------

int report(const std::string& id, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

int run_all() {
  int failed = 0;
  failed += report("A1 algebra", a1_algebra);
  failed += report("A2 reduction equivalence", a2_reduction);

  // S1 carries the extra observers used by A5.
  const Scenario s1sc = scenario("s1_wave_boundary.json");
  const CoupledSystem s1sys = build(s1sc);
  const SyncBasis basis = build_sync_matrix(s1sc.partition);
  const Eigen::MatrixXd beta = beta_matrix(s1sc.coupling_a(), s1sc.partition);
  std::vector<Observer> extra{{{"pinning", "limit_residual", "limit_scale"}, [&](const State& s) {
                                 const LimitResidual lr =
                                     limit_system_residual(s1sys, s, s1sc.partition, beta);
                                 return std::vector<double>{pinning_residual(s, basis), lr.residual,
                                                            lr.scale};
                               }}};
  SyncRun s1;
  bool s1_ok = false;
  failed += report("A3 uniform synchronization", [&] {
    s1 = run_sync("s1_wave_boundary.json", std::move(extra));
    s1_ok = true;
    Outcome o;
    const bool ok1 = decay_ok(s1, o.detail);
    o.detail += "; ";
    const bool ok2 = decay_ok(run_sync("s2_wave_distributed.json"), o.detail);
    o.detail += "; ";
    const bool ok3 = decay_ok(run_sync("s3_beam_distributed.json"), o.detail);
    o.pass = ok1 && ok2 && ok3;
    return o;
  });

  failed += report("A4 necessity", [] {
    const SyncRun r = run_sync("s4_rank_deficient.json");
    Outcome o;
    o.pass = r.verdict.final_ratio >= 0.1 && r.verdict.no_uniform_decay;
    o.detail = "sync_error(T)/sync_error(0) = " + num(r.verdict.final_ratio);
    return o;
  });

  failed += report("A5 limit dynamics", [&] {
    if (!s1_ok) return Outcome{false, "S1 run unavailable"};
    return a5_limit(s1, beta);
  });
  failed += report("A6 spectrum", a6_spectrum);
  failed += report("A7 integrator order", a7_order);

  std::printf("%d of 7 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace pgsync

int main() { return pgsync::run_all(); }
