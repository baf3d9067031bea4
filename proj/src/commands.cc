#include "pgsync/commands.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pgsync/csv.h"
#include "pgsync/errors.h"
#include "pgsync/linalg.h"

namespace pgsync {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> provenance(const Scenario& sc) {
  return {"scenario=" + sc.name + " seed=" + std::to_string(sc.seed)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string fmt(double x) { return csv::format_number(x); }

std::string matrix_text(const Eigen::MatrixXd& m) {
  std::ostringstream s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s << "    ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s << (j ? "  " : "") << fmt(m(i, j));
    s << '\n';
  }
  return s.str();
}

std::string partition_text(const GroupPartition& p) {
  std::ostringstream s;
  s << "N = " << p.components() << ", p = " << p.groups() << ", sizes = [";
  for (int r = 0; r < p.groups(); ++r) s << (r ? ", " : "") << p.size(r);
  s << "]";
  return s.str();
}

}  // namespace

void export_matrices(const Scenario& sc, const DiscreteModel& model, const fs::path& out) {
  fs::create_directories(out);
  const auto tag = provenance(sc);
  csv::write_matrix(out / "M_h.csv", model.mass, tag);
  csv::write_matrix(out / "K_h.csv", model.stiffness, tag);
  csv::write_matrix(out / "G_h.csv", model.damping, tag);
  csv::write_matrix(out / "A.csv", sc.a, tag);
  csv::write_matrix(out / "D.csv", sc.d, tag);
}

CommandResult cmd_check(const Scenario& sc, const fs::path& out) {
  fs::create_directories(out);
  const CouplingMatrix a = sc.coupling_a();
  const CouplingMatrix d = sc.coupling_d();
  const GroupPartition& part = sc.partition;
  const int target = part.components() - part.groups();

  const CompatibilityReport compat = check_cp_compatibility(a, part);
  const StrongCompatibilityReport strong = check_strong_compatibility(d, part);
  const RankReport ranks = rank_diagnostics(a, d, part);
  const bool rank_ok = strong.strong && strong.factor_rank == target;

  std::ostringstream s;
  s << "scenario " << sc.name << " (seed " << sc.seed << ")\n";
  s << "partition: " << partition_text(part) << "\n\n";
  s << "C_p-compatibility of A: " << (compat.compatible ? "holds" : "VIOLATED")
    << " (max ||C_p A e_r|| = " << fmt(compat.residual) << ")\n";
  s << "  block row sums alpha_rs:\n" << matrix_text(compat.alpha);
  s << "  row-sum-by-blocks criterion: " << (compat.block_criterion ? "holds" : "fails")
    << " (max deviation " << fmt(compat.block_row_sum_deviation) << ")\n";
  s << "strong C_p-compatibility of D: " << (strong.strong ? "holds" : "VIOLATED")
    << " (max ||D e_r|| = " << fmt(strong.residual) << ")\n";
  if (strong.strong) {
    s << "  R (D = C_p^T R C_p), reconstruction residual " << fmt(strong.reconstruction_residual)
      << ":\n"
      << matrix_text(*strong.factor);
    s << "  rank(R) = " << strong.factor_rank << " (required N - p = " << target << ")\n";
  }
  s << "rank(D) = " << ranks.rank_d << ", rank(C_p D) = " << ranks.rank_cp_d
    << ", minimal rank conditions: " << yes_no(ranks.minimal_rank_ok) << '\n';
  s << "Ker(D) and Ker(C_p) bi-orthogonal: " << yes_no(ranks.biorthogonal) << '\n';
  s << "Kalman rank [D, AD, ..., A^(N-1) D] = " << ranks.kalman_rank << '\n';

  std::vector<std::string> violated;
  if (!compat.compatible) {
    violated.push_back("C_p-compatibility: C_p A " +
                       kernel_vector_name(compat.worst_kernel_vector) + " != 0");
  }
  if (!strong.strong) {
    violated.push_back("strong C_p-compatibility: D " +
                       kernel_vector_name(strong.worst_kernel_vector) + " != 0");
  } else if (strong.factor_rank != target) {
    violated.push_back("rank(R) = " + std::to_string(strong.factor_rank) + " < N - p = " +
                       std::to_string(target));
  }
  s << '\n';
  if (violated.empty()) {
    s << "RESULT: all conditions for uniform synchronization by p-groups hold\n";
  } else {
    s << "RESULT: conditions violated\n";
    for (const auto& v : violated) s << "  - " << v << '\n';
  }

  {
    std::ofstream table(out / "check.csv");
    if (!table) throw ConfigError("cannot write " + (out / "check.csv").string());
    for (const auto& c : provenance(sc)) table << "# " << c << '\n';
    table << "condition,holds,value\n";
    auto row = [&](const char* name, bool holds, double value) {
      table << name << ',' << (holds ? 1 : 0) << ',' << fmt(value) << '\n';
    };
    row("cp_compatibility_residual", compat.compatible, compat.residual);
    row("strong_cp_compatibility_residual", strong.strong, strong.residual);
    row("rank_R", rank_ok, strong.factor_rank);
    row("rank_D", ranks.rank_d == target, ranks.rank_d);
    row("rank_CpD", ranks.rank_cp_d == target, ranks.rank_cp_d);
    row("minimal_rank", ranks.minimal_rank_ok, ranks.rank_d);
    row("biorthogonal_sigma_min", ranks.biorthogonal, ranks.pairing_sigma_min);
    row("kalman_rank", ranks.kalman_rank == target, ranks.kalman_rank);
  }
  csv::write_matrix(out / "alpha.csv", compat.alpha, provenance(sc));
  write_text(out / "check.txt", s.str());

  return {compat.compatible && strong.strong && rank_ok ? kExitOk : kExitFailed, s.str()};
}

CommandResult cmd_reduce(const Scenario& sc, const fs::path& out) {
  fs::create_directories(out);
  SyncReduction red;
  try {
    red = reduce_system(sc.coupling_a(), sc.coupling_d(), sc.partition);
  } catch (const IncompatibleCoupling& e) {
    const std::string msg = std::string("reduction refused: ") + e.what() + "\n";
    write_text(out / "reduce.txt", msg);
    return {kExitFailed, msg};
  }
  const auto tag = provenance(sc);
  csv::write_matrix(out / "A_reduced.csv", red.a_reduced, tag);
  csv::write_matrix(out / "D_reduced.csv", red.d_reduced, tag);
  csv::write_matrix(out / "R.csv", red.factor, tag);
  csv::write_matrix(out / "B.csv", red.beta, tag);

  std::ostringstream s;
  s << "scenario " << sc.name << ": reduced system for W = (C_p C_p^T)^(-1/2) C_p U\n";
  s << "A_reduced:\n" << matrix_text(red.a_reduced);
  s << "D_reduced:\n" << matrix_text(red.d_reduced);
  s << "R:\n" << matrix_text(red.factor);
  s << "B (limit coupling beta_rs):\n" << matrix_text(red.beta);
  s << "intertwining residuals: ||M A - A_reduced M|| = " << fmt(red.intertwining_residual_a)
    << ", ||M D - D_reduced M|| = " << fmt(red.intertwining_residual_d) << '\n';
  s << "D_reduced vs (C_p C_p^T)^(1/2) R (C_p C_p^T)^(1/2): " << fmt(red.d_reduced_crosscheck)
    << '\n';
  write_text(out / "reduce.txt", s.str());
  return {kExitOk, s.str()};
}

CommandResult cmd_simulate(const Scenario& sc, const fs::path& out, bool export_mats) {
  fs::create_directories(out);
  const CoupledSystem sys = couple(assemble(sc.model), sc.coupling_a(), sc.coupling_d());
  if (export_mats) export_matrices(sc, sys.model, out);
  const SyncBasis basis = build_sync_matrix(sc.partition);
  const CouplingMatrix a = sc.coupling_a();
  std::optional<Eigen::MatrixXd> beta;
  if (check_cp_compatibility(a, sc.partition).compatible) beta = beta_matrix(a, sc.partition);

  std::vector<std::string> cols{"sync_total"};
  for (int r = 0; r < sc.partition.groups(); ++r) {
    cols.push_back("sync_group_" + std::to_string(r + 1));
  }
  cols.insert(cols.end(), {"full_energy", "limit_energy", "pinning_residual"});
  const Observer obs{cols, [&](const State& s) {
                       const SyncError e = sync_error(s, basis, sys.model);
                       std::vector<double> row{e.total};
                       row.insert(row.end(), e.per_group.begin(), e.per_group.end());
                       row.push_back(0.5 * s.v.dot(sys.mass * s.v) +
                                     0.5 * s.u.dot(sys.stiffness * s.u));
                       if (beta) {
                         const SynchronizedState fs = synchronized_state(s, sc.partition);
                         row.push_back(limit_energy(fs.fields, fs.velocities, *beta, sys.model));
                       } else {
                         row.push_back(std::numeric_limits<double>::quiet_NaN());
                       }
                       row.push_back(pinning_residual(s, basis));
                       return row;
                     }};

  const State init = make_initial_state(sc, sys);
  Trajectory traj;
  try {
    traj = simulate(sys, init, sc.sim, {obs});
  } catch (const NonFiniteState& e) {
    const std::string msg = std::string("simulation aborted: ") + e.what() + "\n";
    write_text(out / "verdict.txt", msg);
    return {kExitFailed, msg};
  }

  csv::Table t;
  t.columns.push_back("t");
  t.columns.insert(t.columns.end(), traj.columns.begin(), traj.columns.end());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    row.insert(row.end(), traj.rows[i].begin(), traj.rows[i].end());
    t.rows.push_back(std::move(row));
  }
  csv::write_table(out / "trajectory.csv", t, provenance(sc));

  const DecayWindow window = sc.window();
  const std::vector<double> sync = traj.series("sync_total");
  const DecayVerdict v = decay_verdict(traj.times, sync, window);

  std::ostringstream s;
  s << "scenario " << sc.name << " (seed " << sc.seed << ")\n";
  s << "model " << to_string(sc.model.kind) << ", " << sys.model.dof() << " dof x "
    << sys.components() << " components, dt = " << fmt(sc.sim.dt)
    << ", T = " << fmt(sc.sim.horizon) << ", steps = " << traj.steps << '\n';
  s << "sync_error(0) = " << fmt(sync.front()) << ", sync_error(T) = " << fmt(sync.back())
    << ", ratio = " << fmt(v.final_ratio) << '\n';
  if (v.fitted) {
    s << "decay fit on [" << fmt(window.start) << ", " << fmt(window.end)
      << "]: omega = " << fmt(v.fit.omega) << ", M = " << fmt(v.fit.prefactor)
      << ", r^2 = " << fmt(v.fit.r_squared) << ", samples = " << v.fit.samples << '\n';
  } else {
    s << "decay fit on [" << fmt(window.start) << ", " << fmt(window.end)
      << "]: insufficient data above the noise floor\n";
  }
  s << "max relative energy increase per step = " << fmt(traj.max_energy_increase) << '\n';
  s << "verdict: "
    << (v.decay_observed   ? "exponential synchronization observed"
        : v.no_uniform_decay ? "no uniform decay of the synchronization error"
                             : "inconclusive")
    << '\n';

  int code = kExitOk;
  if (sc.expect == Expectation::kDecay && !v.decay_observed) code = kExitFailed;
  if (sc.expect == Expectation::kNoDecay && !v.no_uniform_decay) code = kExitFailed;
  if (sc.expect != Expectation::kNone) {
    s << "expected: " << (sc.expect == Expectation::kDecay ? "decay" : "no_decay") << " -> "
      << (code == kExitOk ? "met" : "NOT met") << '\n';
  }
  write_text(out / "verdict.txt", s.str());

  std::ostringstream gp;
  gp << "# gnuplot script for trajectory.csv, scenario " << sc.name << " seed " << sc.seed << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale y\n"
     << "set xlabel 't'\n"
     << "set ylabel 'synchronization error (energy norm)'\n"
     << "plot 'trajectory.csv' using 1:2 with lines";
  for (int r = 0; r < sc.partition.groups(); ++r) {
    gp << ", '' using 1:" << 3 + r << " with lines";
  }
  gp << '\n';
  write_text(out / "plot.gp", gp.str());
  return {code, s.str()};
}

CommandResult cmd_spectrum(const Scenario& sc, const fs::path& out, bool export_mats) {
  fs::create_directories(out);
  const CoupledSystem sys = couple(assemble(sc.model), sc.coupling_a(), sc.coupling_d());
  if (export_mats) export_matrices(sc, sys.model, out);
  const SpectrumReport rep = spectrum(sys);

  csv::Table t;
  t.columns = {"re", "im"};
  for (const auto& z : rep.eigenvalues) t.rows.push_back({z.real(), z.imag()});
  csv::write_table(out / "spectrum.csv", t, provenance(sc));

  std::ostringstream s;
  s << "scenario " << sc.name << ": generator of order " << rep.eigenvalues.size() << '\n';
  s << "spectral abscissa = " << fmt(rep.abscissa) << '\n';
  s << "eigenvalues with |Re| <= " << fmt(kNearImaginaryTol) << ": "
    << rep.near_imaginary_count << '\n';
  write_text(out / "spectrum.txt", s.str());
  return {kExitOk, s.str()};
}

CommandResult cmd_rate(const RateRequest& req, const fs::path& out) {
  fs::create_directories(out);
  const csv::Table t = csv::read_table(req.input);
  if (t.columns.size() < 2 || t.rows.empty()) {
    throw ConfigError("rate: " + req.input.string() + " needs a time column and data");
  }
  std::string column = req.column;
  if (column.empty()) {
    const bool has_sync =
        std::find(t.columns.begin(), t.columns.end(), "sync_total") != t.columns.end();
    column = has_sync ? "sync_total" : t.columns[1];
  }
  const std::vector<double> times = t.column(0);
  const std::vector<double> values = t.column(column);
  const DecayWindow window = req.window.value_or(DecayWindow{0.25 * times.back(), times.back()});
  const DecayFit fit = fit_decay(times, values, window);

  std::ostringstream s;
  s << "source " << req.input.filename().string() << ", column " << column << '\n';
  s << "window [" << fmt(window.start) << ", " << fmt(window.end) << "], samples "
    << fit.samples << '\n';
  s << "omega = " << fmt(fit.omega) << '\n';
  s << "M = " << fmt(fit.prefactor) << '\n';
  s << "r^2 = " << fmt(fit.r_squared) << '\n';
  write_text(out / "rate.txt", s.str());
  return {kExitOk, s.str()};
}

int run(const RunOptions& opts, std::ostream& log) {
  std::mutex log_mutex;
  auto emit = [&](const std::string& text) {
    const std::lock_guard<std::mutex> lock(log_mutex);
    log << text;
    log.flush();
  };

  if (opts.verb == Verb::kRate && opts.configs.empty()) {
    if (!opts.input) throw ConfigError("rate needs --input or --config");
    const CommandResult r = cmd_rate({*opts.input, opts.column, opts.window}, opts.out);
    emit(r.report);
    return r.exit_code;
  }
  if (opts.configs.empty()) throw ConfigError("no --config given");

  // Load everything first so a bad config fails before any run starts.
  std::vector<Scenario> scenarios;
  for (const auto& path : opts.configs) {
    Scenario sc = load_scenario(path);
    if (opts.seed) sc.seed = *opts.seed;
    scenarios.push_back(std::move(sc));
  }
  std::vector<fs::path> outs;
  if (scenarios.size() == 1) {
    outs.push_back(opts.out);
  } else {
    std::set<std::string> used;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      std::string dir = scenarios[i].name;
      if (!used.insert(dir).second) dir += "_" + std::to_string(i);
      used.insert(dir);
      outs.push_back(opts.out / dir);
    }
  }

  auto run_one = [&](std::size_t i) -> int {
    const Scenario& sc = scenarios[i];
    try {
      CommandResult r;
      switch (opts.verb) {
        case Verb::kCheck: r = cmd_check(sc, outs[i]); break;
        case Verb::kReduce: r = cmd_reduce(sc, outs[i]); break;
        case Verb::kSimulate: r = cmd_simulate(sc, outs[i], opts.export_matrices); break;
        case Verb::kSpectrum: r = cmd_spectrum(sc, outs[i], opts.export_matrices); break;
        case Verb::kRate: {
          const fs::path input = opts.input.value_or(outs[i] / "trajectory.csv");
          r = cmd_rate({input, opts.column, opts.window ? opts.window : sc.fit_window}, outs[i]);
          break;
        }
      }
      emit(r.report);
      return r.exit_code;
    } catch (const ConfigError& e) {
      emit(std::string("error: ") + e.what() + "\n");
      return kExitUsage;
    } catch (const InvalidInput& e) {
      emit(std::string("error: ") + e.what() + "\n");
      return kExitUsage;
    } catch (const std::exception& e) {
      emit(std::string("error: ") + e.what() + "\n");
      return kExitFailed;
    }
  };

  std::vector<int> codes(scenarios.size(), kExitOk);
  const auto workers =
      static_cast<std::size_t>(std::clamp<int>(opts.jobs, 1, static_cast<int>(scenarios.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) codes[i] = run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) codes[i] = run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return *std::max_element(codes.begin(), codes.end());
}

}  // namespace pgsync
