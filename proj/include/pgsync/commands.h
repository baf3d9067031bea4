#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pgsync/diagnostics.h"
#include "pgsync/scenario.h"

namespace pgsync {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // conditions fail, negative verdict, numerical abort
inline constexpr int kExitUsage = 2;   // usage or configuration error

struct CommandResult {
  int exit_code = kExitOk;
  std::string report;  // human-readable text, also written to the output directory
};

/// Compatibility of A, strong compatibility of D and rank(R) = N - p.
CommandResult cmd_check(const Scenario& sc, const std::filesystem::path& out);

/// Writes A_reduced.csv, D_reduced.csv, R.csv and B.csv.
CommandResult cmd_reduce(const Scenario& sc, const std::filesystem::path& out);

/// Writes trajectory.csv (t, sync_total, sync_group_r..., full_energy,
/// limit_energy, pinning_residual), verdict.txt and plot.gp.
CommandResult cmd_simulate(const Scenario& sc, const std::filesystem::path& out,
                           bool export_matrices = false);

/// Writes spectrum.csv (re, im) and spectrum.txt.
CommandResult cmd_spectrum(const Scenario& sc, const std::filesystem::path& out,
                           bool export_matrices = false);

struct RateRequest {
  std::filesystem::path input;
  std::string column;                 // empty: sync_total, else the second column
  std::optional<DecayWindow> window;  // empty: (T/4, T) with T the last time
};

/// Re-fits the decay rate of one column of an existing trajectory CSV.
CommandResult cmd_rate(const RateRequest& req, const std::filesystem::path& out);

/// Writes M_h, K_h, G_h, A and D as CSV.
void export_matrices(const Scenario& sc, const DiscreteModel& model,
                     const std::filesystem::path& out);

enum class Verb { kCheck, kReduce, kSimulate, kSpectrum, kRate };

struct RunOptions {
  Verb verb = Verb::kCheck;
  std::vector<std::filesystem::path> configs;
  std::filesystem::path out = "out";
  bool export_matrices = false;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  // rate only
  std::optional<std::filesystem::path> input;
  std::string column;
  std::optional<DecayWindow> window;
};

/// Runs one verb over every configured scenario. With several configs each
/// scenario writes to its own subdirectory of `out` and up to `jobs` run
/// concurrently. Returns the largest exit code.
int run(const RunOptions& opts, std::ostream& log);

}  // namespace pgsync
