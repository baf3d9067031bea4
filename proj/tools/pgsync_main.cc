// pgsync: synchronization-by-groups checks and simulations from scenario files.
//
//   pgsync check    --config s1.json --out out/s1
//   pgsync reduce   --config s1.json --out out/s1
//   pgsync simulate --config s1.json --out out/s1 [--export-matrices] [--seed 7]
//   pgsync spectrum --config s1.json --out out/s1
//   pgsync rate     --input out/s1/trajectory.csv [--column sync_total] [--window 10 40]
//   pgsync simulate --config a.json --config b.json --jobs 2 --out out/sweep

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgsync/commands.h"
#include "pgsync/errors.h"

int main(int argc, char** argv) {
  CLI::App app{"Synchronization by p-groups of coupled damped wave and beam systems"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out = "out";
  bool export_mats = false;
  std::int64_t seed = -1;
  int jobs = 1;
  std::string input;
  std::string column;
  std::vector<double> window;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", configs, "scenario file (JSON); repeat for a sweep");
    if (config_required) c->required();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_flag("--export-matrices", export_mats, "write M_h, K_h, G_h, A, D as CSV");
    sub->add_option("--seed", seed, "override the scenario seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", jobs, "parallel scenarios for a sweep")->check(CLI::PositiveNumber);
  };

  struct VerbEntry {
    const char* name;
    const char* help;
    pgsync::Verb verb;
  };
  const VerbEntry verbs[] = {
      {"check", "compatibility and rank conditions", pgsync::Verb::kCheck},
      {"reduce", "reduced and limit coupling matrices", pgsync::Verb::kReduce},
      {"simulate", "simulate and report the synchronization verdict", pgsync::Verb::kSimulate},
      {"spectrum", "eigenvalues of the first-order generator", pgsync::Verb::kSpectrum},
      {"rate", "fit the decay rate of a trajectory CSV", pgsync::Verb::kRate},
  };
  std::vector<std::pair<CLI::App*, pgsync::Verb>> subs;
  for (const auto& v : verbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    common(sub, v.verb != pgsync::Verb::kRate);
    if (v.verb == pgsync::Verb::kRate) {
      sub->add_option("--input", input, "trajectory CSV (default: <out>/trajectory.csv)");
      sub->add_option("--column", column, "column to fit (default: sync_total)");
      sub->add_option("--window", window, "fit window START END")->expected(2);
    }
    subs.emplace_back(sub, v.verb);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pgsync::kExitUsage;
  }

  pgsync::RunOptions opts;
  for (const auto& [sub, verb] : subs) {
    if (sub->parsed()) opts.verb = verb;
  }
  opts.configs.assign(configs.begin(), configs.end());
  opts.out = out;
  opts.export_matrices = export_mats;
  if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);
  opts.jobs = jobs;
  if (!input.empty()) opts.input = input;
  opts.column = column;
  if (window.size() == 2) opts.window = pgsync::DecayWindow{window[0], window[1]};

  try {
    return pgsync::run(opts, std::cout);
  } catch (const pgsync::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pgsync::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pgsync::kExitFailed;
  }
}
