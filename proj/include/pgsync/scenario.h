#pragma once

// Scenario files: JSON documents describing one reproducible run.
//
//   {
//     "name": "s1",
//     "partition": [2, 2],
//     "A": [[2, -1, 0, 0], ...] | "relative/path/A.csv",
//     "D": ...,
//     "model": {"kind": "wave_boundary", "elements": 64,
//               "damping_region": [0.2, 0.2], "damping_floor": 1.0},
//     "sim": {"dt": 1e-3, "T": 40, "stride": 10},
//     "initial": {"kind": "random", "seed": 7, "modes": 10}
//              | {"kind": "fields", "u": ["sine 1", "bump"], "v": ["zero", "zero"]}
//              | {"kind": "perturbed", "u": [...], "v": [...], "epsilon": 1e-3, "seed": 7},
//     "fit_window": [10, 40],
//     "expect": "decay" | "no_decay"
//   }

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pgsync/diagnostics.h"
#include "pgsync/integrator.h"
#include "pgsync/models.h"
#include "pgsync/pgroup_algebra.h"

namespace pgsync {

enum class InitialKind { kRandom, kFields, kPerturbed };

struct InitialSpec {
  InitialKind kind = InitialKind::kRandom;
  int modes = 10;
  // Per-group closed-form fields: "zero", "bump", "sine k".
  std::vector<std::string> displacement;
  std::vector<std::string> velocity;
  double epsilon = 0.0;
};

enum class Expectation { kNone, kDecay, kNoDecay };

struct Scenario {
  std::string name = "scenario";
  GroupPartition partition = GroupPartition::from_sizes({2});
  Eigen::MatrixXd a;
  Eigen::MatrixXd d;
  ModelSpec model;
  SimConfig sim;
  InitialSpec initial;
  std::uint64_t seed = 1;
  std::optional<DecayWindow> fit_window;  // defaults to (T/4, T)
  Expectation expect = Expectation::kNone;

  CouplingMatrix coupling_a() const { return CouplingMatrix::stiffness(a); }
  CouplingMatrix coupling_d() const { return CouplingMatrix::damping(d); }
  DecayWindow window() const;
};

/// Throws ConfigError on unreadable files, malformed JSON, missing or
/// ill-typed keys, and invariant violations of the referenced values.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text,
                        const std::filesystem::path& base_dir = std::filesystem::current_path());

/// A closed-form scalar field on [0, 1] with its derivative.
struct Field {
  std::function<double(double)> value;
  std::function<double(double)> slope;
};

/// "zero", "bump" (16 x^2 (1-x)^2) or "sine k" (sin(k pi x)).
Field named_field(const std::string& name);

/// First `count` generalized eigenvectors of K_h x = lambda M_h x, columns
/// M_h-orthonormal, ascending in lambda.
Eigen::MatrixXd mesh_modes(const DiscreteModel& model, int count);

/// Seeded uniform coefficients in [-1, 1] on the first `modes` mesh modes for
/// both displacement and velocity of every component, scaled to unit energy.
State random_unit_energy_state(const CoupledSystem& system, int modes, std::uint64_t seed);

State make_initial_state(const Scenario& scenario, const CoupledSystem& system);

}  // namespace pgsync
