#include "pgsync/scenario.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "pgsync/csv.h"
#include "pgsync/errors.h"
#include "pgsync/integrator.h"

namespace pgsync {
namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& node, const std::filesystem::path& base_dir,
                             const char* key) {
  if (node.is_string()) {
    std::filesystem::path p = node.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return csv::read_matrix(p);
  }
  if (!node.is_array() || node.empty()) {
    throw ConfigError(std::string("'") + key + "' must be a nested array or a CSV path");
  }
  const std::size_t rows = node.size();
  const std::size_t cols = node.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!node[i].is_array() || node[i].size() != cols) {
      throw ConfigError(std::string("'") + key + "' has ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node[i][j].get<double>();
    }
  }
  return m;
}

std::vector<std::string> string_list(const json& node, const char* key) {
  if (!node.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  return node.get<std::vector<std::string>>();
}

Scenario parse_json(const json& doc, const std::filesystem::path& base_dir) {
  Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));
  if (!doc.contains("partition")) throw ConfigError("missing 'partition'");
  sc.partition = GroupPartition::from_sizes(doc.at("partition").get<std::vector<int>>());
  if (!doc.contains("A") || !doc.contains("D")) throw ConfigError("missing 'A' or 'D'");
  sc.a = parse_matrix(doc.at("A"), base_dir, "A");
  sc.d = parse_matrix(doc.at("D"), base_dir, "D");
  if (sc.a.rows() != sc.partition.components() || sc.d.rows() != sc.partition.components()) {
    throw ConfigError("coupling matrices must have order N = sum of the partition sizes");
  }
  // Validates symmetry and PSD up front.
  (void)sc.coupling_a();
  (void)sc.coupling_d();

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    sc.model.kind = parse_model_kind(m.value("kind", std::string("wave_boundary")));
    sc.model.elements = m.value("elements", sc.model.elements);
    if (m.contains("damping_region")) {
      const auto w = m.at("damping_region").get<std::vector<double>>();
      if (w.size() != 2) throw ConfigError("'damping_region' must hold two widths");
      sc.model.damping_left = w[0];
      sc.model.damping_right = w[1];
    }
    sc.model.damping_floor = m.value("damping_floor", sc.model.damping_floor);
  }
  sc.model.validate();

  if (doc.contains("sim")) {
    const json& s = doc.at("sim");
    sc.sim.dt = s.value("dt", sc.sim.dt);
    sc.sim.horizon = s.value("T", sc.sim.horizon);
    sc.sim.stride = s.value("stride", sc.sim.stride);
  }
  sc.sim.validate();

  sc.seed = doc.value("seed", sc.seed);
  if (doc.contains("initial")) {
    const json& in = doc.at("initial");
    const std::string kind = in.value("kind", std::string("random"));
    if (kind == "random") {
      sc.initial.kind = InitialKind::kRandom;
    } else if (kind == "fields") {
      sc.initial.kind = InitialKind::kFields;
    } else if (kind == "perturbed") {
      sc.initial.kind = InitialKind::kPerturbed;
    } else {
      throw ConfigError("unknown initial-data kind '" + kind + "'");
    }
    sc.initial.modes = in.value("modes", sc.initial.modes);
    sc.seed = in.value("seed", sc.seed);
    sc.initial.epsilon = in.value("epsilon", sc.initial.epsilon);
    if (sc.initial.kind != InitialKind::kRandom) {
      const auto p = static_cast<std::size_t>(sc.partition.groups());
      sc.initial.displacement =
          in.contains("u") ? string_list(in.at("u"), "u") : std::vector<std::string>(p, "zero");
      sc.initial.velocity =
          in.contains("v") ? string_list(in.at("v"), "v") : std::vector<std::string>(p, "zero");
      if (sc.initial.displacement.size() != p || sc.initial.velocity.size() != p) {
        throw ConfigError("initial 'u' and 'v' need one field name per group");
      }
      for (const auto& n : sc.initial.displacement) (void)named_field(n);
      for (const auto& n : sc.initial.velocity) (void)named_field(n);
    }
    if (sc.initial.modes < 1) throw ConfigError("initial 'modes' must be >= 1");
  }

  if (doc.contains("fit_window")) {
    const auto w = doc.at("fit_window").get<std::vector<double>>();
    if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("'fit_window' must be [start, end]");
    sc.fit_window = DecayWindow{w[0], w[1]};
  }
  const std::string expect = doc.value("expect", std::string("none"));
  if (expect == "decay") {
    sc.expect = Expectation::kDecay;
  } else if (expect == "no_decay") {
    sc.expect = Expectation::kNoDecay;
  } else if (expect != "none") {
    throw ConfigError("'expect' must be \"decay\", \"no_decay\" or \"none\"");
  }
  return sc;
}

}  // namespace

DecayWindow Scenario::window() const {
  if (fit_window) return *fit_window;
  return {0.25 * sim.horizon, sim.horizon};
}

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  try {
    return parse_json(json::parse(json_text), base_dir);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

Field named_field(const std::string& name) {
  if (name == "zero") return {[](double) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "bump") {
    return {[](double x) { return 16.0 * x * x * (1.0 - x) * (1.0 - x); },
            [](double x) { return 32.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }};
  }
  std::istringstream ss(name);
  std::string word;
  int k = 0;
  if (ss >> word && word == "sine" && ss >> k && k > 0 && (ss >> std::ws).eof()) {
    const double w = k * std::numbers::pi;
    return {[w](double x) { return std::sin(w * x); },
            [w](double x) { return w * std::cos(w * x); }};
  }
  throw ConfigError("unknown field '" + name + "' (expected zero, bump or 'sine k')");
}

Eigen::MatrixXd mesh_modes(const DiscreteModel& model, int count) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(model.stiffness, model.mass);
  if (es.info() != Eigen::Success) throw SingularMatrix("mesh eigenmodes: eigen-solve failed");
  const int k = std::min(count, model.dof());
  return es.eigenvectors().leftCols(k);
}

State random_unit_energy_state(const CoupledSystem& system, int modes, std::uint64_t seed) {
  const Eigen::MatrixXd phi = mesh_modes(system.model, modes);
  const int n = system.components();
  const Eigen::Index dof = system.model.dof();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, dof);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, dof);
  for (int c = 0; c < n; ++c) {
    for (Eigen::Index k = 0; k < phi.cols(); ++k) {
      u.row(c) += coef(rng) * phi.col(k).transpose();
      v.row(c) += coef(rng) * phi.col(k).transpose();
    }
  }
  State s{Eigen::Map<Eigen::VectorXd>(u.data(), u.size()),
          Eigen::Map<Eigen::VectorXd>(v.data(), v.size()), 0.0};
  const double e = 0.5 * s.v.dot(system.mass * s.v) + 0.5 * s.u.dot(system.stiffness * s.u);
  s.u /= std::sqrt(e);
  s.v /= std::sqrt(e);
  return s;
}

State make_initial_state(const Scenario& sc, const CoupledSystem& system) {
  if (sc.initial.kind == InitialKind::kRandom) {
    return random_unit_energy_state(system, sc.initial.modes, sc.seed);
  }
  const int n = system.components();
  const Eigen::Index dof = system.model.dof();
  Eigen::MatrixXd u(n, dof);
  Eigen::MatrixXd v(n, dof);
  for (int r = 0; r < sc.partition.groups(); ++r) {
    const auto ur = static_cast<std::size_t>(r);
    const Field fu = named_field(sc.initial.displacement[ur]);
    const Field fv = named_field(sc.initial.velocity[ur]);
    const Eigen::RowVectorXd iu = interpolate(system.model, fu.value, fu.slope).transpose();
    const Eigen::RowVectorXd iv = interpolate(system.model, fv.value, fv.slope).transpose();
    for (int k = sc.partition.begin(r); k < sc.partition.end(r); ++k) {
      u.row(k) = iu;
      v.row(k) = iv;
    }
  }
  State s{Eigen::Map<Eigen::VectorXd>(u.data(), u.size()),
          Eigen::Map<Eigen::VectorXd>(v.data(), v.size()), 0.0};
  if (sc.initial.kind == InitialKind::kPerturbed && sc.initial.epsilon != 0.0) {
    const State noise = random_unit_energy_state(system, sc.initial.modes, sc.seed);
    s.u += sc.initial.epsilon * noise.u;
    s.v += sc.initial.epsilon * noise.v;
  }
  return s;
}

}  // namespace pgsync
