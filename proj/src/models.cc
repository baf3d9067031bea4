#include "pgsync/models.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "pgsync/errors.h"
#include "pgsync/linalg.h"

namespace pgsync {
namespace {

// 4-point Gauss-Legendre on [0, 1]; exact through degree 7, which covers a
// piecewise-linear weight times two cubic Hermite shape functions.
constexpr std::array<double, 4> kGaussX = {
    0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
    0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
constexpr std::array<double, 4> kGaussW = {0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
                                           0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

using Shape = std::function<void(double xi, double h, Eigen::Ref<Eigen::VectorXd> n)>;

void linear_shape(double xi, double /*h*/, Eigen::Ref<Eigen::VectorXd> n) {
  n(0) = 1.0 - xi;
  n(1) = xi;
}

void hermite_shape(double xi, double h, Eigen::Ref<Eigen::VectorXd> n) {
  const double xi2 = xi * xi;
  const double xi3 = xi2 * xi;
  n(0) = 1.0 - 3.0 * xi2 + 2.0 * xi3;
  n(1) = h * (xi - 2.0 * xi2 + xi3);
  n(2) = 3.0 * xi2 - 2.0 * xi3;
  n(3) = h * (xi3 - xi2);
}

// Element matrix of  int a(x) phi_i phi_j  over [x0, x0 + h], split at the
// profile knots so every piece integrates a polynomial exactly.
Eigen::MatrixXd weighted_mass(const DampingProfile& a, double x0, double h, int nloc,
                              const Shape& shape) {
  std::vector<double> cuts{x0, x0 + h};
  for (const auto& k : a.knots()) {
    if (k.x > x0 && k.x < x0 + h) cuts.push_back(k.x);
  }
  std::sort(cuts.begin(), cuts.end());

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nloc, nloc);
  Eigen::VectorXd n(nloc);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double len = cuts[c + 1] - cuts[c];
    if (len <= 0.0) continue;
    for (std::size_t q = 0; q < kGaussX.size(); ++q) {
      const double x = cuts[c] + len * kGaussX[q];
      shape((x - x0) / h, h, n);
      out += (kGaussW[q] * len * a(x)) * n * n.transpose();
    }
  }
  return out;
}

Eigen::Matrix2d linear_stiffness(double h) {
  Eigen::Matrix2d k;
  k << 1.0, -1.0, -1.0, 1.0;
  return k / h;
}

Eigen::Matrix4d hermite_stiffness(double h) {
  Eigen::Matrix4d k;
  const double h2 = h * h;
  // clang-format off
  k << 12.0,  6.0 * h,  -12.0,  6.0 * h,
       6.0 * h, 4.0 * h2, -6.0 * h, 2.0 * h2,
      -12.0, -6.0 * h,   12.0, -6.0 * h,
       6.0 * h, 2.0 * h2, -6.0 * h, 4.0 * h2;
  // clang-format on
  return k / (h2 * h);
}

struct Layout {
  int nloc = 2;             // local unknowns per element
  int per_node = 1;         // unknowns per node
  std::vector<int> global;  // per (node, local slot) -> free dof or -1
  std::vector<DofLabel> labels;
};

Layout make_layout(ModelKind kind, int elements) {
  Layout lay;
  const int nodes = elements + 1;
  const double h = 1.0 / elements;
  lay.per_node = kind == ModelKind::kBeamDistributed ? 2 : 1;
  lay.nloc = 2 * lay.per_node;
  lay.global.assign(static_cast<std::size_t>(nodes * lay.per_node), -1);
  int next = 0;
  for (int i = 0; i < nodes; ++i) {
    const bool left = i == 0;
    const bool right = i == elements;
    bool fixed = false;
    switch (kind) {
      case ModelKind::kWaveBoundary: fixed = left; break;
      case ModelKind::kWaveDistributed:
      case ModelKind::kBeamDistributed: fixed = left || right; break;
      case ModelKind::kOscillator: break;
    }
    if (fixed) continue;
    for (int s = 0; s < lay.per_node; ++s) {
      lay.global[static_cast<std::size_t>(i * lay.per_node + s)] = next++;
      lay.labels.push_back({i * h, s});
    }
  }
  return lay;
}

void scatter(Eigen::MatrixXd& global, const Layout& lay, int element,
             const Eigen::Ref<const Eigen::MatrixXd>& local) {
  const int base = element * lay.per_node;
  for (int i = 0; i < lay.nloc; ++i) {
    const int gi = lay.global[static_cast<std::size_t>(base + i)];
    if (gi < 0) continue;
    for (int j = 0; j < lay.nloc; ++j) {
      const int gj = lay.global[static_cast<std::size_t>(base + j)];
      if (gj < 0) continue;
      global(gi, gj) += local(i, j);
    }
  }
}

void check_model(const DiscreteModel& m) {
  if (Eigen::LLT<Eigen::MatrixXd>(m.mass).info() != Eigen::Success) {
    throw SingularMatrix("assembly error: mass matrix is not positive definite");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(m.stiffness).info() != Eigen::Success) {
    throw SingularMatrix("assembly error: stiffness matrix is singular after elimination");
  }
  if (!is_psd(m.damping, 1e-12)) {
    throw SingularMatrix("assembly error: damping form is not symmetric PSD");
  }
}

DiscreteModel assemble_oscillator() {
  DiscreteModel m;
  m.kind = ModelKind::kOscillator;
  m.elements = 0;
  m.mass = Eigen::MatrixXd::Ones(1, 1);
  m.stiffness = Eigen::MatrixXd::Ones(1, 1);
  m.damping = Eigen::MatrixXd::Ones(1, 1);
  m.labels = {{0.0, 0}};
  return m;
}

DiscreteModel assemble_fe(ModelKind kind, int elements, const DampingProfile* profile) {
  if (elements < 2) throw InvalidInput("model needs at least 2 elements");
  const Layout lay = make_layout(kind, elements);
  const int dof = static_cast<int>(lay.labels.size());
  const double h = 1.0 / elements;
  const bool hermite = kind == ModelKind::kBeamDistributed;
  const Shape shape = hermite ? Shape(hermite_shape) : Shape(linear_shape);
  const DampingProfile unit = DampingProfile::constant(1.0);

  DiscreteModel m;
  m.kind = kind;
  m.elements = elements;
  m.mass = Eigen::MatrixXd::Zero(dof, dof);
  m.stiffness = Eigen::MatrixXd::Zero(dof, dof);
  m.damping = Eigen::MatrixXd::Zero(dof, dof);
  m.labels = lay.labels;

  const Eigen::MatrixXd k_local =
      hermite ? Eigen::MatrixXd(hermite_stiffness(h)) : Eigen::MatrixXd(linear_stiffness(h));
  for (int e = 0; e < elements; ++e) {
    const double x0 = e * h;
    scatter(m.mass, lay, e, weighted_mass(unit, x0, h, lay.nloc, shape));
    scatter(m.stiffness, lay, e, k_local);
    if (profile != nullptr) {
      scatter(m.damping, lay, e, weighted_mass(*profile, x0, h, lay.nloc, shape));
    }
  }
  if (kind == ModelKind::kWaveBoundary) {
    // <g v, phi> = v(1) phi(1)
    m.damping(dof - 1, dof - 1) = 1.0;
  }
  check_model(m);
  return m;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kWaveBoundary: return "wave_boundary";
    case ModelKind::kWaveDistributed: return "wave_distributed";
    case ModelKind::kBeamDistributed: return "beam_distributed";
    case ModelKind::kOscillator: return "oscillator";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::kWaveBoundary, ModelKind::kWaveDistributed,
                      ModelKind::kBeamDistributed, ModelKind::kOscillator}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidInput("unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (kind == ModelKind::kOscillator) return;
  if (elements < 2) throw InvalidInput("model spec: elements must be >= 2");
  if (kind == ModelKind::kWaveBoundary) return;
  auto width_ok = [](double w) { return w >= 0.0 && w <= 0.5; };
  if (!width_ok(damping_left) || !width_ok(damping_right)) {
    throw InvalidInput("model spec: damping widths must lie in [0, 1/2]");
  }
  if (!(damping_left + damping_right < 1.0)) {
    throw InvalidInput("model spec: damping widths must sum to less than 1");
  }
  if (!(damping_floor > 0.0)) throw InvalidInput("model spec: damping floor a_0 must be > 0");
}

DampingProfile::DampingProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {}

DampingProfile DampingProfile::constant(double value) {
  return DampingProfile({{0.0, value}, {1.0, value}});
}

DampingProfile DampingProfile::plateau(double left, double right, double floor, double ramp) {
  std::vector<Knot> k;
  if (left > 0.0) {
    k.push_back({0.0, floor});
    if (left - ramp > 0.0) k.push_back({left - ramp, floor});
    k.push_back({left, 0.0});
  } else {
    k.push_back({0.0, 0.0});
  }
  if (right > 0.0) {
    k.push_back({1.0 - right, 0.0});
    if (1.0 - right + ramp < 1.0) k.push_back({1.0 - right + ramp, floor});
    k.push_back({1.0, floor});
  } else {
    k.push_back({1.0, 0.0});
  }
  // Coincident knots (left == 1 - right cannot happen, but a zero-width gap
  // from rounding can) collapse to the first value.
  std::vector<Knot> unique;
  for (const Knot& kn : k) {
    if (unique.empty() || kn.x > unique.back().x) unique.push_back(kn);
  }
  return DampingProfile(std::move(unique));
}

double DampingProfile::operator()(double x) const {
  if (x <= knots_.front().x) return knots_.front().value;
  if (x >= knots_.back().x) return knots_.back().value;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const Knot& k) { return v < k.x; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  const double t = (x - lo.x) / (hi.x - lo.x);
  return lo.value + t * (hi.value - lo.value);
}

DiscreteModel assemble(const ModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::kOscillator: return assemble_oscillator();
    case ModelKind::kWaveBoundary: return assemble_fe(spec.kind, spec.elements, nullptr);
    case ModelKind::kWaveDistributed:
    case ModelKind::kBeamDistributed: {
      const double ramp = 1.0 / spec.elements;
      const DampingProfile a = DampingProfile::plateau(spec.damping_left, spec.damping_right,
                                                       spec.damping_floor, ramp);
      return assemble_fe(spec.kind, spec.elements, &a);
    }
  }
  throw InvalidInput("unknown model kind");
}

DiscreteModel assemble(ModelKind kind, int elements, const DampingProfile& profile) {
  if (kind != ModelKind::kWaveDistributed && kind != ModelKind::kBeamDistributed) {
    throw InvalidInput("an explicit damping profile needs a distributed-damping model");
  }
  return assemble_fe(kind, elements, &profile);
}

Eigen::VectorXd interpolate(const DiscreteModel& model,
                            const std::function<double(double)>& value,
                            const std::function<double(double)>& slope) {
  Eigen::VectorXd out(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const DofLabel& l = model.labels[static_cast<std::size_t>(i)];
    out(i) = l.derivative == 0 ? value(l.x) : slope(l.x);
  }
  return out;
}

Eigen::SparseMatrix<double> sparse_kron(const Eigen::Ref<const Eigen::MatrixXd>& left,
                                        const Eigen::Ref<const Eigen::MatrixXd>& right) {
  const Eigen::Index rr = right.rows();
  const Eigen::Index rc = right.cols();
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < left.rows(); ++i) {
    for (Eigen::Index j = 0; j < left.cols(); ++j) {
      if (left(i, j) == 0.0) continue;
      for (Eigen::Index a = 0; a < rr; ++a) {
        for (Eigen::Index b = 0; b < rc; ++b) {
          const double v = left(i, j) * right(a, b);
          if (v != 0.0) trips.emplace_back(i * rr + a, j * rc + b, v);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> out(left.rows() * rr, left.cols() * rc);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

CoupledSystem couple(DiscreteModel model, CouplingMatrix a, CouplingMatrix d) {
  if (a.order() != d.order()) {
    std::ostringstream msg;
    msg << "coupling matrices differ in order: A is " << a.order() << ", D is " << d.order();
    throw DimensionMismatch(msg.str());
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(a.order(), a.order());
  CoupledSystem sys{std::move(model), std::move(a), std::move(d), {}, {}, {}};
  sys.mass = sparse_kron(sys.model.mass, id);
  sys.stiffness = sparse_kron(sys.model.stiffness, id) + sparse_kron(sys.model.mass, sys.a.matrix());
  sys.damping = sparse_kron(sys.model.damping, sys.d.matrix());
  for (const auto* block : {&sys.mass, &sys.stiffness, &sys.damping}) {
    const Eigen::SparseMatrix<double> t = block->transpose();
    if ((*block - t).norm() > 1e-12 * (1.0 + block->norm())) {
      throw InvalidInput("coupled block is not symmetric");
    }
  }
  return sys;
}

}  // namespace pgsync
