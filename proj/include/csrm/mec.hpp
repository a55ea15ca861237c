#pragma once

// Reluctance-network construction for the C-core motors.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "csrm/geometry.hpp"
#include "csrm/materials.hpp"
#include "csrm/units.hpp"

namespace csrm {

enum class NodeKind { StatorYoke, StatorTooth, RotorTooth, RotorCore, Reference };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::StatorYoke: return "StatorYoke";
    case NodeKind::StatorTooth: return "StatorTooth";
    case NodeKind::RotorTooth: return "RotorTooth";
    case NodeKind::RotorCore: return "RotorCore";
    case NodeKind::Reference: return "Reference";
  }
  return "?";
}

enum class PmTag { Pm1, Pm2 };

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::StatorYoke;
};

struct IronReluctance {
  double length = 0.0;  // m
  double area = 0.0;    // m^2
  std::shared_ptr<const BhCurve> material;
  std::string material_ref;
};

struct AirgapPermeance {
  double permeance = 0.0;  // H
  int stator_tooth = -1;
};

/// Magnet as MMF source Fc in series with Rm. Flux from `from` to `to` is
/// (Fc + u_from - u_to) / Rm, i.e. the piece pushes flux out at `to`.
struct PmBranch {
  double fc = 0.0;
  double rm = 0.0;
  PmTag tag = PmTag::Pm1;
};

/// Coil MMF N*i in series with the iron of the tooth it is wound on; the MMF
/// rises from `from` to `to`.
struct CoilMmf {
  IronReluctance iron;
  double turns = 0.0;
  double mmf = 0.0;
  int phase = 0;
};

struct LeakagePermeance {
  double permeance = 0.0;
};

using Element = std::variant<IronReluctance, AirgapPermeance, PmBranch, CoilMmf, LeakagePermeance>;

inline const char* element_kind(const Element& e) {
  switch (e.index()) {
    case 0: return "Iron";
    case 1: return "Airgap";
    case 2: return "Pm";
    case 3: return "Coil";
    case 4: return "Leakage";
  }
  return "?";
}

struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  Element element;
};

struct ReluctanceNetwork {
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  double rotor_angle_deg = 0.0;
  std::array<double, 3> phase_currents{0.0, 0.0, 0.0};
  std::vector<int> coil_branches;
  std::vector<int> pm_branches;
  // One entry per stator tooth (-1 where the tooth was omitted).
  std::vector<int> airgap_branches;
  std::vector<double> tooth_axis_deg;
  double airgap_length = 0.0;

  int add_node(NodeKind kind) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({id, kind});
    return id;
  }

  int add_branch(int from, int to, Element element) {
    const int id = static_cast<int>(branches.size());
    if (std::holds_alternative<CoilMmf>(element)) coil_branches.push_back(id);
    if (std::holds_alternative<PmBranch>(element)) pm_branches.push_back(id);
    branches.push_back({id, from, to, std::move(element)});
    return id;
  }

  std::optional<int> reference_node() const {
    for (const auto& n : nodes)
      if (n.kind == NodeKind::Reference) return n.id;
    return std::nullopt;
  }
};

/// Counts of each element/node kind; stable across rotor angles for one spec.
struct NetworkStats {
  int node_count = 0;
  int branch_count = 0;
  int iron = 0;
  int airgap = 0;
  int pm = 0;
  int pm1 = 0;
  int pm2 = 0;
  int coil = 0;
  int leakage = 0;
  std::map<NodeKind, int> nodes_by_kind;

  bool operator==(const NetworkStats&) const = default;
};

inline NetworkStats network_stats(const ReluctanceNetwork& net) {
  NetworkStats s;
  s.node_count = static_cast<int>(net.nodes.size());
  s.branch_count = static_cast<int>(net.branches.size());
  for (const auto& n : net.nodes) ++s.nodes_by_kind[n.kind];
  for (const auto& b : net.branches) {
    std::visit(
        [&s](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, IronReluctance>) ++s.iron;
          else if constexpr (std::is_same_v<T, AirgapPermeance>) ++s.airgap;
          else if constexpr (std::is_same_v<T, PmBranch>) {
            ++s.pm;
            ++(e.tag == PmTag::Pm1 ? s.pm1 : s.pm2);
          } else if constexpr (std::is_same_v<T, CoilMmf>) ++s.coil;
          else ++s.leakage;
        },
        b.element);
  }
  return s;
}

inline bool is_connected(const ReluctanceNetwork& net) {
  if (net.nodes.empty()) return true;
  std::vector<std::vector<int>> adj(net.nodes.size());
  for (const auto& b : net.branches) {
    adj[b.from].push_back(b.to);
    adj[b.to].push_back(b.from);
  }
  std::vector<bool> seen(net.nodes.size(), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    int n = q.front();
    q.pop();
    for (int m : adj[n])
      if (!seen[m]) {
        seen[m] = true;
        ++count;
        q.push(m);
      }
  }
  return count == net.nodes.size();
}

inline ValidationReport validate_network(const ReluctanceNetwork& net) {
  ValidationReport r;
  const int n = static_cast<int>(net.nodes.size());
  int refs = 0;
  for (int i = 0; i < n; ++i) {
    if (net.nodes[i].id != i) r.fail("node ids must be unique and dense");
    if (net.nodes[i].kind == NodeKind::Reference) ++refs;
  }
  if (refs != 1) r.fail("network needs exactly one Reference node (found " + std::to_string(refs) + ")");

  std::vector<int> degree(n, 0);
  for (const auto& b : net.branches) {
    if (b.from < 0 || b.from >= n || b.to < 0 || b.to >= n) {
      r.fail("branch " + std::to_string(b.id) + " has an endpoint out of range");
      continue;
    }
    if (b.from == b.to) r.fail("branch " + std::to_string(b.id) + " is a self-loop");
    ++degree[b.from];
    ++degree[b.to];
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          auto iron_ok = [&](const IronReluctance& fe) {
            if (!(fe.length > 0.0 && fe.area > 0.0)) r.fail("iron branch " + std::to_string(b.id) + " needs l, A > 0");
            if (!fe.material) r.fail("iron branch " + std::to_string(b.id) + " has no material");
          };
          if constexpr (std::is_same_v<T, IronReluctance>) iron_ok(e);
          else if constexpr (std::is_same_v<T, CoilMmf>) {
            iron_ok(e.iron);
            if (e.phase < 0 || e.phase > 2) r.fail("coil branch " + std::to_string(b.id) + " has no phase tag");
          } else if constexpr (std::is_same_v<T, AirgapPermeance>) {
            if (!(e.permeance >= 0.0)) r.fail("airgap branch " + std::to_string(b.id) + " has P < 0");
          } else if constexpr (std::is_same_v<T, LeakagePermeance>) {
            if (!(e.permeance >= 0.0)) r.fail("leakage branch " + std::to_string(b.id) + " has P < 0");
          } else {
            if (!(e.rm > 0.0)) r.fail("PM branch " + std::to_string(b.id) + " needs Rm > 0");
          }
        },
        b.element);
  }
  if (!r.pass) return r;
  for (int i = 0; i < n; ++i)
    if (net.nodes[i].kind != NodeKind::Reference && degree[i] < 2)
      r.fail("node " + std::to_string(i) + " has degree < 2");
  if (!is_connected(net)) r.fail("network is not connected");
  return r;
}

// ---------------------------------------------------------------------------
// Airgap permeance

struct AirgapToothGeometry {
  double stack_length = 0.0;
  double airgap_length = 0.0;
  double stator_tooth_width = 0.0;
  double rotor_tooth_width = 0.0;
  double radius = 0.0;  // arc-length radius for overlap, normally the airgap mean radius
  double rotor_pitch_deg = 0.0;
  double stator_tooth_angle_deg = 0.0;
  double fringe_depth = 0.0;
  bool fringing = true;
};

/// Trapezoidal overlap width between a tooth of width ws and one of width wr
/// whose centres are offset by x (all arc lengths).
inline double overlap_width(double ws, double wr, double x) {
  return std::max(0.0, std::min({ws, wr, 0.5 * (ws + wr) - std::abs(x)}));
}

/// Two quarter-circle flux tubes per tooth edge.
inline double fringe_permeance(double stack_length, double airgap, double depth) {
  return 2.0 * (2.0 * mu0 * stack_length / pi) * std::log(1.0 + pi * depth / (2.0 * airgap));
}

/// Rotor tooth k sits at theta + (k + 1/2) * pitch.
inline double airgap_permeance(double theta_deg, const AirgapToothGeometry& t) {
  const double tau = t.rotor_pitch_deg;
  const double theta = wrap_angle(theta_deg, tau);
  const double m = wrap_centered(theta + 0.5 * tau - t.stator_tooth_angle_deg, tau);
  const double arc = deg_to_rad(tau) * t.radius;
  const double x = deg_to_rad(m) * t.radius;
  double w = 0.0;
  for (int k = -1; k <= 1; ++k) w += overlap_width(t.stator_tooth_width, t.rotor_tooth_width, x + k * arc);
  double p = mu0 * t.stack_length * w / t.airgap_length;
  if (t.fringing) p += fringe_permeance(t.stack_length, t.airgap_length, t.fringe_depth);
  return p;
}

// ---------------------------------------------------------------------------
// Motor model

/// Where the constant leakage permeance of each C-core sits: across its own
/// slot (tip to tip of its two teeth) or across the gap to the next C-core.
enum class LeakagePlacement { Slot, InterCore };

inline const char* to_string(LeakagePlacement p) { return p == LeakagePlacement::Slot ? "slot" : "inter_core"; }

inline std::optional<LeakagePlacement> parse_leakage_placement(std::string_view s) {
  if (s == "slot") return LeakagePlacement::Slot;
  if (s == "inter_core") return LeakagePlacement::InterCore;
  return std::nullopt;
}

struct ModelOptions {
  double leakage_fraction = 0.05;  // fraction of aligned airgap permeance
  LeakagePlacement leakage_placement = LeakagePlacement::InterCore;
  bool fringing = true;
};

/// A spec with its materials resolved.
struct MotorModel {
  MotorSpec spec;
  std::shared_ptr<const BhCurve> iron;
  std::optional<MagnetMaterial> magnet;
  ModelOptions options;
};

inline MotorModel with_inert_magnets(MotorModel m) {
  m.spec.inert_magnets = true;
  return m;
}

inline AirgapToothGeometry tooth_geometry(const MotorModel& model, int tooth) {
  const auto& s = model.spec;
  const auto& d = s.dims;
  AirgapToothGeometry t;
  t.stack_length = d.stack_length;
  t.airgap_length = d.airgap_length;
  t.stator_tooth_width = d.stator_tooth_width;
  t.rotor_tooth_width = d.rotor_tooth_width;
  t.radius = d.airgap_mean_radius();
  t.rotor_pitch_deg = rotor_pitch_deg(s);
  t.stator_tooth_angle_deg = tooth_angle_deg(s, tooth);
  t.fringe_depth = std::min(d.tooth_height, 0.5 * std::max(core_slot_opening(s), 0.0));
  t.fringing = model.options.fringing;
  return t;
}

inline double aligned_airgap_permeance(const MotorModel& model) {
  const auto& d = model.spec.dims;
  double p = mu0 * d.stack_length * std::min(d.stator_tooth_width, d.rotor_tooth_width) / d.airgap_length;
  if (model.options.fringing) p += fringe_permeance(d.stack_length, d.airgap_length, tooth_geometry(model, 0).fringe_depth);
  return p;
}

inline MagnetSpec magnet_piece(const MagnetMaterial& mat, const PmPieceDims& dims) {
  return {mat.br, mat.mu_rec, mat.hc, dims.width, dims.height * dims.length};
}

/// Builds the equivalent circuit at rotor angle theta (mechanical degrees,
/// phase A aligned at 0) with phase currents (iA, iB, iC).
inline ReluctanceNetwork build_network(const MotorModel& model, double theta_deg, const std::array<double, 3>& currents) {
  const MotorSpec& s = model.spec;
  const auto report = validate_spec(s);
  if (!report.pass) throw ConstructionError("invalid motor spec '" + s.label + "':\n" + report.summary());
  if (!model.iron) throw ConstructionError("motor '" + s.label + "' has no iron material");
  if (s.pm != PmArrangement::NoPm && !model.magnet)
    throw ConstructionError("motor '" + s.label + "' needs a magnet material");

  const GeometryDims& d = s.dims;
  const int teeth = s.stator_teeth;
  const int cores = s.core_count();
  ReluctanceNetwork net;
  net.rotor_angle_deg = theta_deg;
  net.phase_currents = currents;
  net.airgap_length = d.airgap_length;
  net.airgap_branches.assign(teeth, -1);
  net.tooth_axis_deg.resize(teeth);
  for (int j = 0; j < teeth; ++j) net.tooth_axis_deg[j] = tooth_angle_deg(s, j);

  auto iron = [&](double length, double depth) {
    return IronReluctance{length, depth * d.stack_length, model.iron, s.material_ref};
  };
  auto tooth_present = [&](int j) { return !core_omitted(s, core_of_tooth(j)); };
  auto spacing_deg = [&](int j) {
    // Angular distance from tooth j to tooth j+1 (wrapping).
    double a = tooth_angle_deg(s, (j + 1) % teeth) - tooth_angle_deg(s, j);
    return wrap_angle(a, 360.0);
  };

  // Nodes. Rotor core ring first so that node 0 is the reference.
  std::vector<int> rotor_core(teeth), rotor_tooth(teeth, -1), yoke(teeth, -1), tip(teeth, -1);
  for (int j = 0; j < teeth; ++j) rotor_core[j] = net.add_node(j == 0 ? NodeKind::Reference : NodeKind::RotorCore);
  for (int j = 0; j < teeth; ++j) {
    if (!tooth_present(j)) continue;
    rotor_tooth[j] = net.add_node(NodeKind::RotorTooth);
    yoke[j] = net.add_node(NodeKind::StatorYoke);
    tip[j] = net.add_node(NodeKind::StatorTooth);
  }

  const double yoke_radius = d.stator_outer_radius - 0.5 * d.yoke_depth;
  const double rotor_yoke_radius = d.rotor_radius - d.rotor_tooth_height - 0.5 * d.rotor_yoke_depth;

  // Rotor: tooth under every stator tooth, closed by the core ring.
  for (int j = 0; j < teeth; ++j) {
    const double arc = deg_to_rad(spacing_deg(j)) * rotor_yoke_radius;
    net.add_branch(rotor_core[j], rotor_core[(j + 1) % teeth], iron(arc, d.rotor_yoke_depth));
  }
  for (int j = 0; j < teeth; ++j) {
    if (!tooth_present(j)) continue;
    net.add_branch(rotor_tooth[j], rotor_core[j], IronReluctance{d.rotor_tooth_height, d.rotor_tooth_width * d.stack_length,
                                                                   model.iron, s.material_ref});
  }

  const double p_leak = model.options.leakage_fraction * aligned_airgap_permeance(model);
  std::optional<Thevenin> pm1, pm2;
  if (model.magnet) {
    if (d.pm1_dims) pm1 = pm_thevenin(magnet_piece(*model.magnet, *d.pm1_dims));
    if (d.pm2_dims) pm2 = pm_thevenin(magnet_piece(*model.magnet, *d.pm2_dims));
  }
  const double fc_scale = s.inert_magnets ? 0.0 : 1.0;

  for (int c = 0; c < cores; ++c) {
    if (core_omitted(s, c)) continue;
    const int j0 = 2 * c, j1 = 2 * c + 1;
    const int phase = phase_of_core(s, c);
    const double mmf = s.turns_per_coil * currents[phase];
    const IronReluctance tooth_iron{d.tooth_height, d.stator_tooth_width * d.stack_length, model.iron, s.material_ref};

    // Loop sense: down tooth j0, across the gap, up tooth j1, back through the yoke.
    net.add_branch(yoke[j0], tip[j0], CoilMmf{tooth_iron, s.turns_per_coil, mmf, phase});
    net.add_branch(tip[j1], yoke[j1], CoilMmf{tooth_iron, s.turns_per_coil, mmf, phase});
    net.add_branch(yoke[j1], yoke[j0], iron(deg_to_rad(spacing_deg(j0)) * yoke_radius, d.yoke_depth));
    for (int j : {j0, j1}) {
      const double p = airgap_permeance(theta_deg, tooth_geometry(model, j));
      net.airgap_branches[j] = net.add_branch(tip[j], rotor_tooth[j], AirgapPermeance{p, j});
    }
    if (has_pm2(s.pm) && pm2) net.add_branch(tip[j1], tip[j0], PmBranch{fc_scale * pm2->fc, pm2->rm, PmTag::Pm2});

    const int next_j0 = (j1 + 1) % teeth;
    if (model.options.leakage_placement == LeakagePlacement::Slot) net.add_branch(tip[j0], tip[j1], LeakagePermeance{p_leak});
    else if (tooth_present(next_j0)) net.add_branch(tip[j1], tip[next_j0], LeakagePermeance{p_leak});
    if (tooth_present(next_j0))
      net.add_branch(yoke[j1], yoke[next_j0], iron(deg_to_rad(spacing_deg(j1)) * yoke_radius, d.bridge_depth));
  }

  if (pm1) {
    for (const auto& gap : pm1_gaps(s))
      for (int k = 0; k < s.pm1_pieces_per_gap; ++k)
        net.add_branch(tip[gap.tooth_before], tip[gap.tooth_after], PmBranch{fc_scale * pm1->fc, pm1->rm, PmTag::Pm1});
  }
  return net;
}

}  // namespace csrm
