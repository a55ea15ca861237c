#pragma once

// Flux linkage, coenergy torque, coil/PM torque decomposition, PM flux-split
// diagnostics, radial force balance, and the comparison metrics.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csrm/mec.hpp"
#include "csrm/parallel.hpp"
#include "csrm/solver.hpp"

namespace csrm {

struct OperatingPoint {
  double theta_deg = 0.0;
  std::array<double, 3> currents{0.0, 0.0, 0.0};
};

struct AnalysisOptions {
  int coenergy_points = 33;
  double torque_step_deg = 0.1;
  int stroke_points = 33;
  double max_current = 20.0;
  int workers = 1;
  SolveOptions solver;
};

inline void check_operating_point(const OperatingPoint& op, const AnalysisOptions& opts) {
  for (double i : op.currents) {
    if (!std::isfinite(i)) throw std::invalid_argument("operating point current is not finite");
    if (std::abs(i) > opts.max_current) throw std::invalid_argument("operating point current exceeds the configured maximum");
  }
  if (!std::isfinite(op.theta_deg)) throw std::invalid_argument("operating point angle is not finite");
}

/// Flux linkage per phase: turns times flux summed over the phase's coils.
inline std::array<double, 3> linkage_from(const ReluctanceNetwork& net, const SolveResult& res) {
  std::array<double, 3> lambda{0.0, 0.0, 0.0};
  for (int k : net.coil_branches) {
    const auto& coil = std::get<CoilMmf>(net.branches[k].element);
    lambda[coil.phase] += coil.turns * res.branch_fluxes[k];
  }
  return lambda;
}

struct OperatingState {
  ReluctanceNetwork network;
  SolveResult result;
};

inline OperatingState solve_operating_point(const MotorModel& model, const OperatingPoint& op,
                                            const AnalysisOptions& opts = {},
                                            const std::vector<double>* warm_start = nullptr) {
  check_operating_point(op, opts);
  OperatingState st{build_network(model, op.theta_deg, op.currents), {}};
  st.result = solve(st.network, opts.solver, warm_start);
  return st;
}

/// Flux linkage per phase, Wb-turns.
inline std::array<double, 3> flux_linkage(const MotorModel& model, const OperatingPoint& op,
                                          const AnalysisOptions& opts = {}) {
  const auto st = solve_operating_point(model, op, opts);
  return linkage_from(st.network, st.result);
}

/// Coenergy W'(theta, i) = integral of lambda over [0, i] with the other
/// phases open, composite trapezoid on a uniform current grid. `build` maps
/// (theta_deg, currents) to a network. Magnets stay active throughout, so W'
/// includes the PM-coil interaction term.
template <typename Build>
double coenergy_of(Build&& build, double theta_deg, double current, int phase, const AnalysisOptions& opts = {}) {
  if (!(current >= 0.0)) throw std::invalid_argument("coenergy: target current must be >= 0");
  if (phase < 0 || phase > 2) throw std::invalid_argument("coenergy: phase must be 0, 1 or 2");
  if (current == 0.0) return 0.0;
  const int n = std::max(opts.coenergy_points, 2);
  const double di = current / (n - 1);
  std::vector<double> warm;
  double sum = 0.0;
  double prev = 0.0;
  for (int k = 0; k < n; ++k) {
    std::array<double, 3> currents{0.0, 0.0, 0.0};
    currents[phase] = k == n - 1 ? current : k * di;
    const ReluctanceNetwork net = build(theta_deg, currents);
    const SolveResult res = solve(net, opts.solver, warm.empty() ? nullptr : &warm);
    const double lambda = linkage_from(net, res)[phase];
    if (k > 0) sum += 0.5 * (prev + lambda) * di;
    prev = lambda;
    warm = res.node_potentials;
  }
  return sum;
}

/// Central difference of coenergy in angle, N*m.
template <typename Build>
double static_torque_of(Build&& build, double theta_deg, double current, int phase, const AnalysisOptions& opts = {}) {
  const double h = opts.torque_step_deg;
  const double wp = coenergy_of(build, theta_deg + h, current, phase, opts);
  const double wm = coenergy_of(build, theta_deg - h, current, phase, opts);
  return (wp - wm) / (2.0 * deg_to_rad(h));
}

namespace detail {

inline auto model_builder(const MotorModel& model, const AnalysisOptions& opts) {
  return [&model, &opts](double theta_deg, const std::array<double, 3>& currents) {
    check_operating_point({theta_deg, currents}, opts);
    return build_network(model, theta_deg, currents);
  };
}

}  // namespace detail

inline double coenergy(const MotorModel& model, double theta_deg, double current, int phase,
                       const AnalysisOptions& opts = {}) {
  return coenergy_of(detail::model_builder(model, opts), theta_deg, current, phase, opts);
}

inline double static_torque(const MotorModel& model, double theta_deg, double current, int phase,
                            const AnalysisOptions& opts = {}) {
  return static_torque_of(detail::model_builder(model, opts), theta_deg, current, phase, opts);
}

struct TorqueCurve {
  std::string label;
  double current = 0.0;
  double rotor_pitch_deg = 0.0;
  std::vector<double> angles_deg;
  std::vector<double> torque_total;
  std::vector<double> torque_coil_only;
  std::vector<double> torque_pm_contribution;
};

/// Uniform grid over one rotor pitch starting at phase A's unaligned position.
inline std::vector<double> pitch_grid(const MotorSpec& spec, int n_angles) {
  const double tau = rotor_pitch_deg(spec);
  std::vector<double> a(n_angles);
  for (int k = 0; k < n_angles; ++k) a[k] = -0.5 * tau + k * tau / n_angles;
  return a;
}

/// Uniform grid over the motoring stroke, unaligned (-pitch/2) to aligned (0).
inline std::vector<double> stroke_grid(const MotorSpec& spec, int points) {
  const double half = 0.5 * rotor_pitch_deg(spec);
  std::vector<double> a(points);
  for (int k = 0; k < points; ++k) a[k] = -half + half * k / (points - 1);
  return a;
}

/// Trapezoidal mean of samples on a uniform grid.
inline double trapezoid_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v.front();
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t k = 1; k + 1 < v.size(); ++k) s += v[k];
  return s / static_cast<double>(v.size() - 1);
}

inline double plain_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace detail {

inline std::vector<double> torques_at(const MotorModel& model, const std::vector<double>& angles, double current,
                                      const AnalysisOptions& opts) {
  std::vector<double> t(angles.size());
  parallel_for(angles.size(), opts.workers, [&](std::size_t k) { t[k] = static_torque(model, angles[k], current, 0, opts); });
  return t;
}

}  // namespace detail

/// Phase-A torque over one rotor pitch, split into the coil-only torque (all
/// magnets inert: Fc = 0, Rm kept) and the remainder attributed to the PMs.
inline TorqueCurve torque_curve(const MotorModel& model, double current, int n_angles = 64,
                                const AnalysisOptions& opts = {}) {
  if (n_angles < 16) throw std::invalid_argument("torque_curve: n_angles must be >= 16");
  TorqueCurve c;
  c.label = model.spec.label;
  c.current = current;
  c.rotor_pitch_deg = rotor_pitch_deg(model.spec);
  c.angles_deg = pitch_grid(model.spec, n_angles);
  c.torque_total = detail::torques_at(model, c.angles_deg, current, opts);
  if (model.spec.pm == PmArrangement::NoPm) c.torque_coil_only = c.torque_total;
  else c.torque_coil_only = detail::torques_at(with_inert_magnets(model), c.angles_deg, current, opts);
  c.torque_pm_contribution.resize(n_angles);
  for (int k = 0; k < n_angles; ++k) c.torque_pm_contribution[k] = c.torque_total[k] - c.torque_coil_only[k];
  return c;
}

/// Stroke averages of the decomposed torque.
struct StrokeAverage {
  double total = 0.0;
  double coil_only = 0.0;
  double pm_contribution = 0.0;
};

inline StrokeAverage stroke_average(const MotorModel& model, double current, const AnalysisOptions& opts = {}) {
  const auto angles = stroke_grid(model.spec, opts.stroke_points);
  StrokeAverage avg;
  avg.total = trapezoid_mean(detail::torques_at(model, angles, current, opts));
  avg.coil_only = model.spec.pm == PmArrangement::NoPm
                      ? avg.total
                      : trapezoid_mean(detail::torques_at(with_inert_magnets(model), angles, current, opts));
  avg.pm_contribution = avg.total - avg.coil_only;
  return avg;
}

/// Stroke averages read off a pitch curve. The first n/2 + 1 points of an
/// even pitch grid are exactly the stroke grid with n/2 + 1 points.
inline StrokeAverage stroke_average(const TorqueCurve& c) {
  const std::size_t n = c.angles_deg.size();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("stroke_average: curve needs an even number of angles");
  auto head = [&](const std::vector<double>& v) { return trapezoid_mean({v.begin(), v.begin() + n / 2 + 1}); };
  return {head(c.torque_total), head(c.torque_coil_only), head(c.torque_pm_contribution)};
}

/// Mean single-phase static torque over the unaligned-to-aligned stroke.
inline double average_torque(const MotorModel& model, double current, const AnalysisOptions& opts = {}) {
  if (current == 0.0) return 0.0;
  if (!(current > 0.0)) throw std::invalid_argument("average_torque: current must be > 0");
  return trapezoid_mean(detail::torques_at(model, stroke_grid(model.spec, opts.stroke_points), current, opts));
}

// ---------------------------------------------------------------------------
// PM flux split

struct FluxSplit {
  double airgap_fraction = 0.0;
  double yoke_fraction = 0.0;
};

/// Follows each magnet's flux through the network with proportional sharing at
/// every node until it re-enters the magnet, and reports the share that
/// crossed an airgap branch on the way. Weighted over magnets by |flux|.
inline FluxSplit flux_split(const ReluctanceNetwork& net, const SolveResult& res, const std::vector<int>& magnets) {
  if (magnets.empty()) throw std::domain_error("pm_flux_split: network has no magnets");
  const int n = static_cast<int>(net.nodes.size());
  const auto& phi = res.branch_fluxes;

  // Outgoing positive flows per node.
  struct Out {
    int branch;
    int to;
    double flow;
  };
  std::vector<std::vector<Out>> out(n);
  std::vector<double> out_total(n, 0.0);
  for (const auto& b : net.branches) {
    const double f = phi[b.id];
    if (f > 0.0) out[b.from].push_back({b.id, b.to, f});
    else if (f < 0.0) out[b.to].push_back({b.id, b.from, -f});
  }
  for (int v = 0; v < n; ++v)
    for (const auto& o : out[v]) out_total[v] += o.flow;

  auto is_gap = [&](int k) { return std::holds_alternative<AirgapPermeance>(net.branches[k].element); };

  double weighted = 0.0, weight = 0.0;
  for (int pm : magnets) {
    const double f = phi[pm];
    if (f == 0.0) continue;
    const auto& b = net.branches[pm];
    const int exit = f > 0.0 ? b.to : b.from;
    // x[v]: probability that a flux line at v crosses an airgap before
    // re-entering this magnet.
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
      if (out_total[v] <= 0.0) continue;
      for (const auto& o : out[v]) {
        const double p = o.flow / out_total[v];
        if (o.branch == pm) continue;  // absorbed back into the magnet
        if (is_gap(o.branch)) rhs[v] += p;
        else A(v, o.to) -= p;
      }
    }
    const Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    weighted += std::abs(f) * std::clamp(x[exit], 0.0, 1.0);
    weight += std::abs(f);
  }
  FluxSplit s;
  s.airgap_fraction = weight > 0.0 ? weighted / weight : 0.0;
  s.yoke_fraction = 1.0 - s.airgap_fraction;
  return s;
}

inline FluxSplit flux_split(const ReluctanceNetwork& net, const SolveResult& res) {
  return flux_split(net, res, net.pm_branches);
}

/// Magnets with at least one pole face on a tooth of `phase`.
inline std::vector<int> phase_magnets(const MotorSpec& spec, const ReluctanceNetwork& net, int phase) {
  std::vector<int> node_phase(net.nodes.size(), -1);
  for (int k : net.airgap_branches) {
    if (k < 0) continue;
    const auto& b = net.branches[k];
    node_phase[b.from] = phase_of_core(spec, core_of_tooth(std::get<AirgapPermeance>(b.element).stator_tooth));
  }
  std::vector<int> out;
  for (int k : net.pm_branches) {
    const auto& b = net.branches[k];
    if (node_phase[b.from] == phase || node_phase[b.to] == phase) out.push_back(k);
  }
  return out;
}

/// Airgap/yoke split of the flux of the magnets bordering `phase` (default A).
inline FluxSplit pm_flux_split(const MotorModel& model, const OperatingPoint& op, const AnalysisOptions& opts = {},
                               int phase = 0) {
  if (model.spec.pm == PmArrangement::NoPm) throw std::domain_error("pm_flux_split: motor '" + model.spec.label + "' has no magnets");
  if (phase < 0 || phase >= model.spec.phases) throw std::invalid_argument("pm_flux_split: phase out of range");
  const auto st = solve_operating_point(model, op, opts);
  return flux_split(st.network, st.result, phase_magnets(model.spec, st.network, phase));
}

// ---------------------------------------------------------------------------
// Radial force

struct RadialForceReport {
  double fx = 0.0;
  double fy = 0.0;
  double net = 0.0;       // |sum of pole vectors|
  double pole_sum = 0.0;  // sum of |pole forces|
  std::vector<double> per_pole;

  double imbalance() const { return pole_sum > 0.0 ? net / pole_sum : 0.0; }
};

/// Maxwell pull phi^2 / (2 mu0 A) per stator pole, A being the equivalent
/// gap area P g / mu0, directed inward along the pole axis.
inline RadialForceReport radial_forces(const ReluctanceNetwork& net, const SolveResult& res) {
  RadialForceReport r;
  r.per_pole.assign(net.airgap_branches.size(), 0.0);
  for (std::size_t j = 0; j < net.airgap_branches.size(); ++j) {
    const int k = net.airgap_branches[j];
    if (k < 0) continue;
    const double p = std::get<AirgapPermeance>(net.branches[k].element).permeance;
    const double area = p * net.airgap_length / mu0;
    if (!(area > 0.0)) continue;
    const double phi = res.branch_fluxes[k];
    const double f = phi * phi / (2.0 * mu0 * area);
    const double a = deg_to_rad(net.tooth_axis_deg[j]);
    r.per_pole[j] = f;
    r.fx -= f * std::cos(a);
    r.fy -= f * std::sin(a);
    r.pole_sum += f;
  }
  r.net = std::hypot(r.fx, r.fy);
  return r;
}

inline RadialForceReport radial_force_balance(const MotorModel& model, const OperatingPoint& op,
                                              const AnalysisOptions& opts = {}) {
  const auto st = solve_operating_point(model, op, opts);
  return radial_forces(st.network, st.result);
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricsReport {
  double avg_torque = 0.0;     // N*m
  double motor_volume = 0.0;   // L
  std::optional<double> pm_volume;  // L; empty when the motor has no magnets
  double current = 0.0;        // A
  double torque_density = 0.0;       // N*m/L
  double torque_per_ampere = 0.0;    // N*m/A
  std::optional<double> torque_per_pm_volume;  // N*m/L
};

inline MetricsReport metrics(double avg_torque, double motor_volume_l, std::optional<double> pm_volume_l, double current) {
  if (!(motor_volume_l > 0.0)) throw std::invalid_argument("metrics: motor volume must be > 0");
  if (!(current > 0.0)) throw std::invalid_argument("metrics: current must be > 0");
  MetricsReport m;
  m.avg_torque = avg_torque;
  m.motor_volume = motor_volume_l;
  m.current = current;
  m.torque_density = avg_torque / motor_volume_l;
  m.torque_per_ampere = avg_torque / current;
  if (pm_volume_l && *pm_volume_l > 0.0) {
    m.pm_volume = pm_volume_l;
    m.torque_per_pm_volume = avg_torque / *pm_volume_l;
  }
  return m;
}

inline MetricsReport motor_metrics(const MotorSpec& spec, double avg_torque, double current) {
  const double pmv = pm_volume(spec);
  return metrics(avg_torque, motor_volume(spec) / 1000.0, pmv > 0.0 ? std::optional<double>(pmv / 1000.0) : std::nullopt,
                 current);
}

}  // namespace csrm
