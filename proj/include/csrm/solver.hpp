#pragma once

// Damped Newton solver for the nonlinear reluctance network, nodal
// (magnetic scalar potential) formulation.
//
// Sign conventions: a branch's MMF drop is u_from - u_to and its flux is
// positive from `from` to `to`. Element laws:
//   iron      phi = A * B((drop) / l)
//   coil      phi = A * B((drop + N i) / l)
//   permeance phi = P * drop
//   magnet    phi = (drop + Fc) / Rm

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "csrm/mec.hpp"

namespace csrm {

struct SolveOptions {
  double tol_residual = 1e-10;
  int max_iter = 100;
  double damping = 1.0;
  double damping_floor = 1.0 / 64.0;
  int continuation_steps = 1;
  int escalated_continuation_steps = 8;
  bool trace = false;
};

struct TraceRow {
  int continuation_step = 0;
  int iteration = 0;
  double residual = 0.0;
  double damping = 0.0;
};

struct SolveResult {
  std::vector<double> node_potentials;
  std::vector<double> branch_fluxes;
  std::vector<double> branch_mmf_drops;
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<TraceRow> trace;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double best_residual, std::vector<TraceRow> trace)
      : std::runtime_error(what), best_residual_(best_residual), trace_(std::move(trace)) {}
  double best_residual() const { return best_residual_; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  double best_residual_;
  std::vector<TraceRow> trace_;
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, bool header = true) {
  if (header) os << "step,iteration,residual,damping\n";
  for (const auto& r : trace) os << r.continuation_step << ',' << r.iteration << ',' << r.residual << ',' << r.damping << '\n';
}

/// Source MMF carried by a branch (coil N*i or magnet Fc), in the branch direction.
inline double branch_source(const Branch& b) {
  if (const auto* c = std::get_if<CoilMmf>(&b.element)) return c->mmf;
  if (const auto* p = std::get_if<PmBranch>(&b.element)) return p->fc;
  return 0.0;
}

struct BranchEval {
  double flux = 0.0;
  double conductance = 0.0;  // d(flux)/d(drop)
};

/// Element law at MMF drop `drop`, with sources scaled by `source_scale`.
/// `linearized` evaluates iron at its initial permeability. The drop plus the
/// series source is formed in extended precision: on stiff coil iron the two
/// nearly cancel.
inline BranchEval evaluate_branch(const Branch& b, long double drop, double source_scale = 1.0, bool linearized = false) {
  auto iron_law = [&](const IronReluctance& fe, double mmf) -> BranchEval {
    const double h = mmf / fe.length;
    if (linearized) {
      const double mu = fe.material->initial_permeability();
      return {fe.area * mu * h, fe.area * mu / fe.length};
    }
    return {fe.area * b_of_h(*fe.material, h), fe.area * differential_permeability(*fe.material, h) / fe.length};
  };
  return std::visit(
      [&](const auto& e) -> BranchEval {
        using T = std::decay_t<decltype(e)>;
        auto with_source = [&](double src) {
          return static_cast<double>(drop + static_cast<long double>(source_scale) * src);
        };
        const double d = static_cast<double>(drop);
        if constexpr (std::is_same_v<T, IronReluctance>) return iron_law(e, d);
        else if constexpr (std::is_same_v<T, CoilMmf>) return iron_law(e.iron, with_source(e.mmf));
        else if constexpr (std::is_same_v<T, AirgapPermeance>) return {e.permeance * d, e.permeance};
        else if constexpr (std::is_same_v<T, LeakagePermeance>) return {e.permeance * d, e.permeance};
        else return {with_source(e.fc) / e.rm, 1.0 / e.rm};
      },
      b.element);
}

/// Max over nodes of |sum of signed branch fluxes| / sum |branch fluxes|. The
/// denominator is floored at kKclFloor times the largest node throughput so
/// that nodes carrying only rounding noise do not dominate.
inline constexpr double kKclFloor = 1e-6;

inline double kcl_residual(const ReluctanceNetwork& net, const std::vector<double>& fluxes) {
  const std::size_t n = net.nodes.size();
  std::vector<double> net_out(n, 0.0), total(n, 0.0);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const auto& b = net.branches[k];
    net_out[b.from] += fluxes[k];
    net_out[b.to] -= fluxes[k];
    total[b.from] += std::abs(fluxes[k]);
    total[b.to] += std::abs(fluxes[k]);
  }
  double largest = 0.0;
  for (double t : total) largest = std::max(largest, t);
  const double floor = kKclFloor * largest + 1e-300;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(net_out[i]) / std::max(total[i], floor));
  return worst;
}

inline double kcl_residual(const ReluctanceNetwork& net, const SolveResult& result) {
  return kcl_residual(net, result.branch_fluxes);
}

namespace detail {

// Potentials are held in extended precision: drops across unsaturated iron are
// tiny differences of large potentials and would otherwise cap the reachable
// relative KCL residual near 1e-9.
using Potentials = std::vector<long double>;

class NodalSystem {
 public:
  explicit NodalSystem(const ReluctanceNetwork& net) : net_(net) {
    const auto ref = net.reference_node();
    if (!ref) throw ConstructionError("network has no reference node");
    index_.assign(net.nodes.size(), -1);
    int k = 0;
    for (std::size_t i = 0; i < net.nodes.size(); ++i)
      if (static_cast<int>(i) != *ref) index_[i] = k++;
    unknowns_ = k;
  }

  int unknowns() const { return unknowns_; }

  std::vector<double> potentials(const Potentials& x) const {
    std::vector<double> u(net_.nodes.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (index_[i] >= 0) u[i] = static_cast<double>(x[index_[i]]);
    return u;
  }

  long double drop(const Potentials& x, const Branch& b) const {
    const long double uf = index_[b.from] >= 0 ? x[index_[b.from]] : 0.0L;
    const long double ut = index_[b.to] >= 0 ? x[index_[b.to]] : 0.0L;
    return uf - ut;
  }

  // Net flux leaving each unknown node; optionally assembles the Jacobian.
  void evaluate(const Potentials& x, double scale, bool linearized, Eigen::VectorXd& residual,
                Eigen::MatrixXd* jacobian, std::vector<double>* fluxes = nullptr) const {
    std::vector<long double> acc(unknowns_, 0.0L);
    if (jacobian) jacobian->setZero(unknowns_, unknowns_);
    if (fluxes) fluxes->assign(net_.branches.size(), 0.0);
    for (std::size_t k = 0; k < net_.branches.size(); ++k) {
      const auto& b = net_.branches[k];
      const BranchEval e = evaluate_branch(b, drop(x, b), scale, linearized);
      if (fluxes) (*fluxes)[k] = e.flux;
      const int f = index_[b.from], t = index_[b.to];
      if (f >= 0) acc[f] += e.flux;
      if (t >= 0) acc[t] -= e.flux;
      if (jacobian) {
        auto& J = *jacobian;
        if (f >= 0) J(f, f) += e.conductance;
        if (t >= 0) J(t, t) += e.conductance;
        if (f >= 0 && t >= 0) {
          J(f, t) -= e.conductance;
          J(t, f) -= e.conductance;
        }
      }
    }
    residual.resize(unknowns_);
    for (int i = 0; i < unknowns_; ++i) residual[i] = static_cast<double>(acc[i]);
  }

  static Eigen::VectorXd solve_linear(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs) {
    Eigen::LLT<Eigen::MatrixXd> llt(J);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
    return J.fullPivLu().solve(rhs);
  }

 private:
  const ReluctanceNetwork& net_;
  std::vector<int> index_;
  int unknowns_ = 0;
};

inline Potentials axpy(const Potentials& x, double alpha, const Eigen::VectorXd& dx) {
  Potentials y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + static_cast<long double>(alpha) * dx[static_cast<Eigen::Index>(i)];
  return y;
}

/// Newton at a fixed source scale, starting from x. Returns true on convergence.
inline bool newton(const ReluctanceNetwork& net, const NodalSystem& sys, const SolveOptions& opts, double scale, int step,
                   Potentials& x, int& iterations, double& residual_out, std::vector<TraceRow>& trace) {
  const int n = sys.unknowns();
  Eigen::VectorXd r(n), r_trial(n);
  Eigen::MatrixXd J(n, n);
  std::vector<double> fluxes;

  sys.evaluate(x, scale, false, r, &J, &fluxes);
  double rel = kcl_residual(net, fluxes);
  double merit = r.norm();
  if (opts.trace) trace.push_back({step, 0, rel, 0.0});
  for (int it = 1; it <= opts.max_iter; ++it) {
    if (rel <= opts.tol_residual) {
      residual_out = rel;
      return true;
    }
    const Eigen::VectorXd dx = NodalSystem::solve_linear(J, -r);
    if (!dx.allFinite()) break;
    double alpha = opts.damping;
    Potentials trial = axpy(x, alpha, dx);
    sys.evaluate(trial, scale, false, r_trial, nullptr);
    while (r_trial.norm() > merit && alpha > opts.damping_floor) {
      alpha *= 0.5;
      trial = axpy(x, alpha, dx);
      sys.evaluate(trial, scale, false, r_trial, nullptr);
    }
    x = std::move(trial);
    ++iterations;
    sys.evaluate(x, scale, false, r, &J, &fluxes);
    rel = kcl_residual(net, fluxes);
    merit = r.norm();
    if (opts.trace) trace.push_back({step, it, rel, alpha});
  }
  residual_out = rel;
  return rel <= opts.tol_residual;
}

}  // namespace detail

/// Solves flux conservation at every non-reference node. `initial` (node
/// potentials, one per node) replaces the linearized initial guess.
inline SolveResult solve(const ReluctanceNetwork& net, const SolveOptions& opts = {},
                         const std::vector<double>* initial = nullptr) {
  if (!(opts.tol_residual > 0.0) || opts.max_iter < 1 || opts.continuation_steps < 1)
    throw std::invalid_argument("solve: invalid SolveOptions");
  detail::NodalSystem sys(net);
  const int n = sys.unknowns();
  SolveResult result;
  std::vector<TraceRow> trace;

  auto guess = [&]() {
    detail::Potentials x(n, 0.0L);
    if (initial) {
      const auto ref = *net.reference_node();
      int k = 0;
      for (std::size_t i = 0; i < net.nodes.size(); ++i)
        if (static_cast<int>(i) != ref) x[k++] = static_cast<long double>((*initial)[i]) - (*initial)[ref];
      return x;
    }
    // Linearized network: iron at initial permeability.
    Eigen::VectorXd r(n);
    Eigen::MatrixXd J(n, n);
    sys.evaluate(x, 1.0, true, r, &J);
    return detail::axpy(x, 1.0, detail::NodalSystem::solve_linear(J, -r));
  };

  auto finish = [&](const detail::Potentials& x, int iterations, double residual) {
    result.node_potentials = sys.potentials(x);
    Eigen::VectorXd r(n);
    sys.evaluate(x, 1.0, false, r, nullptr, &result.branch_fluxes);
    result.branch_mmf_drops.resize(net.branches.size());
    for (std::size_t k = 0; k < net.branches.size(); ++k)
      result.branch_mmf_drops[k] = static_cast<double>(sys.drop(x, net.branches[k]));
    result.converged = true;
    result.iterations = iterations;
    result.final_residual = residual;
    result.trace = std::move(trace);
    return result;
  };

  double best = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<int> schedules{opts.continuation_steps};
  if (opts.escalated_continuation_steps > opts.continuation_steps) schedules.push_back(opts.escalated_continuation_steps);

  for (int steps : schedules) {
    detail::Potentials x = steps == 1 ? guess() : detail::Potentials(n, 0.0L);
    bool ok = true;
    double residual = 0.0;
    for (int s = 1; s <= steps && ok; ++s) {
      const double scale = static_cast<double>(s) / steps;
      ok = detail::newton(net, sys, opts, scale, s, x, iterations, residual, trace);
    }
    best = std::min(best, residual);
    if (ok) return finish(x, iterations, residual);
  }
  std::ostringstream msg;
  msg << "solve: no convergence after continuation (best residual " << best << ")";
  throw SolveError(msg.str(), best, std::move(trace));
}

/// Result of the loop-law cross check.
struct KvlReport {
  double max_mismatch = 0.0;
  int loop_count = 0;
};

/// MMF drop implied by the element law at the branch's flux, minus its source.
inline double element_drop(const Branch& b, double flux, double node_drop) {
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, IronReluctance>) return h_of_b(*e.material, flux / e.area) * e.length;
        else if constexpr (std::is_same_v<T, CoilMmf>)
          return h_of_b(*e.iron.material, flux / e.iron.area) * e.iron.length - e.mmf;
        else if constexpr (std::is_same_v<T, PmBranch>) return flux * e.rm - e.fc;
        else return e.permeance > 0.0 ? flux / e.permeance : node_drop;
      },
      b.element);
}

/// Loop-law check over a fundamental cycle basis, normalized by the total
/// source MMF of the network.
inline KvlReport kvl_check(const ReluctanceNetwork& net, const SolveResult& result) {
  const int n = static_cast<int>(net.nodes.size());
  const int m = static_cast<int>(net.branches.size());
  KvlReport rep;
  if (n == 0) return rep;

  std::vector<double> drop(m);
  double sources = 0.0;
  for (int k = 0; k < m; ++k) {
    drop[k] = element_drop(net.branches[k], result.branch_fluxes[k], result.branch_mmf_drops[k]);
    sources += std::abs(branch_source(net.branches[k]));
  }
  const double scale = sources + 1e-30;

  // BFS spanning tree.
  std::vector<std::vector<int>> adj(n);
  for (int k = 0; k < m; ++k) {
    adj[net.branches[k].from].push_back(k);
    adj[net.branches[k].to].push_back(k);
  }
  const int root = net.reference_node().value_or(0);
  std::vector<int> parent_branch(n, -1), depth(n, -1);
  std::vector<bool> in_tree(m, false);
  std::queue<int> q;
  q.push(root);
  depth[root] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int k : adj[v]) {
      const auto& b = net.branches[k];
      const int w = b.from == v ? b.to : b.from;
      if (depth[w] >= 0) continue;
      depth[w] = depth[v] + 1;
      parent_branch[w] = k;
      in_tree[k] = true;
      q.push(w);
    }
  }
  // Potential of each node along the tree from the root, using element-law drops.
  // A node's tree potential: u(w) = u(parent) -/+ drop depending on orientation.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] < depth[b]; });
  std::vector<double> u(n, 0.0);
  for (int v : order) {
    const int k = parent_branch[v];
    if (k < 0) continue;
    const auto& b = net.branches[k];
    // drop = u_from - u_to
    if (b.to == v) u[v] = u[b.from] - drop[k];
    else u[v] = u[b.to] + drop[k];
  }
  for (int k = 0; k < m; ++k) {
    if (in_tree[k]) continue;
    const auto& b = net.branches[k];
    if (depth[b.from] < 0 || depth[b.to] < 0) continue;
    ++rep.loop_count;
    // Cycle: branch k then the tree path back; the tree path contributes u_to - u_from.
    const double mismatch = drop[k] - (u[b.from] - u[b.to]);
    rep.max_mismatch = std::max(rep.max_mismatch, std::abs(mismatch) / scale);
  }
  return rep;
}

}  // namespace csrm
