#pragma once

// Reference solutions shared by the unit tests and the acceptance binary.
// They deliberately avoid the library's solver and linear-algebra code.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "csrm/materials.hpp"
#include "csrm/mec.hpp"

namespace csrm::oracle {

/// Random connected network of linear elements: airgap and leakage
/// permeances, linear iron, coils on linear iron and magnets.
inline ReluctanceNetwork random_linear_network(unsigned seed, int max_nodes = 30) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto logu = [&](double a, double b) { return std::exp(uni(std::log(a), std::log(b))); };
  const int n = std::uniform_int_distribution<int>(3, max_nodes)(rng);

  ReluctanceNetwork net;
  net.add_node(NodeKind::Reference);
  for (int i = 1; i < n; ++i) net.add_node(NodeKind::StatorYoke);

  auto element = [&]() -> Element {
    const int kind = std::uniform_int_distribution<int>(0, 4)(rng);
    auto iron = [&] {
      auto mat = std::make_shared<const BhCurve>(BhCurve::linear(logu(50.0, 8000.0)));
      return IronReluctance{logu(1e-3, 5e-2), logu(1e-5, 5e-4), mat, "lin"};
    };
    switch (kind) {
      case 0: return AirgapPermeance{logu(1e-9, 1e-6), -1};
      case 1: return LeakagePermeance{logu(1e-10, 1e-7)};
      case 2: return iron();
      case 3: {
        const double turns = std::round(uni(10.0, 200.0));
        return CoilMmf{iron(), turns, turns * uni(-10.0, 10.0), 0};
      }
      default: return PmBranch{uni(-3000.0, 3000.0), logu(1e5, 1e8), PmTag::Pm1};
    }
  };

  // Random spanning tree, then extra chords until every node has degree >= 2.
  std::vector<int> degree(n, 0);
  auto connect = [&](int a, int b) {
    if (uni(0.0, 1.0) < 0.5) std::swap(a, b);
    net.add_branch(a, b, element());
    ++degree[a];
    ++degree[b];
  };
  for (int i = 1; i < n; ++i) connect(i, std::uniform_int_distribution<int>(0, i - 1)(rng));
  const int extra = std::uniform_int_distribution<int>(1, n)(rng);
  for (int k = 0; k < extra; ++k) {
    const int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, n - 2)(rng);
    if (b >= a) ++b;
    connect(a, b);
  }
  for (int i = 0; i < n; ++i) {
    while (degree[i] < 2) {
      int b = std::uniform_int_distribution<int>(0, n - 2)(rng);
      if (b >= i) ++b;
      connect(i, b);
    }
  }
  return net;
}

/// Conductance and series source of a linear branch: flux = g (drop + s).
inline void linear_law(const Branch& b, long double& g, long double& s) {
  s = 0.0L;
  if (const auto* fe = std::get_if<IronReluctance>(&b.element)) {
    g = static_cast<long double>(fe->area) * fe->material->initial_permeability() / fe->length;
  } else if (const auto* c = std::get_if<CoilMmf>(&b.element)) {
    g = static_cast<long double>(c->iron.area) * c->iron.material->initial_permeability() / c->iron.length;
    s = c->mmf;
  } else if (const auto* a = std::get_if<AirgapPermeance>(&b.element)) {
    g = a->permeance;
  } else if (const auto* l = std::get_if<LeakagePermeance>(&b.element)) {
    g = l->permeance;
  } else {
    const auto& p = std::get<PmBranch>(b.element);
    g = 1.0L / p.rm;
    s = p.fc;
  }
}

/// Dense nodal equations solved by Gaussian elimination with partial pivoting.
/// Returns branch fluxes (from -> to).
inline std::vector<double> linear_reference_fluxes(const ReluctanceNetwork& net) {
  const int n = static_cast<int>(net.nodes.size());
  const int ref = net.reference_node().value();
  std::vector<int> idx(n, -1);
  int m = 0;
  for (int i = 0; i < n; ++i)
    if (i != ref) idx[i] = m++;

  std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0.0L));
  for (const auto& b : net.branches) {
    long double g, s;
    linear_law(b, g, s);
    // Outflow at `from` is g (u_from - u_to + s); the same flux enters `to`.
    const int f = idx[b.from], t = idx[b.to];
    if (f >= 0) {
      a[f][f] += g;
      if (t >= 0) a[f][t] -= g;
      a[f][m] -= g * s;
    }
    if (t >= 0) {
      a[t][t] += g;
      if (f >= 0) a[t][f] -= g;
      a[t][m] += g * s;
    }
  }
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0L) throw std::runtime_error("singular reference system");
    std::swap(a[c], a[piv]);
    for (int r = c + 1; r < m; ++r) {
      const long double f = a[r][c] / a[c][c];
      if (f == 0.0L) continue;
      for (int k = c; k <= m; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<long double> x(m);
  for (int r = m - 1; r >= 0; --r) {
    long double v = a[r][m];
    for (int k = r + 1; k < m; ++k) v -= a[r][k] * x[k];
    x[r] = v / a[r][r];
  }
  std::vector<double> flux;
  for (const auto& b : net.branches) {
    long double g, s;
    linear_law(b, g, s);
    const long double uf = idx[b.from] >= 0 ? x[idx[b.from]] : 0.0L;
    const long double ut = idx[b.to] >= 0 ? x[idx[b.to]] : 0.0L;
    flux.push_back(static_cast<double>(g * (uf - ut + s)));
  }
  return flux;
}

/// One coil on saturating iron in series with an airgap permeance.
struct SingleLoop {
  double mmf = 0.0;       // A-turns
  double length = 0.0;    // iron path, m
  double area = 0.0;      // m^2
  double permeance = 0.0; // airgap, H
  double mu_i = 5000.0;
  double bsat = 1.8;
};

inline SingleLoop random_single_loop(std::mt19937_64& rng) {
  auto logu = [&](double a, double b) {
    return std::exp(std::uniform_real_distribution<double>(std::log(a), std::log(b))(rng));
  };
  SingleLoop s;
  s.mmf = logu(1.0, 2e4);
  s.length = logu(5e-3, 0.3);
  s.area = logu(1e-5, 1e-3);
  s.permeance = logu(1e-9, 1e-5);
  s.mu_i = logu(500.0, 10000.0);
  s.bsat = std::uniform_real_distribution<double>(1.2, 2.1)(rng);
  return s;
}

inline ReluctanceNetwork single_loop_network(const SingleLoop& s) {
  ReluctanceNetwork net;
  net.add_node(NodeKind::Reference);
  net.add_node(NodeKind::StatorTooth);
  auto mat = std::make_shared<const BhCurve>(BhCurve::saturating(s.mu_i, s.bsat));
  net.add_branch(0, 1, CoilMmf{IronReluctance{s.length, s.area, mat, "sat"}, 1.0, s.mmf, 0});
  net.add_branch(1, 0, AirgapPermeance{s.permeance, 0});
  return net;
}

/// Loop flux from F = l H(phi / A) + phi / P by bisection on phi, with H(B)
/// obtained by an inner bisection on the closed-form B(H).
inline double single_loop_bisection(const SingleLoop& s) {
  const double mu0v = 4.0e-7 * 3.14159265358979323846;
  const double k = 3.14159265358979323846 * (s.mu_i - 1.0) * mu0v / (2.0 * s.bsat);
  auto b_of = [&](double H) { return mu0v * H + 2.0 * s.bsat / 3.14159265358979323846 * std::atan(k * H); };
  auto h_of = [&](double B) {
    double lo = 0.0, hi = B / mu0v;
    for (int it = 0; it < 400 && hi - lo > 1e-17 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (b_of(mid) < B ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  // The loop MMF drop is increasing in phi; the airgap alone bounds phi by F P.
  double lo = 0.0, hi = s.mmf * s.permeance;
  for (int it = 0; it < 400 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double need = s.length * h_of(mid / s.area) + mid / s.permeance;
    (need < s.mmf ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline constexpr double kOraclePi = 3.14159265358979323846;
inline constexpr double kOracleMu0 = 4.0e-7 * kOraclePi;

// One coil on linear iron closing through an airgap whose permeance is a
// linear ramp in rotor angle: P(theta) = p0 + slope * theta_deg.
struct RampToy {
  double turns = 100.0;
  double iron_length = 0.1;
  double iron_area = 4e-4;
  double mu_r = 2000.0;
  double p0 = 2e-7;
  double slope = 1e-8;  // H per degree

  double iron_reluctance() const { return iron_length / (kOracleMu0 * mu_r * iron_area); }
  double permeance(double theta_deg) const { return p0 + slope * theta_deg; }

  ReluctanceNetwork operator()(double theta_deg, const std::array<double, 3>& currents) const {
    ReluctanceNetwork net;
    net.add_node(NodeKind::Reference);
    net.add_node(NodeKind::StatorTooth);
    auto iron = std::make_shared<const BhCurve>(BhCurve::linear(mu_r));
    net.add_branch(0, 1, CoilMmf{IronReluctance{iron_length, iron_area, iron, "lin"}, turns, turns * currents[0], 0});
    net.add_branch(1, 0, AirgapPermeance{permeance(theta_deg), 0});
    return net;
  }

  // T = 1/2 i^2 dL/dtheta with L = N^2 P / (1 + R P).
  double torque(double theta_deg, double i) const {
    const double p = permeance(theta_deg);
    const double dl_dp = turns * turns / std::pow(1.0 + iron_reluctance() * p, 2);
    return 0.5 * i * i * dl_dp * slope * 180.0 / kOraclePi;
  }
};

}  // namespace csrm::oracle
