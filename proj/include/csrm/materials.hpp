#pragma once

// Iron B-H models and the permanent-magnet Thevenin equivalent.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "csrm/units.hpp"

namespace csrm {

/// Root finding or Newton iteration gave up. Carries the last bracket/residual.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double lo, double hi) : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double lower() const { return lo_; }
  double upper() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

struct LinearBh {
  double mu_r = 1.0;
};

/// B(H) = mu0 H + (2 Bsat / pi) atan(pi (mu_i - 1) mu0 H / (2 Bsat))
struct SaturatingBh {
  double mu_i = 5000.0;
  double bsat = 1.8;
};

/// Monotone piecewise-cubic (Fritsch-Carlson) through (H, B) samples on H >= 0,
/// extended as an odd function and linearly past the last sample.
class TabulatedBh {
 public:
  TabulatedBh() = default;

  TabulatedBh(std::vector<double> h, std::vector<double> b) : h_(std::move(h)), b_(std::move(b)) {
    if (h_.size() != b_.size() || h_.size() < 2) throw std::invalid_argument("B-H table needs >= 2 (H, B) rows");
    if (h_.front() != 0.0) {
      if (h_.front() < 0.0) throw std::invalid_argument("B-H table must start at H >= 0");
      h_.insert(h_.begin(), 0.0);
      b_.insert(b_.begin(), 0.0);
    }
    if (b_.front() != 0.0) throw std::invalid_argument("B-H table must pass through the origin");
    for (std::size_t i = 1; i < h_.size(); ++i)
      if (!(h_[i] > h_[i - 1]) || !(b_[i] > b_[i - 1]))
        throw std::invalid_argument("B-H table must be strictly ascending in H and B");
    build_slopes();
  }

  static TabulatedBh from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open B-H table " + path);
    std::vector<double> h, b;
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double hv, bv;
      if (ls >> hv >> bv) {
        h.push_back(hv);
        b.push_back(bv);
      }
    }
    return TabulatedBh(std::move(h), std::move(b));
  }

  const std::vector<double>& h() const { return h_; }
  const std::vector<double>& b() const { return b_; }

  double value(double H) const {
    const double a = std::abs(H);
    const double s = H < 0.0 ? -1.0 : 1.0;
    if (a >= h_.back()) return s * (b_.back() + d_.back() * (a - h_.back()));
    const std::size_t i = segment(a);
    const double hk = h_[i + 1] - h_[i];
    const double t = (a - h_[i]) / hk;
    const double t2 = t * t, t3 = t2 * t;
    const double v = (2 * t3 - 3 * t2 + 1) * b_[i] + (t3 - 2 * t2 + t) * hk * d_[i] + (-2 * t3 + 3 * t2) * b_[i + 1] +
                     (t3 - t2) * hk * d_[i + 1];
    return s * v;
  }

  double slope(double H) const {
    const double a = std::abs(H);
    if (a >= h_.back()) return d_.back();
    const std::size_t i = segment(a);
    const double hk = h_[i + 1] - h_[i];
    const double t = (a - h_[i]) / hk;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * b_[i] + (3 * t2 - 4 * t + 1) * hk * d_[i] + (-6 * t2 + 6 * t) * b_[i + 1] +
            (3 * t2 - 2 * t) * hk * d_[i + 1]) /
           hk;
  }

 private:
  std::size_t segment(double a) const {
    auto it = std::upper_bound(h_.begin(), h_.end(), a);
    std::size_t i = static_cast<std::size_t>(it - h_.begin());
    return i == 0 ? 0 : std::min(i - 1, h_.size() - 2);
  }

  void build_slopes() {
    const std::size_t n = h_.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (b_[i + 1] - b_[i]) / (h_[i + 1] - h_[i]);
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) d_[i] = 0.5 * (delta[i - 1] + delta[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double a = d_[i] / delta[i];
      const double b = d_[i + 1] / delta[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double t = 3.0 / std::sqrt(s);
        d_[i] = t * a * delta[i];
        d_[i + 1] = t * b * delta[i];
      }
    }
    // Keep the interpolant strictly increasing everywhere.
    for (double& d : d_) d = std::max(d, mu0 * 1e-3);
  }

  std::vector<double> h_;
  std::vector<double> b_;
  std::vector<double> d_;
};

class BhCurve {
 public:
  using Model = std::variant<LinearBh, SaturatingBh, TabulatedBh>;

  BhCurve() : model_(LinearBh{}) {}
  BhCurve(LinearBh m) : model_(m) {}
  BhCurve(SaturatingBh m) : model_(m) {}
  BhCurve(TabulatedBh m) : model_(std::move(m)) {}

  static BhCurve linear(double mu_r) { return BhCurve(LinearBh{mu_r}); }
  static BhCurve saturating(double mu_i, double bsat) { return BhCurve(SaturatingBh{mu_i, bsat}); }

  const Model& model() const { return model_; }
  bool is_linear() const { return std::holds_alternative<LinearBh>(model_); }

  /// Slope at H = 0, used for the linearized initial guess.
  double initial_permeability() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LinearBh>) return mu0 * m.mu_r;
          else if constexpr (std::is_same_v<T, SaturatingBh>) return mu0 * m.mu_i;
          else return m.slope(0.0);
        },
        model_);
  }

 private:
  Model model_;
};

inline double b_of_h(const BhCurve& curve, double H) {
  if (!std::isfinite(H)) throw std::domain_error("b_of_h: H is not finite");
  return std::visit(
      [H](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearBh>) {
          return mu0 * m.mu_r * H;
        } else if constexpr (std::is_same_v<T, SaturatingBh>) {
          const double k = pi * (m.mu_i - 1.0) * mu0 / (2.0 * m.bsat);
          return mu0 * H + (2.0 * m.bsat / pi) * std::atan(k * H);
        } else {
          return m.value(H);
        }
      },
      curve.model());
}

inline double differential_permeability(const BhCurve& curve, double H) {
  if (!std::isfinite(H)) throw std::domain_error("differential_permeability: H is not finite");
  return std::visit(
      [H](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearBh>) {
          return mu0 * m.mu_r;
        } else if constexpr (std::is_same_v<T, SaturatingBh>) {
          const double k = pi * (m.mu_i - 1.0) * mu0 / (2.0 * m.bsat);
          const double x = k * H;
          return mu0 + (m.mu_i - 1.0) * mu0 / (1.0 + x * x);
        } else {
          return m.slope(H);
        }
      },
      curve.model());
}

/// Inverse of b_of_h by Newton's method inside a shrinking bisection bracket.
inline double h_of_b(const BhCurve& curve, double B, int max_iter = 200) {
  if (!std::isfinite(B)) throw std::domain_error("h_of_b: B is not finite");
  if (B == 0.0) return 0.0;
  if (const auto* lin = std::get_if<LinearBh>(&curve.model())) return B / (mu0 * lin->mu_r);

  const double sign = B < 0.0 ? -1.0 : 1.0;
  const double target = std::abs(B);
  // b_of_h is odd; solve on H >= 0. b_of_h(H) >= mu0 H bounds the root by target/mu0.
  double lo = 0.0;
  double hi = target / mu0;
  if (b_of_h(curve, hi) < target) {
    // Tabulated curves with a shallow end slope can need a wider bracket.
    int grow = 0;
    while (b_of_h(curve, hi) < target) {
      hi *= 2.0;
      if (++grow > 200 || !std::isfinite(hi)) throw NumericError("h_of_b: cannot bracket B", lo, hi);
    }
  }
  double H = target / curve.initial_permeability();
  if (!(H > lo && H < hi)) H = 0.5 * (lo + hi);

  for (int it = 0; it < max_iter; ++it) {
    const double f = b_of_h(curve, H) - target;
    if (std::abs(f) <= 1e-14 * target) return sign * H;
    if (f > 0.0) hi = H;
    else lo = H;
    if (hi - lo <= 1e-15 * hi) return sign * 0.5 * (lo + hi);
    const double step = f / differential_permeability(curve, H);
    double next = H - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    H = next;
  }
  throw NumericError("h_of_b: no convergence", sign * lo, sign * hi);
}

/// Sintered magnet grade.
struct MagnetMaterial {
  std::string name;
  double br = 1.2;        // T
  double mu_rec = 1.05;   // relative recoil permeability
  double hc = 0.0;        // A/m
};

/// Coercivity implied by the linear recoil line, Hc = Br / (mu0 mu_rec).
inline double recoil_coercivity(double br, double mu_rec) { return br / (mu0 * mu_rec); }

struct MagnetSpec {
  double br = 0.0;
  double mu_rec = 1.0;
  double hc = 0.0;
  double lm = 0.0;  // length along magnetization, m
  double am = 0.0;  // pole face area, m^2
};

inline bool recoil_consistent(double br, double mu_rec, double hc, double rel_tol = 0.05) {
  return std::abs(mu0 * mu_rec * hc - br) <= rel_tol * std::abs(br);
}

inline bool valid_magnet(const MagnetSpec& m) {
  return m.lm > 0.0 && m.am > 0.0 && m.mu_rec > 0.0 && recoil_consistent(m.br, m.mu_rec, m.hc);
}

struct Thevenin {
  double fc = 0.0;  // A-turns
  double rm = 0.0;  // 1/H
};

inline Thevenin pm_thevenin(const MagnetSpec& m) {
  if (!(m.lm > 0.0 && m.am > 0.0 && m.mu_rec > 0.0)) throw std::invalid_argument("pm_thevenin: invalid magnet");
  return {m.hc * m.lm, m.lm / (mu0 * m.mu_rec * m.am)};
}

}  // namespace csrm
