#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace csrm {

inline constexpr double pi = std::numbers::pi;
inline constexpr double mu0 = 4.0e-7 * pi;  // H/m

inline constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

inline constexpr double m3_to_ml(double v) { return v * 1.0e6; }
inline constexpr double m3_to_l(double v) { return v * 1.0e3; }

/// Wraps an angle into [0, period).
inline double wrap_angle(double angle, double period) {
  double r = std::fmod(angle, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

/// Wraps an angle into [-period/2, period/2).
inline double wrap_centered(double angle, double period) {
  double r = wrap_angle(angle + 0.5 * period, period) - 0.5 * period;
  return r;
}

// Thrown when a spec or network fails its structural checks.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csrm
