#pragma once

// Output formats: torque CSV, metric tables (JSON and aligned text), the
// published comparison table and content hashing for manifests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrm/analysis.hpp"
#include "csrm/config.hpp"
#include "csrm/netlist.hpp"
#include "csrm/version.hpp"

namespace csrm {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Torque curves

inline constexpr const char* kTorqueCsvHeader = "angle_deg,T_total_Nm,T_coil_Nm,T_pm_Nm";

inline void write_torque_csv(std::ostream& os, const TorqueCurve& c) {
  using detail::num;
  os << kTorqueCsvHeader << "\n";
  for (std::size_t k = 0; k < c.angles_deg.size(); ++k)
    os << num(c.angles_deg[k]) << ',' << num(c.torque_total[k]) << ',' << num(c.torque_coil_only[k]) << ','
       << num(c.torque_pm_contribution[k]) << "\n";
}

inline std::string torque_csv(const TorqueCurve& c) {
  std::ostringstream os;
  write_torque_csv(os, c);
  return os.str();
}

inline nlohmann::json to_json(const TorqueCurve& c) {
  return {{"label", c.label},
          {"current_A", c.current},
          {"rotor_pitch_deg", c.rotor_pitch_deg},
          {"angle_deg", c.angles_deg},
          {"T_total_Nm", c.torque_total},
          {"T_coil_Nm", c.torque_coil_only},
          {"T_pm_Nm", c.torque_pm_contribution}};
}

// ---------------------------------------------------------------------------
// Metric tables

/// One row of a comparison table, simulated or published.
struct MetricsRow {
  std::string label;
  std::string source;  // "simulated" or "published"
  MetricsReport metrics;
  // Ratios as printed in the published table; absent for simulated rows.
  std::optional<double> published_torque_density;
  std::optional<double> published_torque_per_ampere;
  std::optional<double> published_torque_per_pm_volume;
};

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const MetricsRow& r) {
  const auto& m = r.metrics;
  nlohmann::json j = {{"label", r.label},
                      {"source", r.source},
                      {"avg_torque_Nm", m.avg_torque},
                      {"motor_volume_L", m.motor_volume},
                      {"pm_volume_L", optional_json(m.pm_volume)},
                      {"current_A", m.current},
                      {"torque_density_Nm_per_L", m.torque_density},
                      {"torque_per_ampere_Nm_per_A", m.torque_per_ampere},
                      {"torque_per_pm_volume_Nm_per_L", optional_json(m.torque_per_pm_volume)}};
  if (r.source == "published") {
    j["published"] = {{"torque_density_Nm_per_L", optional_json(r.published_torque_density)},
                      {"torque_per_ampere_Nm_per_A", optional_json(r.published_torque_per_ampere)},
                      {"torque_per_pm_volume_Nm_per_L", optional_json(r.published_torque_per_pm_volume)}};
  }
  return j;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

/// Aligned text rendering; magnet columns show "-" when not applicable.
inline std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
  const std::vector<std::string> head = {"motor", "source", "T_avg[Nm]", "V[mL]", "V_pm[mL]", "I[A]", "T/V[Nm/L]", "T/I[Nm/A]", "T/V_pm[Nm/L]"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    cells.push_back({r.label, r.source, fixed(m.avg_torque, 3), fixed(m.motor_volume * 1000.0, 1),
                     m.pm_volume ? fixed(*m.pm_volume * 1000.0, 2) : "-", fixed(m.current, 1), fixed(m.torque_density, 2),
                     fixed(m.torque_per_ampere, 3), m.torque_per_pm_volume ? fixed(*m.torque_per_pm_volume, 2) : "-"});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      if (c < 2) os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      else os << std::right << std::setw(static_cast<int>(width[c])) << row[c];
    }
    os << "\n";
  };
  line(head);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  os << std::string(total - 2, '-') << "\n";
  for (const auto& row : cells) line(row);
  return os.str();
}

// ---------------------------------------------------------------------------
// Published comparison rows

/// Loads the published comparison table: each row stores (torque, volume,
/// magnet volume, current) plus the ratios exactly as printed.
inline std::vector<MetricsRow> load_published_rows(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  if (!j.contains("rows") || !j.at("rows").is_array()) throw ConfigError(path.string() + ": missing 'rows' array");
  auto opt = [](const nlohmann::json& r, const char* key) -> std::optional<double> {
    if (!r.contains(key) || r.at(key).is_null()) return std::nullopt;
    return r.at(key).get<double>();
  };
  std::vector<MetricsRow> rows;
  for (const auto& r : j.at("rows")) {
    MetricsRow row;
    row.label = r.at("label").get<std::string>();
    row.source = "published";
    const auto pm_ml = opt(r, "pm_volume_mL");
    row.metrics = metrics(r.at("avg_torque_Nm").get<double>(), r.at("motor_volume_mL").get<double>() / 1000.0,
                          pm_ml ? std::optional<double>(*pm_ml / 1000.0) : std::nullopt, r.at("current_A").get<double>());
    row.published_torque_density = opt(r, "torque_density_Nm_per_L");
    row.published_torque_per_ampere = opt(r, "torque_per_ampere_Nm_per_A");
    row.published_torque_per_pm_volume = opt(r, "torque_per_pm_volume_Nm_per_L");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MetricsRow simulated_row(const MotorSpec& spec, double avg_torque, double current) {
  MetricsRow r;
  r.label = spec.label;
  r.source = "simulated";
  r.metrics = motor_metrics(spec, avg_torque, current);
  return r;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct PocRow {
  double current = 0.0;
  FluxSplit split;
};

inline nlohmann::json to_json(const RadialForceReport& r) {
  return {{"fx_N", r.fx}, {"fy_N", r.fy}, {"net_N", r.net}, {"pole_sum_N", r.pole_sum}, {"imbalance", r.imbalance()}, {"per_pole_N", r.per_pole}};
}

}  // namespace csrm
