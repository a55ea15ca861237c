#pragma once

// JSON run configuration: reference geometry, materials, catalog rule, model
// and solver options. Lengths are millimetres and volumes mL in the file;
// everything is SI once loaded.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrm/analysis.hpp"
#include "csrm/geometry.hpp"
#include "csrm/materials.hpp"
#include "csrm/mec.hpp"

namespace csrm {

inline constexpr int kConfigFormatVersion = 1;

struct IronMaterial {
  std::string name;
  std::shared_ptr<const BhCurve> curve;
};

struct Config {
  int format_version = kConfigFormatVersion;
  CatalogInputs reference;
  IronMaterial iron;
  std::optional<MagnetMaterial> magnet;
  ModelOptions model_options;
  AnalysisOptions analysis;
  double rated_current = 8.0;
  std::vector<MotorSpec> extra_motors;

  std::vector<MotorSpec> motors() const {
    auto all = catalog(reference);
    all.insert(all.end(), extra_motors.begin(), extra_motors.end());
    return all;
  }

  MotorModel model(const MotorSpec& spec) const {
    MotorModel m;
    m.spec = spec;
    m.iron = iron.curve;
    if (spec.pm != PmArrangement::NoPm) m.magnet = magnet;
    m.options = model_options;
    return m;
  }

  MotorModel model(std::string_view label) const {
    const auto all = motors();
    const MotorSpec* s = find_motor(all, label);
    if (!s) throw ConfigError("unknown motor label '" + std::string(label) + "'");
    return model(*s);
  }
};

namespace detail {

using nlohmann::json;

inline double req(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline double mm(const json& j, const char* key) { return req(j, key) * 1e-3; }

inline std::optional<PmPieceDims> piece(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto& p = j.at(key);
  return PmPieceDims{mm(p, "width_mm"), mm(p, "height_mm"), mm(p, "length_mm")};
}

inline GeometryDims parse_dims(const json& g) {
  GeometryDims d;
  d.stack_length = mm(g, "stack_length_mm");
  d.airgap_length = mm(g, "airgap_length_mm");
  d.stator_outer_radius = mm(g, "stator_outer_radius_mm");
  d.rotor_radius = mm(g, "rotor_radius_mm");
  d.stator_tooth_width = mm(g, "stator_tooth_width_mm");
  d.rotor_tooth_width = mm(g, "rotor_tooth_width_mm");
  d.yoke_depth = mm(g, "yoke_depth_mm");
  d.tooth_height = mm(g, "tooth_height_mm");
  d.rotor_tooth_height = mm(g, "rotor_tooth_height_mm");
  d.rotor_yoke_depth = mm(g, "rotor_yoke_depth_mm");
  d.bridge_depth = mm(g, "bridge_depth_mm");
  d.pm1_dims = piece(g, "pm1");
  d.pm2_dims = piece(g, "pm2");
  // A piece length of zero in the file means "full stack length".
  for (auto* p : {&d.pm1_dims, &d.pm2_dims})
    if (*p && (*p)->length == 0.0) (*p)->length = d.stack_length;
  return d;
}

inline IronMaterial parse_iron(const json& j, const std::filesystem::path& base) {
  IronMaterial m;
  m.name = j.value("name", std::string("iron"));
  const std::string model = j.value("model", std::string("saturating"));
  if (model == "saturating") m.curve = std::make_shared<BhCurve>(BhCurve::saturating(req(j, "mu_i"), req(j, "bsat")));
  else if (model == "linear") m.curve = std::make_shared<BhCurve>(BhCurve::linear(req(j, "mu_r")));
  else if (model == "table") {
    if (!j.contains("file")) throw ConfigError("config: tabulated iron needs 'file'");
    m.curve = std::make_shared<BhCurve>(TabulatedBh::from_file((base / j.at("file").get<std::string>()).string()));
  } else {
    throw ConfigError("config: unknown iron model '" + model + "'");
  }
  return m;
}

inline MagnetMaterial parse_magnet(const json& j) {
  MagnetMaterial m;
  m.name = j.value("name", std::string("magnet"));
  m.br = req(j, "br");
  m.mu_rec = req(j, "mu_rec");
  m.hc = j.contains("hc") ? req(j, "hc") : recoil_coercivity(m.br, m.mu_rec);
  if (!recoil_consistent(m.br, m.mu_rec, m.hc))
    throw ConfigError("config: magnet '" + m.name + "' violates Br = mu0 mu_rec Hc within 5%");
  return m;
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using detail::req;
  Config c;
  c.format_version = j.value("format_version", kConfigFormatVersion);
  if (c.format_version != kConfigFormatVersion)
    throw ConfigError("config: unsupported format_version " + std::to_string(c.format_version));

  if (!j.contains("geometry")) throw ConfigError("config: missing 'geometry'");
  c.reference.dims = detail::parse_dims(j.at("geometry"));

  const auto& w = j.value("winding", nlohmann::json::object());
  c.reference.turns_per_coil = req(w, "turns_per_coil");

  nlohmann::json mats = j.value("materials", nlohmann::json::object());
  std::filesystem::path mat_base = base_dir;
  if (mats.is_string()) {
    const auto path = base_dir / mats.get<std::string>();
    mats = detail::load_json_file(path);
    mat_base = path.parent_path();
  }
  if (!mats.contains("iron")) throw ConfigError("config: missing 'materials.iron'");
  c.iron = detail::parse_iron(mats.at("iron"), mat_base);
  c.reference.material_ref = c.iron.name;
  if (mats.contains("magnet")) {
    c.magnet = detail::parse_magnet(mats.at("magnet"));
    c.reference.magnet_ref = c.magnet->name;
  }

  if (j.contains("catalog")) {
    const auto& r = j.at("catalog");
    c.reference.rule.rotor_teeth_a = r.value("rotor_teeth_a", 26);
    c.reference.rule.rotor_teeth_b = r.value("rotor_teeth_b", 22);
    c.reference.rule.pm1_pieces_per_gap_a = r.value("pm1_pieces_per_gap_a", 2);
    c.reference.rule.pm1_pieces_per_gap_b = r.value("pm1_pieces_per_gap_b", 1);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model_options.leakage_fraction = m.value("leakage_fraction", 0.05);
    c.model_options.fringing = m.value("fringing", true);
    const auto placement = parse_leakage_placement(m.value("leakage_placement", std::string("inter_core")));
    if (!placement) throw ConfigError("config: model.leakage_placement must be 'slot' or 'inter_core'");
    c.model_options.leakage_placement = *placement;
  }

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    c.analysis.coenergy_points = a.value("coenergy_points", 33);
    c.analysis.torque_step_deg = a.value("torque_step_deg", 0.1);
    c.analysis.stroke_points = a.value("stroke_points", 33);
    c.analysis.max_current = a.value("max_current", 20.0);
    c.rated_current = a.value("rated_current", 8.0);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.analysis.solver.tol_residual = s.value("tol_residual", 1e-10);
    c.analysis.solver.max_iter = s.value("max_iter", 100);
    c.analysis.solver.damping = s.value("damping", 1.0);
    c.analysis.solver.continuation_steps = s.value("continuation_steps", 1);
  }

  for (const auto& mj : j.value("motors", nlohmann::json::array())) {
    MotorSpec s;
    s.label = mj.at("label").get<std::string>();
    s.rotor_teeth = mj.value("rotor_teeth", 22);
    s.stator_teeth = mj.value("stator_teeth", 24);
    s.phases = mj.value("phases", 3);
    s.teeth_per_pole = mj.value("teeth_per_pole", 2);
    s.c_cores_per_phase = mj.value("c_cores_per_phase", 4);
    const auto pm = parse_pm_arrangement(mj.value("pm", std::string("NoPm")));
    if (!pm) throw ConfigError("config: motor '" + s.label + "' has an unknown PM arrangement");
    s.pm = *pm;
    s.dims = mj.contains("geometry") ? detail::parse_dims(mj.at("geometry")) : c.reference.dims;
    s.turns_per_coil = mj.value("turns_per_coil", c.reference.turns_per_coil);
    s.material_ref = c.reference.material_ref;
    if (s.pm != PmArrangement::NoPm) s.magnet_ref = c.reference.magnet_ref;
    s.pm1_pieces_per_gap = mj.value("pm1_pieces_per_gap", 1);
    s.omitted_cores = mj.value("omitted_cores", std::vector<int>{});
    c.extra_motors.push_back(std::move(s));
  }
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  return parse_config(detail::load_json_file(path), path.parent_path());
}

}  // namespace csrm
