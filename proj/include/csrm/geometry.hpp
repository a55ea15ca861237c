#pragma once

// Parametric description of the three-phase connected C-core motors: teeth
// layout, PM placement rules, derived angles and volumes.
//
// Stator layout. The 2*m*c_cores_per_phase/2 "phase groups" sit on a uniform
// pitch of 360/G degrees. Each group holds two adjacent C-cores of the same
// phase, i.e. four teeth spaced exactly one rotor pitch apart, so that all
// teeth of a phase align simultaneously. Group g belongs to phase g mod m, and
// groups g and g + m are diametrically opposite. PM1 pieces fill the gaps
// between groups (the only gaps between C-cores of different phases); PM2
// pieces fill the slot opening inside every C-core.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csrm/units.hpp"

namespace csrm {

enum class PmArrangement { NoPm, Pm1, Pm2, Both };

inline std::string_view to_string(PmArrangement pm) {
  switch (pm) {
    case PmArrangement::NoPm: return "NoPm";
    case PmArrangement::Pm1: return "Pm1";
    case PmArrangement::Pm2: return "Pm2";
    case PmArrangement::Both: return "Both";
  }
  return "?";
}

inline std::optional<PmArrangement> parse_pm_arrangement(std::string_view s) {
  if (s == "NoPm") return PmArrangement::NoPm;
  if (s == "Pm1") return PmArrangement::Pm1;
  if (s == "Pm2") return PmArrangement::Pm2;
  if (s == "Both") return PmArrangement::Both;
  return std::nullopt;
}

inline bool has_pm1(PmArrangement pm) { return pm == PmArrangement::Pm1 || pm == PmArrangement::Both; }
inline bool has_pm2(PmArrangement pm) { return pm == PmArrangement::Pm2 || pm == PmArrangement::Both; }

/// One magnet piece; `width` is the length along the magnetization direction.
struct PmPieceDims {
  double width = 0.0;
  double height = 0.0;
  double length = 0.0;

  double volume() const { return width * height * length; }
};

/// All lengths in metres.
struct GeometryDims {
  double stack_length = 0.0;
  double airgap_length = 0.0;
  double stator_outer_radius = 0.0;
  double rotor_radius = 0.0;
  double stator_tooth_width = 0.0;
  double rotor_tooth_width = 0.0;
  double yoke_depth = 0.0;
  double tooth_height = 0.0;
  double rotor_tooth_height = 0.0;
  double rotor_yoke_depth = 0.0;
  double bridge_depth = 0.0;  // iron neck joining neighbouring C-cores
  std::optional<PmPieceDims> pm1_dims;
  std::optional<PmPieceDims> pm2_dims;

  double bore_radius() const { return rotor_radius + airgap_length; }
  double airgap_mean_radius() const { return rotor_radius + 0.5 * airgap_length; }
  double envelope_volume() const { return pi * stator_outer_radius * stator_outer_radius * stack_length; }
};

struct MotorSpec {
  std::string label;
  int stator_teeth = 24;
  int rotor_teeth = 22;
  int phases = 3;
  int teeth_per_pole = 2;
  int c_cores_per_phase = 4;
  PmArrangement pm = PmArrangement::NoPm;
  GeometryDims dims;
  double turns_per_coil = 0.0;
  std::string material_ref;
  std::optional<std::string> magnet_ref;
  // Magnets stacked radially, magnetically in parallel, in each inter-phase gap.
  int pm1_pieces_per_gap = 1;
  // Mutations used by diagnostics; both are empty/false for catalog motors.
  std::vector<int> omitted_cores;
  bool inert_magnets = false;

  int core_count() const { return phases * c_cores_per_phase; }
  int group_count() const { return core_count() / 2; }
};

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  void fail(std::string msg) {
    pass = false;
    errors.push_back(std::move(msg));
  }
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }

  std::string summary() const {
    std::string out;
    for (const auto& e : errors) out += "error: " + e + "\n";
    for (const auto& w : warnings) out += "warning: " + w + "\n";
    return out;
  }
};

inline double rotor_pitch_deg(const MotorSpec& spec) { return 360.0 / spec.rotor_teeth; }
inline double rotor_pitch_deg(int rotor_teeth) { return 360.0 / rotor_teeth; }
inline double unaligned_offset_deg(const MotorSpec& spec) { return 0.5 * rotor_pitch_deg(spec); }

inline double group_pitch_deg(const MotorSpec& spec) { return 360.0 / spec.group_count(); }

inline int phase_of_core(const MotorSpec& spec, int core) { return (core / 2) % spec.phases; }
inline int core_of_tooth(int tooth) { return tooth / 2; }

/// Mechanical angle of stator tooth `tooth` (0..Ns-1), degrees.
inline double tooth_angle_deg(const MotorSpec& spec, int tooth) {
  const int group = tooth / 4;
  const int k = tooth % 4;
  return group * group_pitch_deg(spec) + (k - 1.5) * rotor_pitch_deg(spec);
}

/// Rotor angle (within one pitch, centred on zero) at which `phase` is aligned.
/// Phase 0 is aligned at 0.
inline double aligned_angle_deg(const MotorSpec& spec, int phase) {
  return wrap_centered(phase * group_pitch_deg(spec), rotor_pitch_deg(spec));
}

/// Angular position of rotor tooth k at rotor angle theta.
inline double rotor_tooth_angle_deg(const MotorSpec& spec, double theta_deg, int k) {
  return theta_deg + (k + 0.5) * rotor_pitch_deg(spec);
}

inline bool core_omitted(const MotorSpec& spec, int core) {
  return std::find(spec.omitted_cores.begin(), spec.omitted_cores.end(), core) != spec.omitted_cores.end();
}

/// Gap g sits between the last tooth of group g and the first tooth of group g+1.
struct Pm1Gap {
  int group = 0;
  int tooth_before = 0;
  int tooth_after = 0;
};

inline std::vector<Pm1Gap> pm1_gaps(const MotorSpec& spec) {
  std::vector<Pm1Gap> gaps;
  if (!has_pm1(spec.pm)) return gaps;
  const int groups = spec.group_count();
  for (int g = 0; g < groups; ++g) {
    const int before = 4 * g + 3;
    const int after = (4 * (g + 1)) % spec.stator_teeth;
    if (core_omitted(spec, core_of_tooth(before)) || core_omitted(spec, core_of_tooth(after))) continue;
    gaps.push_back({g, before, after});
  }
  return gaps;
}

inline std::vector<int> pm2_cores(const MotorSpec& spec) {
  std::vector<int> cores;
  if (!has_pm2(spec.pm)) return cores;
  for (int c = 0; c < spec.core_count(); ++c)
    if (!core_omitted(spec, c)) cores.push_back(c);
  return cores;
}

inline int pm1_piece_count(const MotorSpec& spec) {
  return static_cast<int>(pm1_gaps(spec).size()) * spec.pm1_pieces_per_gap;
}
inline int pm2_piece_count(const MotorSpec& spec) { return static_cast<int>(pm2_cores(spec).size()); }

/// Total magnet volume, mL.
inline double pm_volume(const MotorSpec& spec) {
  double v = 0.0;
  if (has_pm1(spec.pm) && spec.dims.pm1_dims) v += pm1_piece_count(spec) * spec.dims.pm1_dims->volume();
  if (has_pm2(spec.pm) && spec.dims.pm2_dims) v += pm2_piece_count(spec) * spec.dims.pm2_dims->volume();
  return m3_to_ml(v);
}

/// Envelope volume pi * R^2 * L, mL.
inline double motor_volume(const MotorSpec& spec) { return m3_to_ml(spec.dims.envelope_volume()); }

/// Arc-length opening between two tooth tips at the bore, metres.
inline double tooth_tip_opening(const MotorSpec& spec, double tooth_spacing_deg) {
  return deg_to_rad(tooth_spacing_deg) * spec.dims.bore_radius() - spec.dims.stator_tooth_width;
}

/// Slot opening between the two teeth of one C-core.
inline double core_slot_opening(const MotorSpec& spec) { return tooth_tip_opening(spec, rotor_pitch_deg(spec)); }

/// Opening between neighbouring phase groups (where PM1 sits).
inline double interphase_opening(const MotorSpec& spec) {
  return tooth_tip_opening(spec, group_pitch_deg(spec) - 3.0 * rotor_pitch_deg(spec));
}

namespace detail {

inline void check_positive(ValidationReport& r, const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) r.fail(std::string(name) + " must be > 0");
}

inline void check_piece(ValidationReport& r, const char* name, const PmPieceDims& p) {
  if (!(p.width > 0.0 && p.height > 0.0 && p.length > 0.0)) r.fail(std::string(name) + " must have positive w, h, l");
}

}  // namespace detail

inline ValidationReport validate_dims(const GeometryDims& d) {
  ValidationReport r;
  detail::check_positive(r, "stack_length", d.stack_length);
  detail::check_positive(r, "airgap_length", d.airgap_length);
  detail::check_positive(r, "stator_outer_radius", d.stator_outer_radius);
  detail::check_positive(r, "rotor_radius", d.rotor_radius);
  detail::check_positive(r, "stator_tooth_width", d.stator_tooth_width);
  detail::check_positive(r, "rotor_tooth_width", d.rotor_tooth_width);
  detail::check_positive(r, "yoke_depth", d.yoke_depth);
  detail::check_positive(r, "tooth_height", d.tooth_height);
  detail::check_positive(r, "rotor_tooth_height", d.rotor_tooth_height);
  detail::check_positive(r, "rotor_yoke_depth", d.rotor_yoke_depth);
  detail::check_positive(r, "bridge_depth", d.bridge_depth);
  if (d.pm1_dims) detail::check_piece(r, "pm1_dims", *d.pm1_dims);
  if (d.pm2_dims) detail::check_piece(r, "pm2_dims", *d.pm2_dims);
  if (!r.pass) return r;

  if (!(d.airgap_length < 0.05 * d.rotor_radius)) r.fail("airgap_length must be < 0.05 * rotor_radius");
  const double bore = d.stator_outer_radius - d.yoke_depth - d.tooth_height;
  if (d.bore_radius() > bore * (1.0 + 1e-12))
    r.fail("rotor_radius + airgap_length exceeds the bore left by tooth_height and yoke_depth");
  if (d.rotor_tooth_height + d.rotor_yoke_depth >= d.rotor_radius)
    r.fail("rotor_tooth_height + rotor_yoke_depth must be < rotor_radius");
  if (d.bridge_depth > d.yoke_depth) r.fail("bridge_depth must not exceed yoke_depth");
  return r;
}

inline ValidationReport validate_spec(const MotorSpec& spec) {
  ValidationReport r = validate_dims(spec.dims);

  if (spec.phases != 3) r.fail("phases must be 3");
  if (spec.teeth_per_pole != 2) r.fail("teeth_per_pole must be 2");
  if (spec.c_cores_per_phase <= 0 || spec.c_cores_per_phase % 2 != 0)
    r.fail("c_cores_per_phase must be a positive even count (diagonal pairing)");
  if (spec.stator_teeth != spec.phases * spec.c_cores_per_phase * spec.teeth_per_pole)
    r.fail("stator_teeth != phases * c_cores_per_phase * teeth_per_pole (" + std::to_string(spec.stator_teeth) +
           " != " + std::to_string(spec.phases) + "*" + std::to_string(spec.c_cores_per_phase) + "*" +
           std::to_string(spec.teeth_per_pole) + ")");
  if (spec.rotor_teeth <= 0) r.fail("rotor_teeth must be > 0");
  else if (spec.rotor_teeth != 22 && spec.rotor_teeth != 26) r.warn("non-catalog rotor teeth");
  if (!(spec.turns_per_coil > 0.0)) r.fail("turns_per_coil must be > 0");
  if (spec.material_ref.empty()) r.fail("material_ref is empty");

  const bool no_pm = spec.pm == PmArrangement::NoPm;
  if (no_pm && spec.magnet_ref) r.fail("NoPm spec must not carry a magnet_ref");
  if (!no_pm && !spec.magnet_ref) r.fail("PM spec requires a magnet_ref");
  if (has_pm1(spec.pm) && !spec.dims.pm1_dims) r.fail("PM1 arrangement requires pm1_dims");
  if (has_pm2(spec.pm) && !spec.dims.pm2_dims) r.fail("PM2 arrangement requires pm2_dims");
  if (spec.pm1_pieces_per_gap < 1) r.fail("pm1_pieces_per_gap must be >= 1");
  for (int c : spec.omitted_cores)
    if (c < 0 || c >= spec.core_count()) r.fail("omitted core index out of range");
  if (!r.pass) return r;

  // Layout sanity; the model still builds when these fire.
  const double tau = rotor_pitch_deg(spec);
  const double residue = std::fmod(spec.rotor_teeth, 2.0 * spec.phases);
  if (spec.rotor_teeth % 2 != 0 || residue == 0.0 || residue == spec.phases)
    r.warn("phases are not electrically displaced by a third of a rotor pitch");
  if (interphase_opening(spec) <= 0.0 || core_slot_opening(spec) <= 0.0)
    r.warn("neighbouring stator teeth overlap");
  if (has_pm2(spec.pm) && spec.dims.pm2_dims->width > core_slot_opening(spec))
    r.warn("PM2 piece wider than the C-core slot opening");
  if (has_pm1(spec.pm) && spec.dims.pm1_dims->width > interphase_opening(spec))
    r.warn("PM1 piece wider than the inter-phase opening");
  if (has_pm1(spec.pm) && spec.pm1_pieces_per_gap * spec.dims.pm1_dims->height > spec.dims.tooth_height)
    r.warn("stacked PM1 pieces are taller than the stator teeth");
  if (has_pm2(spec.pm) && spec.dims.pm2_dims->height > spec.dims.tooth_height)
    r.warn("PM2 piece taller than the stator teeth");
  if (3.0 * tau >= group_pitch_deg(spec)) r.warn("phase group spans more than its pitch");
  if (!spec.omitted_cores.empty()) r.warn("spec has omitted C-cores");
  return r;
}

/// Catalog labels 1a..4b: digit -> PM arrangement, letter -> rotor teeth.
struct CatalogRule {
  int rotor_teeth_a = 26;
  int rotor_teeth_b = 22;
  int pm1_pieces_per_gap_a = 2;
  int pm1_pieces_per_gap_b = 1;
};

struct CatalogInputs {
  GeometryDims dims;
  double turns_per_coil = 0.0;
  std::string material_ref;
  std::string magnet_ref;
  CatalogRule rule;
};

inline std::vector<MotorSpec> catalog(const CatalogInputs& in) {
  static constexpr PmArrangement kArrangements[] = {PmArrangement::NoPm, PmArrangement::Pm1, PmArrangement::Pm2,
                                                    PmArrangement::Both};
  std::vector<MotorSpec> out;
  for (int digit = 1; digit <= 4; ++digit) {
    for (char letter : {'a', 'b'}) {
      MotorSpec s;
      s.label = std::to_string(digit) + letter;
      s.stator_teeth = 24;
      s.phases = 3;
      s.teeth_per_pole = 2;
      s.c_cores_per_phase = 4;
      s.rotor_teeth = letter == 'a' ? in.rule.rotor_teeth_a : in.rule.rotor_teeth_b;
      s.pm1_pieces_per_gap = letter == 'a' ? in.rule.pm1_pieces_per_gap_a : in.rule.pm1_pieces_per_gap_b;
      s.pm = kArrangements[digit - 1];
      s.dims = in.dims;
      s.turns_per_coil = in.turns_per_coil;
      s.material_ref = in.material_ref;
      if (s.pm != PmArrangement::NoPm) s.magnet_ref = in.magnet_ref;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline const MotorSpec* find_motor(const std::vector<MotorSpec>& motors, std::string_view label) {
  for (const auto& m : motors)
    if (m.label == label) return &m;
  return nullptr;
}

}  // namespace csrm
