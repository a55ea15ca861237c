#pragma once

// Command implementations behind the csrm executable. Each command writes its
// files into an output directory together with a manifest and returns the
// process exit code.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrm/analysis.hpp"
#include "csrm/config.hpp"
#include "csrm/report.hpp"
#include "csrm/version.hpp"

namespace csrm::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kSolve = 3, kDomain = 4, kIo = 5 };

inline constexpr const char* kOutDirEnv = "CSRM_OUT_DIR";

struct RunOptions {
  fs::path config_path;
  fs::path published_path;
  std::vector<std::string> motors;  // empty: every motor known to the config
  std::optional<double> current;    // default: the config's rated current
  int angles = 64;
  int current_points = 16;
  int workers = 1;
  std::optional<fs::path> out_dir;
  bool trace = false;
  double diagnose_angle_deg = 0.0;
};

/// --out wins, then the environment variable, then ./csrm_out.
inline fs::path resolve_out_dir(const RunOptions& o) {
  if (o.out_dir) return *o.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "csrm_out";
}

/// Tracks files written by a command so they can be listed in the manifest
/// or removed when the command fails.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("failed writing " + p.string());
    files_.push_back({name, hex64(fnv1a64(content))});
  }

  void remove_all() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f.first, ec);
    files_.clear();
  }

  nlohmann::json listing() const {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : files_) a.push_back({{"file", f.first}, {"fnv1a64", f.second}});
    return a;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Loaded {
  Config config;
  std::string config_hash;
};

inline Loaded load(const RunOptions& o) {
  const std::string text = read_file(o.config_path);
  Loaded l{parse_config(detail::load_json_file(o.config_path), o.config_path.parent_path()), hex64(fnv1a64(text))};
  if (o.current && (!(*o.current >= 0.0) || *o.current > l.config.analysis.max_current))
    throw ConfigError("current must lie in [0, " + std::to_string(l.config.analysis.max_current) + "] A");
  if (o.angles < 16) throw ConfigError("--angles must be >= 16");
  if (o.workers < 1) throw ConfigError("--workers must be >= 1");
  l.config.analysis.workers = o.workers;
  l.config.analysis.solver.trace = o.trace;
  return l;
}

inline std::vector<MotorSpec> select_motors(const Config& c, const std::vector<std::string>& labels) {
  const auto all = c.motors();
  if (labels.empty()) return all;
  std::vector<MotorSpec> out;
  for (const auto& l : labels) {
    const MotorSpec* s = find_motor(all, l);
    if (!s) throw ConfigError("unknown motor label '" + l + "'");
    out.push_back(*s);
  }
  return out;
}

inline nlohmann::json manifest(const std::string& command, const RunOptions& o, const Loaded& l, double current,
                               const std::vector<MotorSpec>& motors, const OutputSet& outputs) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& m : motors) labels.push_back(m.label);
  return {{"tool", "csrm"},
          {"version", kVersion},
          {"report_format", kReportFormatVersion},
          {"command", command},
          {"config_file", o.config_path.filename().string()},
          {"config_fnv1a64", l.config_hash},
          {"current_A", current},
          {"angles", o.angles},
          {"motors", labels},
          {"outputs", outputs.listing()}};
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Runs `body`; on failure removes this command's outputs and writes a
/// failure report instead.
template <typename Body>
int guarded(const std::string& command, OutputSet& outputs, std::ostream& err, Body&& body) {
  nlohmann::json failure = {{"command", command}};
  int code = kOk;
  try {
    return body();
  } catch (const SolveError& e) {
    failure["error"] = e.what();
    failure["kind"] = "solver";
    failure["best_residual"] = e.best_residual();
    failure["trace_rows"] = e.trace().size();
    code = kSolve;
  } catch (const ConfigError& e) {
    failure["error"] = e.what();
    failure["kind"] = "config";
    code = kConfig;
  } catch (const std::domain_error& e) {
    failure["error"] = e.what();
    failure["kind"] = "domain";
    code = kDomain;
  } catch (const std::exception& e) {
    failure["error"] = e.what();
    failure["kind"] = "runtime";
    code = kIo;
  }
  err << "csrm " << command << ": " << failure["error"].get<std::string>() << "\n";
  outputs.remove_all();
  try {
    OutputSet report(outputs.dir());
    report.write("failure_report.json", dump(failure));
  } catch (const std::exception& e) {
    err << "csrm " << command << ": could not write failure report: " << e.what() << "\n";
  }
  return code;
}

// ---------------------------------------------------------------------------

inline int cmd_catalog(const RunOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const Loaded l = load(o);
    out << "motor  Ns/Nr  PM    PM volume [mL]\n";
    for (const auto& s : l.config.motors()) {
      char line[96];
      std::snprintf(line, sizeof line, "%-5s  %d/%d  %-4s  %.3f\n", s.label.c_str(), s.stator_teeth, s.rotor_teeth,
                    std::string(to_string(s.pm)).c_str(), pm_volume(s));
      out << line;
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "csrm catalog: " << e.what() << "\n";
    return kConfig;
  }
}

inline int cmd_sweep(const RunOptions& o, std::ostream& out, std::ostream& err) {
  OutputSet outputs(resolve_out_dir(o));
  return guarded("sweep", outputs, err, [&]() {
    const Loaded l = load(o);
    const double current = o.current.value_or(l.config.rated_current);
    const auto motors = select_motors(l.config, o.motors);
    nlohmann::json summary = {{"current_A", current}, {"angles", o.angles}, {"motors", nlohmann::json::array()}};
    for (const auto& spec : motors) {
      const MotorModel model = l.config.model(spec);
      const TorqueCurve c = torque_curve(model, current, o.angles, l.config.analysis);
      outputs.write("torque_" + spec.label + ".csv", torque_csv(c));
      nlohmann::json row = {{"label", spec.label}, {"file", "torque_" + spec.label + ".csv"}};
      if (o.angles % 2 == 0) {
        const auto avg = stroke_average(c);
        row["stroke_mean_Nm"] = {{"total", avg.total}, {"coil", avg.coil_only}, {"pm", avg.pm_contribution}};
      }
      summary["motors"].push_back(row);
      if (o.trace) {
        const auto st = solve_operating_point(model, {0.0, {current, 0.0, 0.0}}, l.config.analysis);
        std::ostringstream t;
        write_trace_csv(t, st.result.trace);
        outputs.write("trace_" + spec.label + ".csv", t.str());
      }
      out << "sweep " << spec.label << ": " << c.angles_deg.size() << " angles at " << current << " A\n";
    }
    outputs.write("sweep_summary.json", dump(summary));
    const auto m = manifest("sweep", o, l, current, motors, outputs);
    outputs.write("manifest.json", dump(m));
    return static_cast<int>(kOk);
  });
}

/// Relative agreement of a recomputed ratio with the printed one.
inline nlohmann::json ratio_check(std::optional<double> printed, std::optional<double> recomputed) {
  if (!printed || !recomputed) return nullptr;
  return {{"printed", *printed}, {"recomputed", *recomputed}, {"abs_diff", std::abs(*printed - *recomputed)},
          {"within_0_02", std::abs(*printed - *recomputed) <= 0.02}};
}

inline int cmd_compare(const RunOptions& o, std::ostream& out, std::ostream& err) {
  OutputSet outputs(resolve_out_dir(o));
  return guarded("compare", outputs, err, [&]() {
    const Loaded l = load(o);
    const double current = o.current.value_or(l.config.rated_current);
    if (!(current > 0.0)) throw ConfigError("compare needs a current > 0");
    const auto motors = select_motors(l.config, o.motors);
    std::vector<MetricsRow> rows;
    for (const auto& spec : motors)
      rows.push_back(simulated_row(spec, average_torque(l.config.model(spec), current, l.config.analysis), current));
    const auto published = load_published_rows(o.published_path);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : published) {
      rows.push_back(r);
      checks.push_back({{"label", r.label},
                        {"torque_density", ratio_check(r.published_torque_density, r.metrics.torque_density)},
                        {"torque_per_ampere", ratio_check(r.published_torque_per_ampere, r.metrics.torque_per_ampere)},
                        {"torque_per_pm_volume", ratio_check(r.published_torque_per_pm_volume, r.metrics.torque_per_pm_volume)}});
    }
    nlohmann::json j = {{"current_A", current}, {"rows", nlohmann::json::array()}, {"published_arithmetic", checks}};
    for (const auto& r : rows) j["rows"].push_back(to_json(r));
    const std::string table = format_metrics_table(rows);
    outputs.write("compare.json", dump(j));
    outputs.write("compare.txt", table);
    auto m = manifest("compare", o, l, current, motors, outputs);
    m["published_file"] = o.published_path.filename().string();
    m["published_fnv1a64"] = hex64(fnv1a64(read_file(o.published_path)));
    outputs.write("manifest.json", dump(m));
    out << table;
    return static_cast<int>(kOk);
  });
}

inline int cmd_diagnose(const RunOptions& o, std::ostream& out, std::ostream& err) {
  OutputSet outputs(resolve_out_dir(o));
  return guarded("diagnose", outputs, err, [&]() {
    const Loaded l = load(o);
    const double current = o.current.value_or(l.config.rated_current);
    if (o.motors.size() != 1) throw ConfigError("diagnose takes exactly one motor label");
    if (o.current_points < 2) throw ConfigError("diagnose needs at least 2 current points");
    const auto motors = select_motors(l.config, o.motors);
    const MotorSpec& spec = motors.front();
    const MotorModel model = l.config.model(spec);
    const double theta = o.diagnose_angle_deg;

    nlohmann::json j = {{"label", spec.label}, {"theta_deg", theta}, {"current_A", current}};
    if (spec.pm == PmArrangement::NoPm) {
      j["poc"] = nullptr;
      out << "diagnose " << spec.label << ": motor has no magnets; PoC flux split not applicable\n";
    } else {
      std::ostringstream csv;
      csv << "current_A,airgap_fraction,yoke_fraction\n";
      nlohmann::json poc = nlohmann::json::array();
      out << "PoC flux split (" << spec.label << ", theta " << theta << " deg)\n  current_A  airgap  yoke\n";
      for (int k = 0; k < o.current_points; ++k) {
        const double i = current * k / (o.current_points - 1);
        const auto s = pm_flux_split(model, {theta, {i, 0.0, 0.0}}, l.config.analysis);
        csv << detail::num(i) << ',' << detail::num(s.airgap_fraction) << ',' << detail::num(s.yoke_fraction) << "\n";
        poc.push_back({{"current_A", i}, {"airgap_fraction", s.airgap_fraction}, {"yoke_fraction", s.yoke_fraction}});
        char line[80];
        std::snprintf(line, sizeof line, "  %9.3f  %6.3f  %5.3f\n", i, s.airgap_fraction, s.yoke_fraction);
        out << line;
      }
      j["poc"] = poc;
      outputs.write("poc_" + spec.label + ".csv", csv.str());
    }
    const auto f = radial_force_balance(model, {theta, {current, 0.0, 0.0}}, l.config.analysis);
    j["radial_force"] = to_json(f);
    char line[160];
    std::snprintf(line, sizeof line, "radial force at %.3g A: net %.4g N, pole sum %.4g N, imbalance %.3g%%\n", current, f.net,
                  f.pole_sum, 100.0 * f.imbalance());
    out << line;
    outputs.write("diagnose_" + spec.label + ".json", dump(j));
    outputs.write("manifest.json", dump(manifest("diagnose", o, l, current, motors, outputs)));
    return static_cast<int>(kOk);
  });
}

}  // namespace csrm::cli
