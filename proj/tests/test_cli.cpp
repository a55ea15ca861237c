#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csrm/cli.hpp"
#include "test_support.hpp"

using namespace csrm;
using namespace csrm::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("csrm_cli_" + name);
  fs::remove_all(d);
  return d;
}

RunOptions base_options(const fs::path& out) {
  RunOptions o;
  o.config_path = csrm::test::reference_config_path();
  o.published_path = csrm::test::published_table_path();
  o.out_dir = out;
  return o;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header) {
  std::ifstream in(p);
  std::getline(in, *header);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, CatalogListsEveryMotor) {
  std::ostringstream out, err;
  RunOptions o = base_options(scratch("catalog"));
  ASSERT_EQ(cmd_catalog(o, out, err), kOk) << err.str();
  const std::string text = out.str();
  for (const char* l : csrm::test::kCatalogLabels) EXPECT_NE(text.find(std::string(l) + " "), std::string::npos) << l;
  EXPECT_NE(text.find("4b     24/22  Both  9.000"), std::string::npos) << text;
  EXPECT_NE(text.find("2b     24/22  Pm1   2.725"), std::string::npos) << text;
}

TEST(Cli, SweepWritesCurvesAndManifest) {
  const auto dir = scratch("sweep");
  RunOptions o = base_options(dir);
  o.motors = {"2b"};
  o.angles = 16;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(o, out, err), kOk) << err.str();

  std::string header;
  const auto rows = read_csv(dir / "torque_2b.csv", &header);
  EXPECT_EQ(header, "angle_deg,T_total_Nm,T_coil_Nm,T_pm_Nm");
  ASSERT_EQ(rows.size(), 16u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 4u);
    EXPECT_NEAR(r[1], r[2] + r[3], 1e-12 * (1.0 + std::abs(r[1])));
  }

  const auto m = read_json(dir / "manifest.json");
  EXPECT_EQ(m["version"], kVersion);
  EXPECT_EQ(m["command"], "sweep");
  EXPECT_EQ(m["config_fnv1a64"], hex64(fnv1a64(read_file(o.config_path))));
  EXPECT_EQ(m["current_A"].get<double>(), 8.0);
  for (const auto& f : m["outputs"]) EXPECT_EQ(f["fnv1a64"], hex64(fnv1a64(read_file(dir / f["file"].get<std::string>()))));
  const auto s = read_json(dir / "sweep_summary.json");
  EXPECT_TRUE(s["motors"][0].contains("stroke_mean_Nm"));
  fs::remove_all(dir);
}

TEST(Cli, SweepIsByteIdenticalAcrossWorkerCounts) {
  std::map<int, std::map<std::string, std::string>> files;
  for (int w : {1, 4, 8}) {
    const auto dir = scratch("workers" + std::to_string(w));
    RunOptions o = base_options(dir);
    o.motors = {"1a", "4b"};
    o.angles = 16;
    o.workers = w;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_sweep(o, out, err), kOk) << err.str();
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().filename() != "manifest.json") files[w][e.path().filename().string()] = read_file(e.path());
    fs::remove_all(dir);
  }
  ASSERT_EQ(files[1].size(), 3u);
  EXPECT_EQ(files[1], files[4]);
  EXPECT_EQ(files[1], files[8]);
}

TEST(Cli, NoPmMotorHasZeroPmColumn) {
  const auto dir = scratch("nopm");
  RunOptions o = base_options(dir);
  o.motors = {"1b"};
  o.angles = 16;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(o, out, err), kOk) << err.str();
  std::string header;
  for (const auto& r : read_csv(dir / "torque_1b.csv", &header)) {
    EXPECT_EQ(r[3], 0.0);
    EXPECT_EQ(r[1], r[2]);
  }
  fs::remove_all(dir);
}

TEST(Cli, CompareAddsPublishedRowsAndArithmeticChecks) {
  const auto dir = scratch("compare");
  RunOptions o = base_options(dir);
  o.motors = {"4b"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare(o, out, err), kOk) << err.str();
  const auto j = read_json(dir / "compare.json");
  ASSERT_EQ(j["rows"].size(), 8u);
  EXPECT_EQ(j["rows"][0]["label"], "4b");
  EXPECT_EQ(j["rows"][0]["source"], "simulated");
  EXPECT_EQ(j["rows"][1]["label"], "4b (published)");
  EXPECT_NEAR(j["rows"][1]["torque_per_pm_volume_Nm_per_L"].get<double>(), 504.44, 0.01);
  for (const auto& c : j["published_arithmetic"]) {
    for (const char* k : {"torque_density", "torque_per_ampere", "torque_per_pm_volume"}) {
      if (!c[k].is_null()) {
        EXPECT_TRUE(c[k]["within_0_02"].get<bool>()) << c["label"] << " " << k;
      }
    }
  }
  EXPECT_NE(out.str().find("T/V_pm[Nm/L]"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "compare.txt"));
  EXPECT_TRUE(read_json(dir / "manifest.json").contains("published_fnv1a64"));
  fs::remove_all(dir);
}

TEST(Cli, DiagnoseNoPmMotorReportsForceOnly) {
  const auto dir = scratch("diag1b");
  RunOptions o = base_options(dir);
  o.motors = {"1b"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_diagnose(o, out, err), kOk) << err.str();
  const auto j = read_json(dir / "diagnose_1b.json");
  EXPECT_TRUE(j["poc"].is_null());
  EXPECT_TRUE(j.contains("radial_force"));
  EXPECT_FALSE(fs::exists(dir / "poc_1b.csv"));
  EXPECT_NE(out.str().find("not applicable"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, DiagnosePmMotorWritesFluxSplitColumn) {
  const auto dir = scratch("diag4b");
  RunOptions o = base_options(dir);
  o.motors = {"4b"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_diagnose(o, out, err), kOk) << err.str();
  const auto j = read_json(dir / "diagnose_4b.json");
  ASSERT_EQ(j["poc"].size(), 16u);
  double peak = 0.0;
  for (const auto& r : j["poc"]) {
    const double f = r["airgap_fraction"].get<double>();
    EXPECT_NEAR(f + r["yoke_fraction"].get<double>(), 1.0, 1e-9);
    peak = std::max(peak, f);
    EXPECT_GE(f, peak - 0.03);
  }
  EXPECT_GT(j["poc"][15]["airgap_fraction"].get<double>(), j["poc"][0]["airgap_fraction"].get<double>());
  std::string header;
  EXPECT_EQ(read_csv(dir / "poc_4b.csv", &header).size(), 16u);
  EXPECT_EQ(header, "current_A,airgap_fraction,yoke_fraction");
  fs::remove_all(dir);
}

TEST(Cli, FailureRemovesPartialOutputsAndWritesReport) {
  const auto dir = scratch("failure");
  fs::create_directories(dir);
  auto cfg = detail::load_json_file(csrm::test::reference_config_path());
  cfg["motors"] = json::array({{{"label", "broken"}, {"stator_teeth", 30}}});
  std::ofstream(dir / "cfg.json") << cfg.dump();

  RunOptions o = base_options(dir / "out");
  o.config_path = dir / "cfg.json";
  o.motors = {"1a", "broken"};
  o.angles = 16;
  std::ostringstream out, err;
  EXPECT_NE(cmd_sweep(o, out, err), kOk);
  EXPECT_FALSE(fs::exists(dir / "out" / "torque_1a.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
  const auto report = read_json(dir / "out" / "failure_report.json");
  EXPECT_EQ(report["command"], "sweep");
  EXPECT_FALSE(err.str().empty());
  fs::remove_all(dir);
}

TEST(Cli, RejectsBadArguments) {
  const auto dir = scratch("bad");
  std::ostringstream out, err;
  RunOptions o = base_options(dir);
  o.current = -1.0;
  EXPECT_EQ(cmd_sweep(o, out, err), kConfig);
  o = base_options(dir);
  o.angles = 8;
  EXPECT_EQ(cmd_sweep(o, out, err), kConfig);
  o = base_options(dir);
  o.motors = {"7q"};
  EXPECT_EQ(cmd_compare(o, out, err), kConfig);
  o = base_options(dir);
  o.motors = {"2a", "2b"};
  EXPECT_EQ(cmd_diagnose(o, out, err), kConfig);
  o = base_options(dir);
  o.config_path = dir / "missing.json";
  EXPECT_EQ(cmd_catalog(o, out, err), kConfig);
  fs::remove_all(dir);
}

TEST(Cli, OutputDirectoryPrecedence) {
  const auto env_dir = scratch("env");
  const auto flag_dir = scratch("flag");
  ::setenv(kOutDirEnv, env_dir.c_str(), 1);
  RunOptions o = base_options(flag_dir);
  EXPECT_EQ(resolve_out_dir(o), flag_dir);
  o.out_dir.reset();
  EXPECT_EQ(resolve_out_dir(o), env_dir);

  o.motors = {"1b"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_diagnose(o, out, err), kOk) << err.str();
  EXPECT_TRUE(fs::exists(env_dir / "diagnose_1b.json"));
  EXPECT_FALSE(fs::exists(flag_dir));

  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(resolve_out_dir(o), fs::path("csrm_out"));
  fs::remove_all(env_dir);
}

TEST(Cli, TraceFlagWritesIterationLog) {
  const auto dir = scratch("trace");
  RunOptions o = base_options(dir);
  o.motors = {"3a"};
  o.angles = 16;
  o.trace = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(o, out, err), kOk) << err.str();
  std::string header;
  EXPECT_FALSE(read_csv(dir / "trace_3a.csv", &header).empty());
  EXPECT_EQ(header, "step,iteration,residual,damping");
  fs::remove_all(dir);
}
