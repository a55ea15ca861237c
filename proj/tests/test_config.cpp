#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "csrm/config.hpp"
#include "test_support.hpp"

using namespace csrm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json reference_json() { return detail::load_json_file(csrm::test::reference_config_path()); }

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("csrm_config_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Config, ReferenceLoadsAllEightMotors) {
  const auto& c = csrm::test::reference();
  const auto motors = c.motors();
  ASSERT_EQ(motors.size(), 8u);
  for (std::size_t k = 0; k < motors.size(); ++k) EXPECT_EQ(motors[k].label, csrm::test::kCatalogLabels[k]);
  EXPECT_DOUBLE_EQ(c.rated_current, 8.0);
  EXPECT_EQ(c.analysis.coenergy_points, 33);
  EXPECT_EQ(c.model_options.leakage_placement, LeakagePlacement::InterCore);
  ASSERT_TRUE(c.magnet.has_value());
  EXPECT_EQ(c.magnet->name, "ndfeb-n35");
}

TEST(Config, LengthsAreConvertedToMetres) {
  const auto j = reference_json();
  const auto& d = csrm::test::reference().reference.dims;
  EXPECT_DOUBLE_EQ(d.airgap_length, j["geometry"]["airgap_length_mm"].get<double>() * 1e-3);
  EXPECT_DOUBLE_EQ(d.stator_outer_radius, 0.05);
  // Zero piece length stands for the full stack.
  ASSERT_TRUE(d.pm1_dims.has_value());
  EXPECT_DOUBLE_EQ(d.pm1_dims->length, d.stack_length);
}

TEST(Config, ModelUsesMagnetOnlyForPmMotors) {
  const auto& c = csrm::test::reference();
  EXPECT_FALSE(c.model("1a").magnet.has_value());
  EXPECT_TRUE(c.model("2b").magnet.has_value());
  EXPECT_THROW(c.model("9z"), ConfigError);
}

TEST(Config, RejectsMissingAndMalformedKeys) {
  auto j = reference_json();
  j["geometry"].erase("airgap_length_mm");
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["geometry"]["airgap_length_mm"] = "thin";
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j.erase("geometry");
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["format_version"] = 2;
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["materials"].erase("iron");
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, RejectsUnknownChoices) {
  auto j = reference_json();
  j["materials"]["iron"]["model"] = "hysteretic";
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["model"]["leakage_placement"] = "everywhere";
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["motors"] = json::array({{{"label", "x"}, {"pm", "Pm9"}}});
  EXPECT_THROW(parse_config(j), ConfigError);

  j = reference_json();
  j["materials"]["iron"] = {{"model", "table"}};
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, RejectsInconsistentMagnet) {
  auto j = reference_json();
  j["materials"]["magnet"]["hc"] = 100.0;
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, ReadsLinearAndTabulatedIron) {
  auto j = reference_json();
  j["materials"]["iron"] = {{"name", "lin"}, {"model", "linear"}, {"mu_r", 2000}};
  const auto lin = parse_config(j);
  EXPECT_NEAR(lin.iron.curve->initial_permeability(), 2000 * 4e-7 * 3.14159265358979323846, 1e-12);

  const auto dir = scratch_dir("table");
  std::ofstream(dir / "bh.txt") << "0 0\n100 0.8\n1000 1.5\n10000 1.9\n";
  j["materials"]["iron"] = {{"name", "tab"}, {"model", "table"}, {"file", "bh.txt"}};
  const auto tab = parse_config(j, dir);
  EXPECT_NEAR(b_of_h(*tab.iron.curve, 100.0), 0.8, 1e-12);
  EXPECT_EQ(tab.model("1a").spec.material_ref, "tab");
  fs::remove_all(dir);
}

TEST(Config, MaterialsMayLiveInASeparateFile) {
  const auto dir = scratch_dir("materials");
  auto j = reference_json();
  std::ofstream(dir / "mats.json") << j["materials"].dump();
  j["materials"] = "mats.json";
  std::ofstream(dir / "run.json") << j.dump();
  const auto c = load_config(dir / "run.json");
  EXPECT_EQ(c.iron.name, "si-steel-atan");
  ASSERT_TRUE(c.magnet.has_value());
  fs::remove_all(dir);
}

TEST(Config, ExtraMotorsFollowTheCatalog) {
  auto j = reference_json();
  j["motors"] = json::array({{{"label", "mut"}, {"rotor_teeth", 26}, {"pm", "NoPm"}, {"omitted_cores", {0}}}});
  const auto c = parse_config(j);
  const auto all = c.motors();
  ASSERT_EQ(all.size(), 9u);
  const auto& m = all.back();
  EXPECT_EQ(m.label, "mut");
  EXPECT_EQ(m.rotor_teeth, 26);
  EXPECT_EQ(m.omitted_cores, std::vector<int>{0});
  EXPECT_DOUBLE_EQ(m.turns_per_coil, c.reference.turns_per_coil);
}

TEST(Config, SolverAndAnalysisOverrides) {
  auto j = reference_json();
  j["solver"]["tol_residual"] = 1e-8;
  j["analysis"]["rated_current"] = 6.0;
  j["analysis"]["stroke_points"] = 17;
  const auto c = parse_config(j);
  EXPECT_DOUBLE_EQ(c.analysis.solver.tol_residual, 1e-8);
  EXPECT_DOUBLE_EQ(c.rated_current, 6.0);
  EXPECT_EQ(c.analysis.stroke_points, 17);
}

TEST(Config, MissingOrBrokenFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/csrm.json"), ConfigError);
  const auto dir = scratch_dir("broken");
  std::ofstream(dir / "bad.json") << "{ \"geometry\": ";
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}
