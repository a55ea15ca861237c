// csrm: command-line front end for the C-core SRM equivalent-circuit toolkit.

#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "csrm/cli.hpp"

#ifndef CSRM_SOURCE_DIR
#define CSRM_SOURCE_DIR "."
#endif

namespace {

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace csrm::cli;
  CLI::App app{"Magnetic-equivalent-circuit simulator for 24-tooth C-core PM-assisted SRMs"};
  app.set_version_flag("--version", std::string(csrm::kVersion));
  app.require_subcommand(1);

  RunOptions opt;
  opt.config_path = std::string(CSRM_SOURCE_DIR) + "/config/reference.json";
  opt.published_path = std::string(CSRM_SOURCE_DIR) + "/data/table1_published.json";
  std::string config_path = opt.config_path.string();
  std::string published_path = opt.published_path.string();
  std::string motors;
  std::string out_dir;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->capture_default_str();
    sub->add_option("--current", opt.current, "Phase current in A (default: rated current from the config)");
    sub->add_option("--workers", opt.workers, "Worker threads for angle/current grids")->capture_default_str();
    sub->add_option("--out", out_dir, std::string("Output directory (default: $") + kOutDirEnv + " or ./csrm_out)");
    sub->add_flag("--trace", opt.trace, "Write Newton iteration traces");
  };

  auto* catalog = app.add_subcommand("catalog", "List the catalog motors");
  catalog->add_option("--config", config_path, "Run configuration (JSON)")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Torque-angle curves with coil/PM decomposition, one CSV per motor");
  common(sweep);
  sweep->add_option("--motors", motors, "Comma-separated motor labels (default: all)");
  sweep->add_option("--angles", opt.angles, "Angle grid points over one rotor pitch")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Average-torque metrics next to the published comparison table");
  common(compare);
  compare->add_option("--motors", motors, "Comma-separated motor labels (default: all)");
  compare->add_option("--published", published_path, "Published comparison rows (JSON)")->capture_default_str();

  auto* diagnose = app.add_subcommand("diagnose", "PM flux split over a current grid and radial-force balance");
  common(diagnose);
  std::string label;
  diagnose->add_option("label", label, "Motor label")->required();
  diagnose->add_option("--points", opt.current_points, "Current grid points from 0 to --current")->capture_default_str();
  diagnose->add_option("--angle", opt.diagnose_angle_deg, "Rotor angle in degrees (phase A aligned at 0)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  opt.config_path = config_path;
  opt.published_path = published_path;
  opt.motors = split_labels(motors);
  if (!out_dir.empty()) opt.out_dir = out_dir;

  if (catalog->parsed()) return cmd_catalog(opt, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(opt, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(opt, std::cout, std::cerr);
  opt.motors = {label};
  return cmd_diagnose(opt, std::cout, std::cerr);
}
