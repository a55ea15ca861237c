#pragma once

#include <filesystem>
#include <string>

#include "csrm/config.hpp"

#ifndef CSRM_SOURCE_DIR
#define CSRM_SOURCE_DIR "."
#endif

namespace csrm::test {

inline std::filesystem::path source_dir() { return CSRM_SOURCE_DIR; }
inline std::filesystem::path reference_config_path() { return source_dir() / "config" / "reference.json"; }
inline std::filesystem::path published_table_path() { return source_dir() / "data" / "table1_published.json"; }

inline const Config& reference() {
  static const Config c = load_config(reference_config_path());
  return c;
}

inline MotorSpec spec(const std::string& label) {
  const auto all = reference().motors();
  const MotorSpec* s = find_motor(all, label);
  if (!s) throw std::runtime_error("no motor " + label);
  return *s;
}

inline MotorModel model(const std::string& label) { return reference().model(label); }

inline const char* const kCatalogLabels[] = {"1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b"};
inline const char* const kPmLabels[] = {"2a", "2b", "3a", "3b", "4a", "4b"};

}  // namespace csrm::test
