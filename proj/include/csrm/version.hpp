#pragma once

namespace csrm {

inline constexpr const char* kVersion = "1.0.0";
// Bumped whenever the layout of CSV/JSON outputs changes.
inline constexpr int kReportFormatVersion = 1;

}  // namespace csrm
