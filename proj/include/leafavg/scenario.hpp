#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "leafavg/core.hpp"

namespace leafavg {

/// Exit statuses of run_scenario.
inline constexpr int kExitOk = 0;
inline constexpr int kExitScenarioError = 2;
inline constexpr int kExitNumericFailure = 3;

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool svg = false;
  unsigned threads = 1;
  /// Adds wall-clock seconds to the report (which then differs between runs).
  bool timing = false;
};

/// Parses and executes a JSON scenario, writing <id>_<run>.csv,
/// <id>_report.json and, with svg, <id>_<run>.svg into out_dir. Diagnostics
/// go to `diag`. Returns kExitOk, kExitScenarioError or kExitNumericFailure.
int run_scenario(const std::filesystem::path& scenario_file, const RunOptions& options, std::ostream& diag);

/// Text listing of fields, maps, observables and scenario stanzas.
std::string list_catalog();

/// Minimal SVG line plot of a running average (log-scaled parameter axis).
std::string running_average_svg(const RunningAverage& avg, const std::string& title);

}  // namespace leafavg
