#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sciagent/config.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

struct WorkbenchReport {
  std::vector<NamedHistory> histories;
  Comparison comparison;
  std::vector<std::filesystem::path> files;  // CSVs, table, chart
  std::string agent_error;  // set when the agent campaign stopped early
};

/// Best value of the camel on a 2001 x 2001 grid is -1.0316; the comparison
/// threshold sits 0.01 above it.
inline constexpr double kCamelMinimum = -1.0316;

/// Seeded BO replicates on the six-hump camel; one CSV per replicate.
WorkbenchReport run_camel_experiment(const WorkbenchSettings& settings, const std::filesystem::path& out_dir);

/// Agent campaign (through `session`) against the configured BO baselines
/// on synthetic_yield. The agent's transcript lives in `{out_dir}/agent`.
WorkbenchReport run_design_race(const WorkbenchSettings& settings, Session& session,
                                const std::filesystem::path& out_dir);

}  // namespace sciagent
