#pragma once

// load -> search -> energy -> outputs, as run by the command-line tool.

#include <filesystem>
#include <vector>

#include "bfps/report.hpp"
#include "bfps/run_config.hpp"

namespace bfps {

// Searches and costs without touching the file system beyond inputs.
RunReport execute(const RunConfig& config);
SweepReport execute_sweep(const RunConfig& config);

struct RunOutputs {
  std::vector<std::filesystem::path> files;
};

// Writes plan.json, report.json, summary.txt and (optionally)
// candidates.csv into config.output_dir. On any error the files this call
// created are removed before the error propagates.
RunOutputs run(const RunConfig& config, RunReport* report = nullptr);

// One search per alpha over a single evaluation of the candidate space.
// Writes sweep.json, sweep.txt and (optionally) sweep.csv.
RunOutputs sweep_alpha(const RunConfig& config, SweepReport* report = nullptr);

}  // namespace bfps
