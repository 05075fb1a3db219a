#pragma once

#include <ostream>
#include <string>

#include "fedquant/config.hpp"

namespace fedquant {

// Subcommand bodies, kept CLI-framework-free so tests can drive them
// directly. Each returns a process exit status (0 = success) and reports
// problems by throwing (config_error -> exit 2 at the CLI boundary,
// anything else -> 1).

// Runs the experiment and writes metrics.csv, summary.json and
// manifest.json into out_dir (created if missing). Only the manifest
// carries timestamps; the other two are byte-stable for a fixed config.
int cmd_run(const ExperimentSpec& spec, const std::string& out_dir, std::ostream& log);

// Prints the communication-cost table for the spec's model and cost grid.
// Pure evaluation, no training and no data access.
int cmd_cost(const ExperimentSpec& spec, std::ostream& out);

// Runs the sweep axis and writes sweep.csv (one aggregated row per axis
// value, mean and population std over the seed list) plus manifest.json.
int cmd_sweep(const ExperimentSpec& spec, const std::string& out_dir, std::ostream& log);

// Formatting helpers shared with tests: %.17g floats (round-trip exact)
// and digit-grouped integers for the cost table.
std::string format_double(double v);
std::string group_digits(std::int64_t v);

} // namespace fedquant
