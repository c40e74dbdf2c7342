/**
 * @file commands.hpp
 * @brief The subcommands behind the `heislab` executable.
 *
 * Each command validates the whole configuration, computes, and only then
 * writes into the output directory. Return values are process exit codes.
 */
#pragma once

#include "heislab/config.hpp"

#include <iosfwd>
#include <string>

namespace heis {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,     // invalid configuration or expression
    kExitCriterion = 3,  // a numerical check failed
    kExitViolation = 4,  // a proven inequality failed: implementation bug
};

/// Trajectory CSVs per seed, vertical series, and a report of the
/// vertical-velocity residual under dt halving plus the decomposition gap.
int cmd_flow(const RunConfig& cfg, std::ostream& log);

/// hofer_report.txt and hofer.csv for the configured flow on A = a_scale * support.
int cmd_hofer_verify(const RunConfig& cfg, std::ostream& log);

/// Covering CSV, dimension slope and H^2 comparison for one flow curve.
int cmd_measure(const RunConfig& cfg, std::ostream& log);

/// All acceptance criteria; suite.txt and suite_summary.json.
int cmd_suite(const RunConfig& cfg, std::ostream& log);

/// Dispatches by name and maps exceptions onto exit codes, printing the
/// diagnostic to `err`.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace heis
