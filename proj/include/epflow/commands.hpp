#pragma once

#include <iosfwd>
#include <string>

#include "epflow/config.hpp"

namespace epflow {

/// Process exit codes of the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,         // bad config, failed invariant, slope out of range
  kExitBreakdown = 2,       // sonic or vacuum breakdown
  kExitNonContraction = 3,
  kExitAdmissibility = 4,   // refusal (M sigma > delta3), ball exit, fold-over
  kExitNotConverged = 5,    // iteration limit or non-positive subsonic margin
};

/// Maps the exception in flight to an exit code. Call from a catch block.
int exit_code_for_current_exception();

/// Each command writes its files into config.output.dir (created if missing),
/// a JSON report named <command>-<hash>.json among them, prints a short
/// account to `log` and returns the exit code.
int cmd_background(const RunConfig& config, std::ostream& log);
int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& log);
int cmd_perturb_domain(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);

/// Path of the report a command writes for `config`.
std::string report_path(const RunConfig& config, const std::string& command);

}  // namespace epflow
