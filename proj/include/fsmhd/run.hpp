#pragma once

#include "fsmhd/config.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

namespace fsmhd {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_abort = 3, exit_check = 4 };

struct CommandResult {
    int exit_code = exit_ok;
    nlohmann::json summary;  // also written to the output directory
};

// Initial state of a single run for the configured data family.
MhdState simulation_initial(const RunConfig& cfg, const GridPtr& g);

// Each command writes its artifacts below cfg.output.directory. Solver aborts
// are reported in the summary with exit_abort; config errors propagate as Error.
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);
CommandResult cmd_layer(const RunConfig& cfg);
CommandResult cmd_check_algebra(const RunConfig& cfg);

// Loads the config, applies the environment overrides, runs the verb and maps
// errors to exit codes; diagnostics go to err.
int run_verb(const std::string& verb, const std::string& config_path, std::ostream& err);

}  // namespace fsmhd
