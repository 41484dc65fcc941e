#pragma once

#include <string>
#include <vector>

namespace firmmfg {

// Scenario-driven front end. Subcommands: value, density, equilibrium,
// simulate, check. Exit codes: 0 success, 2 validation error, 3 convergence
// error (trace files are still written on equilibrium failures).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace firmmfg
