#pragma once

#include <string>
#include <vector>

#include "firmmfg/scenario.hpp"

namespace firmmfg {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runtime invariant suite over a scenario: model primitives, the value
// solution at the scenario prices, and the stationary density on top of it.
// Needs price.w set in the scenario.
std::vector<CheckResult> run_checks(const Scenario& scenario);

}  // namespace firmmfg
