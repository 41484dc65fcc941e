#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "firmmfg/economy.hpp"
#include "firmmfg/equilibrium.hpp"

namespace firmmfg {

// A scenario file is diffable key-path = value text ('#' comments allowed);
// --override flags rewrite single keys after the file is read.
struct Scenario {
    Economy economy;
    std::vector<double> w;  // fixed prices for value/density/simulate runs
    GridSpec grid;
    EquilibriumConfig equilibrium;

    struct SimulateConfig {
        std::vector<double> k0;       // empty: {0.5, 1.0, 1.5} * kappa*(w)
        double horizon = 0.0;         // 0: 20 / rho
        int n_firms = 100000;
        std::uint64_t seed = 12345;
        int n_bins = 100;
    } simulate;

    struct OutputConfig {
        std::string directory = ".";
        std::string format = "csv";  // csv | json
    } output;
};

// Parses and fully validates; throws ValidationError on unknown keys (listing
// the offending path) or any invariant violation, before any solver runs.
Scenario parse_scenario(const std::string& text,
                        const std::vector<std::string>& overrides = {});
Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides = {});

}  // namespace firmmfg
