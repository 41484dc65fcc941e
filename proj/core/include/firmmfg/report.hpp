#pragma once

#include <string>
#include <vector>

#include "firmmfg/density.hpp"
#include "firmmfg/equilibrium.hpp"
#include "firmmfg/simulate.hpp"

namespace firmmfg {

// all floating-point file output carries 17 significant digits so reruns
// round-trip bit-exactly
std::string format_g17(double x);

void write_value_csv(const std::string& path, const ValueSolution& value);
void write_density_csv(const std::string& path, const DensitySolution& density);
void write_density_summary(const std::string& path, const DensitySolution& density);
void write_trace_csv(const std::string& path, const std::vector<HomotopyRecord>& trace,
                     int d);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_histogram_csv(const std::string& path, const Histogram& hist);

}  // namespace firmmfg
