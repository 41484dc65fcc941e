#include "firmmfg/report.hpp"

#include <cstdio>
#include <fstream>

#include "firmmfg/errors.hpp"

namespace firmmfg {

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open output file '" + path + "'");
    return out;
}

}  // namespace

void write_value_csv(const std::string& path, const ValueSolution& value) {
    auto out = open_out(path);
    out << "k,u,du,b,chi\n";
    for (std::size_t i = 0; i < value.k.size(); ++i) {
        const double k = value.k[i];
        out << format_g17(k) << ',' << format_g17(value.u[i]) << ','
            << format_g17(value.du[i]) << ',' << format_g17(value.drift_at(k)) << ','
            << format_g17(value.consumption_at(k)) << '\n';
    }
}

void write_density_csv(const std::string& path, const DensitySolution& density) {
    auto out = open_out(path);
    out << "k,m\n";
    for (std::size_t i = 0; i < density.k.size(); ++i) {
        out << format_g17(density.k[i]) << ',' << format_g17(density.m[i]) << '\n';
    }
}

void write_density_summary(const std::string& path, const DensitySolution& density) {
    auto out = open_out(path);
    out << "total_mass = " << format_g17(density.total_mass) << '\n'
        << "window_mass = " << format_g17(density.window_mass) << '\n'
        << "exponent_left = " << format_g17(density.exponent_left) << '\n'
        << "exponent_right = " << format_g17(density.exponent_right) << '\n'
        << "support_lo = " << format_g17(density.support_lo) << '\n'
        << "support_hi = " << format_g17(density.support_hi) << '\n'
        << "kappa_star = " << format_g17(density.kappa_star) << '\n'
        << "h_sing = " << format_g17(density.h_sing) << '\n';
}

void write_trace_csv(const std::string& path, const std::vector<HomotopyRecord>& trace,
                     int d) {
    auto out = open_out(path);
    out << "lambda,iter,gap";
    for (int i = 1; i <= d; ++i) out << ",w_" << i;
    out << '\n';
    for (const auto& rec : trace) {
        out << format_g17(rec.lambda) << ',' << rec.iters << ',' << format_g17(rec.gap);
        for (double wi : rec.w) out << ',' << format_g17(wi);
        out << '\n';
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = open_out(path);
    out << "t,k,chi,payoff\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        out << format_g17(traj.t[i]) << ',' << format_g17(traj.k[i]) << ','
            << format_g17(traj.chi[i]) << ',' << format_g17(traj.payoff[i]) << '\n';
    }
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
    auto out = open_out(path);
    out << "# seed = " << hist.seed << '\n'
        << "# n_firms = " << hist.n_firms << '\n'
        << "# horizon = " << format_g17(hist.horizon) << '\n'
        << "# rng = " << num::kRngName << '\n'
        << "bin_lo,bin_hi,density\n";
    for (std::size_t i = 0; i < hist.density.size(); ++i) {
        out << format_g17(hist.bin_lo[i]) << ',' << format_g17(hist.bin_hi[i]) << ','
            << format_g17(hist.density[i]) << '\n';
    }
}

}  // namespace firmmfg
