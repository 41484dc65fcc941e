#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "firmmfg/hjb.hpp"

namespace firmmfg {

struct StepControl {
    double rel_tol = 1e-10;
    double max_dt = 0.0;  // 0: horizon / 200
};

// Single-firm capital path under the optimal policy. The running payoff
// column accumulates int_0^t U(chi(k(s))) e^{-rho s} ds step by step.
struct Trajectory {
    std::vector<double> t, k, chi, payoff;
};

// Integrates dk/dt = b(k(t)) from k0; the trajectory approaches kappa*
// monotonically and never crosses it.
Trajectory simulate_firm(const ValueSolution& value, double k0, double horizon,
                         const StepControl& ctrl = {});

// Final running payoff plus the stationary-continuation tail
// U(chi(k(T))) e^{-rho T} / rho.
double discounted_payoff(const Economy& eco, const Trajectory& traj);

// Exact payoff of the constant-consumption policy chi = cbar: U(cbar)/rho when
// net output at k0 covers cbar, otherwise the capital runs down to k_floor in
// finite time and the policy switches to the stay-put consumption f(k_floor).
double constant_policy_payoff(const Economy& eco, std::span<const double> w, double k0,
                              double cbar, double k_floor);

struct Histogram {
    std::vector<double> bin_lo, bin_hi, density;  // normalized to unit mass
    double total_mass = 0.0;                      // alive-mass estimate
    double total_mass_stderr = 0.0;               // Monte-Carlo standard error
    std::uint64_t seed = 0;
    int n_firms = 0;
    double horizon = 0.0;
};

// Birth-death Monte Carlo: births thinned against the majorant c_hat eta_hat,
// exponential lifetimes at rate nu, deterministic drift in between. Fixed
// (seed, n_firms) gives a bit-identical histogram for any worker count.
Histogram population_histogram(const Economy& eco, const ValueSolution& value,
                               int n_firms, double horizon, std::uint64_t seed,
                               int n_bins = 100, int workers = 1);

}  // namespace firmmfg
