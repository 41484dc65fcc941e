#pragma once

#include <span>
#include <string>
#include <vector>

#include "firmmfg/density.hpp"
#include "firmmfg/errors.hpp"

namespace firmmfg {

struct EquilibriumConfig {
    double eps_box = 1e-3;        // price box (eps, 1/eps)^d
    double tol_clearing = 1e-6;   // relative clearing residual at w*
    double stage_gap_tol = 1e-4;  // fixed-point gap at intermediate lambdas
    double final_gap_tol = 1e-9;  // fixed-point gap at lambda = 1
    double damping = 0.5;
    std::vector<double> schedule = {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
    int max_stage_iters = 100;
    int max_schedule_refinements = 8;
    GridSpec grid;
    std::vector<double> w_init;   // empty: start from the unit price vector
};

struct HomotopyRecord {
    double lambda = 0.0;
    int iters = 0;
    double gap = 0.0;
    std::vector<double> w;
};

struct EquilibriumResult {
    std::vector<double> w_star;
    std::vector<double> residuals;    // S(w*) - demand(w*), componentwise
    double clearing_residual = 0.0;   // scalar summary, relative to supply scale
    ValueSolution value;
    DensitySolution density;
    std::vector<HomotopyRecord> trace;
    long total_inner_iterations = 0;
};

// Convergence failure carrying the homotopy trace accumulated so far.
class EquilibriumFailure : public ConvergenceError {
public:
    EquilibriumFailure(const std::string& what, std::vector<HomotopyRecord> tr,
                       bool box)
        : ConvergenceError(what), trace(std::move(tr)), box_violation(box) {}
    std::vector<HomotopyRecord> trace;
    bool box_violation = false;
};

// Componentwise integral of the input demand against the density (plus the
// clip-window correction); all entries >= 0.
std::vector<double> aggregate_demand(const Economy& eco, const ValueSolution& value,
                                     const DensitySolution& density,
                                     std::span<const double> w);

// S(w) - aggregate_demand(w), componentwise.
std::vector<double> clearing_residual(const Economy& eco, std::span<const double> w,
                                      const ValueSolution& value,
                                      const DensitySolution& density);

// max_i |S_i - demand_i| / max_j S_j
double clearing_residual_scalar(const Economy& eco, std::span<const double> w,
                                const ValueSolution& value,
                                const DensitySolution& density);

// T_lambda(w_current): the unique box minimizer of
//   Phi(v) + int g(k, v) [(1-lambda) d eta_hat + lambda dm(k, w_current)].
// `density` is the density solved at w_current (ignored when lambda = 0).
// Throws BoxViolationError when the minimizer lands on the box boundary.
std::vector<double> t_map(const Economy& eco, double lambda,
                          std::span<const double> w_current,
                          const DensitySolution* density,
                          const EquilibriumConfig& cfg);

// Homotopy continuation lambda: 0 -> 1 with damped fixed-point iteration at
// each stage, warm-started across stages.
EquilibriumResult solve_equilibrium(const Economy& eco, const EquilibriumConfig& cfg);

}  // namespace firmmfg
