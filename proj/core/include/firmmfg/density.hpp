#pragma once

#include <functional>
#include <vector>

#include "firmmfg/hjb.hpp"

namespace firmmfg {

struct SlopePair {
    double left;
    double right;
};

// One-sided drift slopes theta = |b'(kappa*+-)|, Richardson-extrapolated from
// one-sided differences of the drift.
SlopePair drift_slopes(const ValueSolution& value);

// Local power-law exponents p = nu/theta - 1 of the density at kappa*.
SlopePair singular_exponent(const ValueSolution& value, double nu);

// Stationary capital density on a grid that excludes a clip window of
// half-width h_sing around kappa*; the window carries an analytic power-law
// mass estimate instead of grid values. A pure transformation of an
// immutable ValueSolution, itself immutable once built.
class DensitySolution {
public:
    std::vector<double> k, m;  // clipped grid (cell endpoints) and density there
    double kappa_star = 0.0;
    double h_sing = 0.0;
    double support_lo = 0.0, support_hi = 0.0;
    double theta_left = 0.0, theta_right = 0.0;
    double exponent_left = 0.0, exponent_right = 0.0;  // p = nu/theta - 1
    double window_mass = 0.0;
    double total_mass = 0.0;

    // integral of integrand(k) m(k) dk: composite Gauss on the clipped cells
    // plus integrand(kappa*) * window_mass for the clip window
    double integrate_against(const std::function<double(double)>& integrand) const;

    // quadrature view: Gauss nodes, weights and m values on the clipped cells
    std::vector<double> qx, qw, qm;
};

DensitySolution solve_density(const Economy& eco, const ValueSolution& value,
                              const GridSpec& grid);

// integral of eta(k, u(k)) dk on the same cells (and window) the density
// quadrature uses, so mass-balance comparisons see one discretization
double entry_mass(const ValueSolution& value, const DensitySolution& density);

}  // namespace firmmfg
