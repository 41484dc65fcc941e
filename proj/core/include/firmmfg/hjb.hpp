#pragma once

#include <optional>
#include <span>
#include <vector>

#include "firmmfg/economy.hpp"
#include "firmmfg/numerics.hpp"

namespace firmmfg {

// H(k, q, w) = sup_{c, l} { U(c) + q (F(k,l) - w.l - delta k - c) }
//            = conj_U(q) + f(k, w) q, finite for q > 0 only.
double hamiltonian(const Economy& eco, double k, double q, std::span<const double> w);

// H_q(k, q, w) = f(k, w) - c*(q), the drift candidate.
double hamiltonian_dq(const Economy& eco, double k, double q, std::span<const double> w);

// H(k, .) is strictly convex with minimum U(f(k,w)) at q_min = U'(f(k,w)),
// so it has two monotone restrictions; for k past the break-even capital
// (f <= 0) it is globally decreasing and only the right inverse exists.
enum class Branch { Increasing, Decreasing, RightInverse };

// Returns q on the requested branch with |H(k,q,w) - target| <= 1e-10 (1+|target|).
double invert_hamiltonian(const Economy& eco, Branch branch, double k, double target,
                          std::span<const double> w);

struct GridSpec {
    double k_lo = 0.0;        // 0 = choose from the scenario (see resolve_grid)
    double k_hi = 0.0;        // 0 = choose from the scenario
    int n_points = 400;
    double clustering = 0.9;  // in [0,1): 0 = uniform spacing
    double h_sing_rel = 1e-4; // density clip half-width relative to support width
    int density_points = 0;   // 0 = n_points
    // Corner regularization levels, coarse to fine; the finest is kept.
    std::vector<double> reg_ladder = {1e-4, 1e-6, 1e-8};
    bool check_regularization = true;
};

// Value function of the firm problem at fixed prices, on a capital grid with
// kappa* (and k0 when delta > 0) as exact nodes. Immutable once solved and
// safe to share across threads; solve_value itself is sequential (the ODE
// sweeps are strict recurrences), but distinct price vectors can be solved
// fully in parallel.
class ValueSolution {
public:
    std::vector<double> k, u, du;
    double kappa_star = 0.0;
    std::optional<double> k0;
    std::vector<double> w;
    Economy economy;

    // local expansion of u' at the corner: u'(kappa*+s) = corner_q + corner_u2 s
    // + c3 s^2, with the drift slope theta solving theta^2 + rho theta -
    // q_min f''/U'' = 0 and the per-side quadratic term fitted to the adjacent
    // grid node; used inside the grid cells around kappa*, where interpolation
    // through the non-smooth corner would otherwise limit the drift's relative
    // accuracy
    double corner_q = 0.0;
    double corner_u2 = 0.0;
    double corner_theta = 0.0;
    double corner_c3_left = 0.0;
    double corner_c3_right = 0.0;
    double corner_zone_lo = 0.0;
    double corner_zone_hi = 0.0;

    double k_front() const { return k.front(); }
    double k_back() const { return k.back(); }

    double value_at(double kk) const;        // monotone interpolation of u
    double deriv_at(double kk) const;        // monotone interpolation of du
    double drift_at(double kk) const;        // b(k) = f(k,w) - c*(u'(k)); b(kappa*) = 0
    double consumption_at(double kk) const;  // chi(k) = c*(u'(k))

    void finalize();  // builds interpolants; called by solve_value

private:
    void check_span(double kk) const;
    num::Pchip u_interp_, du_interp_;
};

// Branch-split solve of -rho u + H(k, u', w) = 0:
// a downward piece right of kappa*, an upward piece left of it, both launched
// from a regularized corner value, and (delta > 0) a right-inverse
// continuation past the break-even capital k0.
ValueSolution solve_value(const Economy& eco, std::span<const double> w,
                          const GridSpec& grid);

// Single regularization level (no ladder/convergence check); used by the
// ladder itself and by tests probing the convergence rate.
ValueSolution solve_value_single(const Economy& eco, std::span<const double> w,
                                 const GridSpec& grid, double eps_reg);

// Grid with bounds filled in from the economy when k_lo/k_hi are 0, the small-k
// clamp applied when f(0,w) = 0, and coverage of the entry support ensured.
GridSpec resolve_grid(const Economy& eco, std::span<const double> w, GridSpec grid);

// Capital nodes spanning [lo, hi] with geometric clustering toward `cluster_at`
// (a node itself when inside), plus `extra` inserted exactly.
std::vector<double> build_grid(double lo, double hi, int n, double clustering,
                               double cluster_at, std::optional<double> extra);

}  // namespace firmmfg
