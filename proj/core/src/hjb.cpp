#include "firmmfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "firmmfg/errors.hpp"

namespace firmmfg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Most of the solve cost is f(k,w) (a root-find per call for CES); the ODE
// guard and right-hand side hit the same k back to back, so memoize the last k.
struct NetCache {
    const Economy* eco;
    std::span<const double> w;
    double k = kNaN;
    double f = 0.0;
    double at(double kk) {
        if (kk != k) {
            k = kk;
            f = eco->net(kk, w);
        }
        return f;
    }
};

// Solves H(q) = conj_U(q) + f_k q = t on the requested branch of the strictly
// convex H. f_k and the utility fully determine H for fixed k.
double invert_slice(const Utility& ut, double f_k, Branch br, double t) {
    auto g = [&](double q) { return ut.conjugate(q) + f_k * q - t; };
    auto dg = [&](double q) { return f_k - ut.marginal_inverse(q); };
    const double f_tol = 1e-12 * (1.0 + std::abs(t));

    double lo, hi;
    if (br == Branch::Increasing || br == Branch::Decreasing) {
        if (!(f_k > 0.0)) {
            throw DomainError("invert_hamiltonian: monotone branches need f(k,w) > 0");
        }
        const double q_min = ut.marginal(f_k);
        const double h_min = ut.value(f_k);
        if (!(t > h_min)) {
            throw DomainError("invert_hamiltonian: target below branch minimum");
        }
        if (br == Branch::Increasing) {
            lo = q_min;
            hi = 2.0 * q_min;
            if (!num::expand_bracket(g, lo, hi, /*grow_up=*/true, 400)) {
                throw ConvergenceError("invert_hamiltonian: increasing-branch bracket failed");
            }
        } else {
            lo = 0.5 * q_min;
            hi = q_min;
            if (!num::expand_bracket(g, lo, hi, /*grow_up=*/false, 400)) {
                // H on (0, q_min] tops out at lim_{q->0} H
                throw DomainError("invert_hamiltonian: target at/above the q->0 limit");
            }
        }
    } else {
        if (!(t > ut.inf_value())) {
            throw DomainError("invert_hamiltonian: target below the q->inf limit");
        }
        lo = 0.5;
        hi = 1.0;
        const bool up = g(hi) > 0.0;  // H decreasing: need larger q
        if (!num::expand_bracket(g, lo, hi, up, 400)) {
            throw ConvergenceError("invert_hamiltonian: right-inverse bracket failed");
        }
    }
    num::RootOptions opt;
    opt.f_tol = f_tol;
    return num::newton_bisect(g, dg, lo, hi, opt);
}

// m geometric cells on [a,b], smallest width h0 at the `cluster_left` end.
std::vector<double> ladder(double a, double b, int m, double h0, bool cluster_left) {
    const double len = b - a;
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(m) + 1);
    if (m < 1) m = 1;
    if (m == 1 || h0 * m >= len * (1.0 - 1e-12)) {
        for (int i = 0; i <= m; ++i) nodes.push_back(a + len * i / m);
        nodes.back() = b;
        return nodes;
    }
    auto excess = [&](double r) { return h0 * (std::pow(r, m) - 1.0) / (r - 1.0) - len; };
    double r_hi = 2.0;
    while (excess(r_hi) < 0.0 && r_hi < 1e6) r_hi *= 2.0;
    const double r = num::bisect(excess, 1.0 + 1e-12, r_hi, 1e-13 * r_hi, 200);

    std::vector<double> widths(static_cast<std::size_t>(m));
    double h = h0;
    for (auto& wd : widths) {
        wd = h;
        h *= r;
    }
    if (!cluster_left) std::reverse(widths.begin(), widths.end());
    nodes.push_back(a);
    double x = a;
    for (double wd : widths) {
        x += wd;
        nodes.push_back(x);
    }
    const double scale = len / (nodes.back() - a);
    for (auto& nd : nodes) nd = a + (nd - a) * scale;
    nodes.back() = b;
    return nodes;
}

struct Segment {
    double a, b;
    int cluster;  // -1: cluster at a, +1: cluster at b, 0: uniform
};

}  // namespace

std::vector<double> build_grid(double lo, double hi, int n, double clustering,
                               double cluster_at, std::optional<double> extra) {
    if (!(lo < hi)) throw DomainError("build_grid: empty span");
    clustering = std::clamp(clustering, 0.0, 0.999);
    const double span = hi - lo;
    const double h_floor = 1e-3 * span;

    std::vector<Segment> segs;
    if (cluster_at <= lo + 1e-12 * span) {
        segs.push_back({lo, hi, -1});
    } else if (cluster_at >= hi - 1e-12 * span) {
        segs.push_back({lo, hi, +1});
    } else {
        segs.push_back({lo, cluster_at, +1});
        segs.push_back({cluster_at, hi, -1});
    }
    if (extra && *extra > lo + 1e-12 * span && *extra < hi - 1e-12 * span) {
        // split the segment containing it
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (*extra > segs[i].a && *extra < segs[i].b) {
                Segment right{*extra, segs[i].b, segs[i].cluster == +1 ? +1 : 0};
                segs[i] = {segs[i].a, *extra, segs[i].cluster == -1 ? -1 : segs[i].cluster};
                segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(i) + 1, right);
                break;
            }
        }
    }

    const int cells_total = std::max(n - 1, 32);
    std::vector<double> out;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto& sg = segs[i];
        const double len = sg.b - sg.a;
        int m = std::max(8, static_cast<int>(std::lround(cells_total * len / span)));
        const double h_avg = len / m;
        double h0 = std::max((1.0 - clustering) * h_avg, std::min(h_floor, h_avg));
        std::vector<double> nodes;
        switch (sg.cluster) {
            case -1: nodes = ladder(sg.a, sg.b, m, h0, /*cluster_left=*/true); break;
            case +1: nodes = ladder(sg.a, sg.b, m, h0, /*cluster_left=*/false); break;
            default: nodes = ladder(sg.a, sg.b, m, h_avg, true); break;
        }
        if (!out.empty()) nodes.erase(nodes.begin());  // shared breakpoint
        out.insert(out.end(), nodes.begin(), nodes.end());
    }
    // drop near-duplicates from segment joins
    std::vector<double> dedup;
    dedup.reserve(out.size());
    for (double x : out) {
        if (dedup.empty() || x - dedup.back() > 1e-12 * span) dedup.push_back(x);
        else dedup.back() = x;
    }
    return dedup;
}

// ---------------------------------------------------------------------------
// Public Hamiltonian operations
// ---------------------------------------------------------------------------

double hamiltonian(const Economy& eco, double k, double q, std::span<const double> w) {
    if (!(q > 0.0)) throw DomainError("hamiltonian: costate must be positive (H=+inf for q<=0)");
    return eco.utility.conjugate(q) + eco.net(k, w) * q;
}

double hamiltonian_dq(const Economy& eco, double k, double q, std::span<const double> w) {
    if (!(q > 0.0)) throw DomainError("hamiltonian_dq: costate must be positive");
    return eco.net(k, w) - eco.utility.marginal_inverse(q);
}

double invert_hamiltonian(const Economy& eco, Branch branch, double k, double target,
                          std::span<const double> w) {
    check_prices(w, eco.inputs());
    const double f_k = eco.net(k, w);
    if (branch == Branch::RightInverse) {
        if (!(eco.params.delta > 0.0)) {
            throw DomainError("invert_hamiltonian: right inverse requires delta > 0");
        }
        const double kb = eco.break_even(w);
        if (k < kb * (1.0 - 1e-9)) {
            throw DomainError("invert_hamiltonian: right inverse requires k >= break-even k0");
        }
    }
    return invert_slice(eco.utility, f_k, branch, target);
}

// ---------------------------------------------------------------------------
// Grid resolution
// ---------------------------------------------------------------------------

GridSpec resolve_grid(const Economy& eco, std::span<const double> w, GridSpec grid) {
    const double ks = eco.kappa_star(w);
    if (grid.k_hi <= 0.0) {
        grid.k_hi = std::max(1.7 * ks, 1.25 * eco.entry.a2);
        if (eco.params.delta > 0.0) {
            grid.k_hi = std::max(grid.k_hi, 1.05 * eco.break_even(w));
        }
    }
    if (grid.k_lo <= 0.0) {
        grid.k_lo = std::min(0.5 * eco.entry.a1, 0.5 * ks);
    }
    // u' blows up at k=0 when f(0,w)=0; nothing downstream needs that corner
    if (eco.production.gross(0.0, w) == 0.0) {
        grid.k_lo = std::max(grid.k_lo, 1e-3 * ks);
    }
    if (grid.density_points <= 0) grid.density_points = grid.n_points;
    return grid;
}

// ---------------------------------------------------------------------------
// ValueSolution
// ---------------------------------------------------------------------------

void ValueSolution::finalize() {
    u_interp_ = num::Pchip(k, u);
    du_interp_ = num::Pchip(k, du);
}

void ValueSolution::check_span(double kk) const {
    const double slack = 1e-12 * (k.back() - k.front());
    if (kk < k.front() - slack || kk > k.back() + slack) {
        throw DomainError("capital outside the solved grid span");
    }
}

double ValueSolution::value_at(double kk) const {
    check_span(kk);
    return u_interp_(std::clamp(kk, k.front(), k.back()));
}

double ValueSolution::deriv_at(double kk) const {
    check_span(kk);
    if (kk > corner_zone_lo && kk < corner_zone_hi) {
        const double s = kk - kappa_star;
        const double c3 = s < 0.0 ? corner_c3_left : corner_c3_right;
        return corner_q + corner_u2 * s + c3 * s * s;
    }
    return du_interp_(std::clamp(kk, k.front(), k.back()));
}

double ValueSolution::drift_at(double kk) const {
    if (kk == kappa_star) return 0.0;
    return economy.net(kk, w) - economy.utility.marginal_inverse(deriv_at(kk));
}

double ValueSolution::consumption_at(double kk) const {
    return economy.utility.marginal_inverse(deriv_at(kk));
}

// ---------------------------------------------------------------------------
// solve_value
// ---------------------------------------------------------------------------

ValueSolution solve_value_single(const Economy& eco, std::span<const double> w,
                                 const GridSpec& grid_in, double eps_reg) {
    check_prices(w, eco.inputs());
    const GridSpec gs = resolve_grid(eco, w, grid_in);
    const Utility& ut = eco.utility;
    const double rho = eco.params.rho;

    const double ks = eco.kappa_star(w);
    if (!(gs.k_lo > 0.0 && gs.k_lo < ks && ks < gs.k_hi)) {
        throw DomainError("solve_value: grid must satisfy 0 < k_lo < kappa* < k_hi");
    }
    std::optional<double> k0;
    if (eco.params.delta > 0.0) k0 = eco.break_even(w);
    std::optional<double> k0_node;
    if (k0 && *k0 < gs.k_hi * (1.0 - 1e-12)) k0_node = *k0;

    ValueSolution sol;
    sol.k = build_grid(gs.k_lo, gs.k_hi, gs.n_points, gs.clustering, ks, k0_node);
    sol.kappa_star = ks;
    sol.k0 = k0;
    sol.w.assign(w.begin(), w.end());
    sol.economy = eco;

    const std::size_t n = sol.k.size();
    sol.u.assign(n, 0.0);
    sol.du.assign(n, 0.0);

    const auto it = std::lower_bound(sol.k.begin(), sol.k.end(), ks - 1e-14 * ks);
    const std::size_t i_star = static_cast<std::size_t>(it - sol.k.begin());
    sol.k[i_star] = ks;

    const double f_ks = eco.net(ks, w);
    const double u_star = ut.value(f_ks) / rho;
    const double q_star = ut.marginal(f_ks);
    const double v0 = u_star + eps_reg * (1.0 + std::abs(u_star));

    NetCache cache{&eco, w};

    auto rhs_up = [&](double kk, double v) {
        return invert_slice(ut, cache.at(kk), Branch::Increasing, rho * v);
    };
    auto rhs_down = [&](double kk, double v) {
        const double f = cache.at(kk);
        return invert_slice(ut, f, f > 0.0 ? Branch::Decreasing : Branch::RightInverse,
                            rho * v);
    };
    auto admissible = [&](double kk, double v) {
        const double f = cache.at(kk);
        if (f > 0.0) return rho * v > ut.value(f);
        return rho * v > ut.inf_value();
    };

    num::OdeOptions ode;
    ode.rel_tol = 1e-10;
    ode.abs_tol = 1e-13;
    ode.max_steps = 200000;

    try {
        // downward piece (and right-inverse continuation past k0)
        sol.u[i_star] = v0;
        for (std::size_t j = i_star; j + 1 < n; ++j) {
            sol.u[j + 1] = num::integrate_ode(rhs_down, sol.k[j], sol.u[j], sol.k[j + 1],
                                              admissible, ode);
        }
        // upward piece, integrated backward from kappa*
        for (std::size_t j = i_star; j > 0; --j) {
            sol.u[j - 1] = num::integrate_ode(rhs_up, sol.k[j], sol.u[j], sol.k[j - 1],
                                              admissible, ode);
        }
    } catch (const ConvergenceError& e) {
        // the branch-split solution exists on the whole grid, so leaving the
        // admissible region mid-sweep means an integrator-step defect
        throw InternalError(std::string("solve_value: trajectory left the admissible region: ") +
                            e.what());
    }

    for (std::size_t j = 0; j < n; ++j) {
        if (j == i_star) continue;
        sol.du[j] = (j < i_star) ? rhs_up(sol.k[j], sol.u[j]) : rhs_down(sol.k[j], sol.u[j]);
    }
    // the corner node carries the exact limit values
    sol.u[i_star] = u_star;
    sol.du[i_star] = q_star;

    // corner expansion coefficients (f'' by central difference of the
    // analytic f'; both one-sided limits of u'' coincide when f is C^2)
    const double hf = 1e-5 * std::max(ks, 1.0);
    const double fpp = (eco.net_dk(ks + hf, w) - eco.net_dk(ks - hf, w)) / (2.0 * hf);
    const double upp_f = ut.curvature(f_ks);
    const double disc = rho * rho + 4.0 * q_star * fpp / upp_f;
    if (!(disc > 0.0) || !(fpp < 0.0)) {
        throw ConvergenceError("solve_value: f not locally uniformly concave at kappa*");
    }
    sol.corner_q = q_star;
    sol.corner_theta = 0.5 * (-rho + std::sqrt(disc));
    sol.corner_u2 = q_star * fpp / sol.corner_theta;
    sol.corner_zone_lo = i_star > 0 ? sol.k[i_star - 1] : ks;
    sol.corner_zone_hi = i_star + 1 < n ? sol.k[i_star + 1] : ks;
    // quadratic terms fitted to the zone-boundary nodes, so the expansion
    // matches the integrated solution exactly there
    if (i_star > 0) {
        const double s = sol.corner_zone_lo - ks;
        sol.corner_c3_left = (sol.du[i_star - 1] - q_star - sol.corner_u2 * s) / (s * s);
    }
    if (i_star + 1 < n) {
        const double s = sol.corner_zone_hi - ks;
        sol.corner_c3_right = (sol.du[i_star + 1] - q_star - sol.corner_u2 * s) / (s * s);
    }

    sol.finalize();
    return sol;
}

ValueSolution solve_value(const Economy& eco, std::span<const double> w,
                          const GridSpec& grid_in) {
    GridSpec gs = resolve_grid(eco, w, grid_in);
    if (gs.reg_ladder.empty()) gs.reg_ladder = {1e-8};
    std::sort(gs.reg_ladder.begin(), gs.reg_ladder.end(), std::greater<double>());

    ValueSolution prev;
    double prev_diff = std::numeric_limits<double>::infinity();
    bool have_prev = false;
    int level = 0;
    for (double eps : gs.reg_ladder) {
        ValueSolution cur = solve_value_single(eco, w, gs, eps);
        if (have_prev) {
            double diff = 0.0, umax = 0.0;
            for (std::size_t j = 0; j < cur.u.size(); ++j) {
                diff = std::max(diff, std::abs(cur.u[j] - prev.u[j]));
                umax = std::max(umax, std::abs(cur.u[j]));
            }
            const double scale = 1.0 + umax;
            if (gs.check_regularization && level > 1 && diff > 1e-9 * scale &&
                diff > 0.5 * prev_diff) {
                throw ConvergenceError(
                    "solve_value: corner regularization ladder is not converging");
            }
            prev_diff = diff;
        }
        prev = std::move(cur);
        have_prev = true;
        ++level;
    }
    return prev;
}

}  // namespace firmmfg
