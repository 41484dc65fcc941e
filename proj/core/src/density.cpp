#include "firmmfg/density.hpp"

#include <algorithm>
#include <cmath>

#include "firmmfg/errors.hpp"

namespace firmmfg {

namespace {

// one-sided difference quotients of the drift, Richardson-extrapolated twice;
// b(kappa*) = 0, so D(h) = |b(kappa* +- h)| / h estimates theta to O(h)
double one_sided_slope(const ValueSolution& value, double sign) {
    const double ks = value.kappa_star;
    double room = sign > 0 ? value.k_back() - ks : ks - value.k_front();
    // probe where the drift is best resolved (the corner expansion zone)
    if (sign > 0 && value.corner_zone_hi > ks) room = std::min(room, value.corner_zone_hi - ks);
    if (sign < 0 && value.corner_zone_lo < ks) room = std::min(room, ks - value.corner_zone_lo);
    const double h = 0.8 * room;
    auto d = [&](double hh) { return std::abs(value.drift_at(ks + sign * hh)) / hh; };
    const double d1 = d(h), d2 = d(0.5 * h), d3 = d(0.25 * h);
    const double r1 = 2.0 * d2 - d1;
    const double r2 = 2.0 * d3 - d2;
    return (4.0 * r2 - r1) / 3.0;
}

}  // namespace

SlopePair drift_slopes(const ValueSolution& value) {
    SlopePair s{one_sided_slope(value, -1.0), one_sided_slope(value, +1.0)};
    if (!(s.left > 1e-12) || !(s.right > 1e-12)) {
        throw ConvergenceError("drift_slopes: degenerate drift slope at kappa*");
    }
    return s;
}

SlopePair singular_exponent(const ValueSolution& value, double nu) {
    const SlopePair th = drift_slopes(value);
    return {nu / th.left - 1.0, nu / th.right - 1.0};
}

double DensitySolution::integrate_against(
    const std::function<double(double)>& integrand) const {
    double s = 0.0;
    for (std::size_t i = 0; i < qx.size(); ++i) s += qw[i] * integrand(qx[i]) * qm[i];
    return s + integrand(kappa_star) * window_mass;
}

namespace {

// cell endpoints of one side of the clipped support; the segment touching the
// clip window gets geometric refinement into it (cell width ~ distance), and
// segments overlapping the entry bump get enough cells for its curvature
std::vector<double> side_cells(std::vector<double> breaks, int n_cells, double edge,
                               double h_edge, double eta_lo, double eta_hi) {
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return b - a < 1e-14; }),
                 breaks.end());
    const double total = breaks.back() - breaks.front();
    std::vector<double> cells;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double a = breaks[s], b = breaks[s + 1];
        int m = std::max(12, static_cast<int>(std::lround(n_cells * (b - a) / total)));
        if (b > eta_lo && a < eta_hi) {
            m = std::max(m, static_cast<int>(std::lround(320.0 * (b - a) / (eta_hi - eta_lo))));
        }
        const bool edge_right = std::abs(b - edge) < 1e-14;
        const bool edge_left = std::abs(a - edge) < 1e-14;
        std::vector<double> seg;
        if (edge_right || edge_left) {
            // cell width ~ 1.5% of the distance to the edge keeps one-sided
            // stencils and Gauss panels accurate on the power-law blow-up;
            // capped at the segment's uniform width away from the edge
            const double len = b - a;
            const double h_cap = len / m;
            std::vector<double> widths;
            double h = h_edge, acc = 0.0;
            const double r = std::clamp(std::pow(len / h_edge, 1.0 / m), 1.003, 1.015);
            while (acc + std::min(h, h_cap) < len && static_cast<int>(widths.size()) < 8000) {
                const double hw = std::min(h, h_cap);
                widths.push_back(hw);
                acc += hw;
                h *= r;
            }
            widths.push_back(len - acc);
            double x = edge_right ? b : a;
            const double dir = edge_right ? -1.0 : 1.0;
            for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
                x += dir * widths[i];
                seg.push_back(x);
            }
        } else {
            for (int i = 1; i < m; ++i) seg.push_back(a + (b - a) * i / m);
        }
        cells.push_back(a);
        cells.insert(cells.end(), seg.begin(), seg.end());
    }
    cells.push_back(breaks.back());
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end(),
                            [](double a, double b) { return b - a < 1e-14; }),
                cells.end());
    return cells;
}

struct SideResult {
    std::vector<double> node_x, node_m;
    std::vector<double> qx, qw, qm;
};

// Accumulates the closed-form density along one side of kappa*. All
// exponential weights have nonpositive exponents, so nothing can overflow.
SideResult accumulate_side(const Economy& eco, const ValueSolution& value,
                           const std::vector<double>& cells, bool left) {
    SideResult out;
    if (cells.size() < 2) return out;
    const double nu = eco.params.nu;

    auto drift = [&](double x) { return value.drift_at(x); };
    auto dp = [&](double a, double b) {
        // integral of nu / b over the short interval [a, b]
        std::vector<double> gx, gw;
        num::gauss_legendre(3, a, b, gx, gw);
        double s = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i) s += gw[i] * nu / drift(gx[i]);
        return s;
    };
    auto eta_at = [&](double x) { return eco.entry_rate(x, value.value_at(x)); };

    // accumulation points: cell endpoints plus each cell's (sorted) Gauss nodes
    std::vector<double> pts;
    std::vector<char> node_flag;
    std::vector<double> gauss_wt;
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
        pts.push_back(cells[c]);
        node_flag.push_back(1);
        gauss_wt.push_back(0.0);
        std::vector<double> gx, gw;
        num::gauss_legendre(7, cells[c], cells[c + 1], gx, gw);
        std::vector<std::size_t> order(gx.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return gx[a] < gx[b]; });
        for (std::size_t i : order) {
            pts.push_back(gx[i]);
            node_flag.push_back(0);
            gauss_wt.push_back(gw[i]);
        }
    }
    pts.push_back(cells.back());
    node_flag.push_back(1);
    gauss_wt.push_back(0.0);

    const std::size_t n = pts.size();
    std::vector<double> flux(n, 0.0);  // |b(k)| m(k) at the accumulation points

    if (left) {
        // flux(t) = int_lo^t eta(s,u(s)) exp(-int_s^t nu/b) ds, b > 0 here
        double acc = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double s = pts[i - 1], t = pts[i];
            acc *= std::exp(-dp(s, t));
            std::vector<double> gx, gw;
            num::gauss_legendre(3, s, t, gx, gw);
            for (std::size_t g = 0; g < gx.size(); ++g) {
                acc += gw[g] * eta_at(gx[g]) * std::exp(-dp(gx[g], t));
            }
            flux[i] = acc;
        }
    } else {
        // flux(t) = int_t^hi eta(s,u(s)) exp(int_t^s nu/b) ds, b < 0 here
        double acc = 0.0;
        for (std::size_t ii = n - 1; ii-- > 0;) {
            const double t = pts[ii], s = pts[ii + 1];
            acc *= std::exp(dp(t, s));
            std::vector<double> gx, gw;
            num::gauss_legendre(3, t, s, gx, gw);
            for (std::size_t g = 0; g < gx.size(); ++g) {
                acc += gw[g] * eta_at(gx[g]) * std::exp(dp(t, gx[g]));
            }
            flux[ii] = acc;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        double mm;
        if ((left && i == 0) || (!left && i == n - 1)) {
            mm = 0.0;  // empty inner integral at the outer boundary
        } else {
            mm = flux[i] / std::abs(drift(pts[i]));
        }
        if (node_flag[i]) {
            out.node_x.push_back(pts[i]);
            out.node_m.push_back(mm);
        } else {
            out.qx.push_back(pts[i]);
            out.qw.push_back(gauss_wt[i]);
            out.qm.push_back(mm);
        }
    }
    return out;
}

}  // namespace

DensitySolution solve_density(const Economy& eco, const ValueSolution& value,
                              const GridSpec& grid) {
    if (eco.params.nu != value.economy.params.nu ||
        eco.params.rho != value.economy.params.rho ||
        eco.entry.a1 != value.economy.entry.a1 ||
        eco.entry.a2 != value.economy.entry.a2) {
        throw DomainError("solve_density: economy differs from the one the value was solved at");
    }
    const double ks = value.kappa_star;
    const double a1 = eco.entry.a1, a2 = eco.entry.a2;

    DensitySolution out;
    out.kappa_star = ks;
    out.support_lo = std::min(a1, ks);
    out.support_hi = std::max(a2, ks);

    const double slack = 1e-9 * (out.support_hi - out.support_lo);
    if (value.k_front() > out.support_lo + slack || value.k_back() < out.support_hi - slack) {
        throw DomainError("solve_density: value grid does not cover the density support");
    }

    const double width = out.support_hi - out.support_lo;
    out.h_sing = grid.h_sing_rel * width;

    const SlopePair th = drift_slopes(value);
    out.theta_left = th.left;
    out.theta_right = th.right;
    const double nu = eco.params.nu;
    out.exponent_left = nu / th.left - 1.0;
    out.exponent_right = nu / th.right - 1.0;

    const int n_cells = std::max(grid.density_points > 0 ? grid.density_points : 400, 64);

    // two innermost (m, s) samples per side, s = distance from kappa*
    double edge_m1_l = 0, edge_m2_l = 0, edge_s1_l = 0, edge_s2_l = 0;
    double edge_m1_r = 0, edge_m2_r = 0, edge_s1_r = 0, edge_s2_r = 0;
    if (ks - out.h_sing > out.support_lo + slack) {
        std::vector<double> breaks{out.support_lo, ks - out.h_sing};
        if (a1 > out.support_lo + slack && a1 < ks - out.h_sing - slack) breaks.push_back(a1);
        if (a2 > out.support_lo + slack && a2 < ks - out.h_sing - slack) breaks.push_back(a2);
        const double frac = (ks - out.h_sing - out.support_lo) / width;
        const auto cells = side_cells(breaks,
                                      std::max(32, static_cast<int>(n_cells * frac)),
                                      ks - out.h_sing, out.h_sing, a1, a2);
        auto side = accumulate_side(eco, value, cells, /*left=*/true);
        const std::size_t nn = side.node_m.size();
        if (nn >= 2) {
            edge_m1_l = side.node_m[nn - 1];
            edge_s1_l = ks - side.node_x[nn - 1];
            edge_m2_l = side.node_m[nn - 2];
            edge_s2_l = ks - side.node_x[nn - 2];
        }
        out.k.insert(out.k.end(), side.node_x.begin(), side.node_x.end());
        out.m.insert(out.m.end(), side.node_m.begin(), side.node_m.end());
        out.qx.insert(out.qx.end(), side.qx.begin(), side.qx.end());
        out.qw.insert(out.qw.end(), side.qw.begin(), side.qw.end());
        out.qm.insert(out.qm.end(), side.qm.begin(), side.qm.end());
    }
    if (ks + out.h_sing < out.support_hi - slack) {
        std::vector<double> breaks{ks + out.h_sing, out.support_hi};
        if (a1 > ks + out.h_sing + slack && a1 < out.support_hi - slack) breaks.push_back(a1);
        if (a2 > ks + out.h_sing + slack && a2 < out.support_hi - slack) breaks.push_back(a2);
        const double frac = (out.support_hi - ks - out.h_sing) / width;
        const auto cells = side_cells(breaks,
                                      std::max(32, static_cast<int>(n_cells * frac)),
                                      ks + out.h_sing, out.h_sing, a1, a2);
        auto side = accumulate_side(eco, value, cells, /*left=*/false);
        if (side.node_m.size() >= 2) {
            edge_m1_r = side.node_m[0];
            edge_s1_r = side.node_x[0] - ks;
            edge_m2_r = side.node_m[1];
            edge_s2_r = side.node_x[1] - ks;
        }
        out.k.insert(out.k.end(), side.node_x.begin(), side.node_x.end());
        out.m.insert(out.m.end(), side.node_m.begin(), side.node_m.end());
        out.qx.insert(out.qx.end(), side.qx.begin(), side.qx.end());
        out.qw.insert(out.qw.end(), side.qw.begin(), side.qw.end());
        out.qm.insert(out.qm.end(), side.qm.begin(), side.qm.end());
    }

    // Clip-window mass from the fitted local law m0 + C s^p (1 + c1 s), with
    // p + 1 = nu/theta > 0 so the window mass is finite with or without blow-up.
    // m0 = eta(kappa*)/(nu - theta) is the bounded part fed by entries at the
    // corner itself; it only arises in the subcritical case nu > theta.
    auto window_side = [&](double m1, double s1, double m2, double s2, double p,
                           double theta) {
        if (s1 <= 0.0) return 0.0;
        const double h = out.h_sing;
        double m0 = 0.0;
        const double eta_ks = eco.entry_rate(ks, value.value_at(ks));
        if (eta_ks > 0.0 && nu > theta * (1.0 + 1e-6)) m0 = eta_ks / (nu - theta);
        const double g1 = m1 - m0, g2 = m2 - m0;
        if (!(g1 > 0.0)) return m0 * h;
        double c1 = 0.0;
        if (g2 > 0.0) {
            const double r = (g2 / g1) * std::pow(s1 / s2, p);
            const double denom = s2 - r * s1;
            if (std::abs(denom) > 1e-12 * s1) c1 = (r - 1.0) / denom;
            if (!(c1 * s1 > -0.5) || !(c1 * s2 < 2.0)) c1 = 0.0;
        }
        const double c = g1 / (std::pow(s1, p) * (1.0 + c1 * s1));
        return m0 * h + c * (std::pow(h, p + 1.0) / (p + 1.0) +
                             c1 * std::pow(h, p + 2.0) / (p + 2.0));
    };
    out.window_mass =
        window_side(edge_m1_l, edge_s1_l, edge_m2_l, edge_s2_l, out.exponent_left,
                    out.theta_left) +
        window_side(edge_m1_r, edge_s1_r, edge_m2_r, edge_s2_r, out.exponent_right,
                    out.theta_right);

    out.total_mass = out.integrate_against([](double) { return 1.0; });
    return out;
}

double entry_mass(const ValueSolution& value, const DensitySolution& density) {
    const Economy& eco = value.economy;
    double s = 0.0;
    for (std::size_t i = 0; i < density.qx.size(); ++i) {
        s += density.qw[i] * eco.entry_rate(density.qx[i], value.value_at(density.qx[i]));
    }
    // entries landing inside the clip window
    const double ks = density.kappa_star, h = density.h_sing;
    auto eta_at = [&](double x) { return eco.entry_rate(x, value.value_at(x)); };
    if (ks - h > value.k_front()) s += num::gauss_panel(eta_at, ks - h, ks, 7);
    if (ks + h < value.k_back()) s += num::gauss_panel(eta_at, ks, ks + h, 7);
    return s;
}

}  // namespace firmmfg
