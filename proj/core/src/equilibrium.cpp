#include "firmmfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "firmmfg/errors.hpp"

namespace firmmfg {

namespace {

// fixed quadrature of the entry profile: nodes, weights, eta_hat values
struct EntryQuad {
    std::vector<double> x, w, eta;
};

EntryQuad entry_quadrature(const Economy& eco) {
    EntryQuad q;
    const double a1 = eco.entry.a1, a2 = eco.entry.a2;
    const int cells = 24;
    for (int c = 0; c < cells; ++c) {
        const double lo = a1 + (a2 - a1) * c / cells;
        const double hi = a1 + (a2 - a1) * (c + 1) / cells;
        std::vector<double> gx, gw;
        num::gauss_legendre(7, lo, hi, gx, gw);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            q.x.push_back(gx[i]);
            q.w.push_back(gw[i]);
            q.eta.push_back(eco.entry.hat(gx[i]));
        }
    }
    return q;
}

// d-dimensional linear solve, Gaussian elimination with partial pivoting
bool solve_linear(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        }
        if (std::abs(a[piv * n + col]) < 1e-300) return false;
        for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(b.size(), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return true;
}

// the blended objective Phi(v) + int g(k,v) d mu and its analytic gradient
struct BlendedObjective {
    const Economy* eco;
    double lambda;
    const DensitySolution* density;
    EntryQuad entry;

    double value(std::span<const double> v) const {
        double s = eco->supply.potential(v);
        if (lambda < 1.0) {
            double gi = 0.0;
            for (std::size_t i = 0; i < entry.x.size(); ++i) {
                gi += entry.w[i] * entry.eta[i] * eco->production.gross(entry.x[i], v);
            }
            s += (1.0 - lambda) * gi;
        }
        if (lambda > 0.0) {
            s += lambda * density->integrate_against(
                     [&](double k) { return eco->production.gross(k, v); });
        }
        return s;
    }

    // grad = S(v) - int l*(k, v) d mu   (exact by the envelope theorem)
    std::vector<double> gradient(std::span<const double> v) const {
        std::vector<double> g = eco->supply.value(v);
        const auto add_demand = [&](double k, double weight) {
            const auto l = eco->production.input_demand(k, v);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= weight * l[i];
        };
        if (lambda < 1.0) {
            for (std::size_t i = 0; i < entry.x.size(); ++i) {
                add_demand(entry.x[i], (1.0 - lambda) * entry.w[i] * entry.eta[i]);
            }
        }
        if (lambda > 0.0) {
            for (std::size_t i = 0; i < density->qx.size(); ++i) {
                add_demand(density->qx[i], lambda * density->qw[i] * density->qm[i]);
            }
            add_demand(density->kappa_star, lambda * density->window_mass);
        }
        return g;
    }
};

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<double> aggregate_demand(const Economy& eco, const ValueSolution& value,
                                     const DensitySolution& density,
                                     std::span<const double> w) {
    check_prices(w, eco.inputs());
    (void)value;
    std::vector<double> demand(w.size(), 0.0);
    const auto add = [&](double k, double weight) {
        const auto l = eco.production.input_demand(k, w);
        for (std::size_t i = 0; i < demand.size(); ++i) demand[i] += weight * l[i];
    };
    for (std::size_t i = 0; i < density.qx.size(); ++i) {
        add(density.qx[i], density.qw[i] * density.qm[i]);
    }
    add(density.kappa_star, density.window_mass);
    return demand;
}

std::vector<double> clearing_residual(const Economy& eco, std::span<const double> w,
                                      const ValueSolution& value,
                                      const DensitySolution& density) {
    const auto s = eco.supply.value(w);
    const auto d = aggregate_demand(eco, value, density, w);
    std::vector<double> r(s.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] - d[i];
    return r;
}

double clearing_residual_scalar(const Economy& eco, std::span<const double> w,
                                const ValueSolution& value,
                                const DensitySolution& density) {
    const auto s = eco.supply.value(w);
    const auto r = clearing_residual(eco, w, value, density);
    double scale = 1e-30;
    for (double si : s) scale = std::max(scale, si);
    double worst = 0.0;
    for (double ri : r) worst = std::max(worst, std::abs(ri));
    return worst / scale;
}

std::vector<double> t_map(const Economy& eco, double lambda,
                          std::span<const double> w_current,
                          const DensitySolution* density,
                          const EquilibriumConfig& cfg) {
    const int d = eco.inputs();
    if (lambda > 0.0 && density == nullptr) {
        throw DomainError("t_map: lambda > 0 needs the density at w_current");
    }
    const double lo = cfg.eps_box, hi = 1.0 / cfg.eps_box;
    BlendedObjective obj{&eco, lambda, density, entry_quadrature(eco)};

    std::vector<double> v(w_current.begin(), w_current.end());
    if (static_cast<int>(v.size()) != d) {
        throw DomainError("t_map: price dimension mismatch");
    }
    for (auto& vi : v) vi = std::clamp(vi, lo, hi);

    const int max_iter = 120;
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        const auto grad = obj.gradient(v);
        const double gscale = inf_norm(eco.supply.value(v));
        if (inf_norm(grad) < 1e-10 * std::max(1.0, gscale)) {
            converged = true;
            break;
        }
        // finite-difference curvature of the analytic gradient
        std::vector<double> hess(static_cast<std::size_t>(d) * d, 0.0);
        for (int j = 0; j < d; ++j) {
            const double h = 1e-6 * std::max(std::abs(v[j]), 1e-2);
            auto vp = v, vm = v;
            vp[j] += h;
            vm[j] -= h;
            const auto gp = obj.gradient(vp);
            const auto gm = obj.gradient(vm);
            for (int i = 0; i < d; ++i) hess[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
        std::vector<double> rhs(grad.begin(), grad.end());
        for (auto& r : rhs) r = -r;
        std::vector<double> dv;
        bool descent = solve_linear(hess, rhs, dv);
        if (descent) {
            double dir = 0.0;
            for (int i = 0; i < d; ++i) dir += grad[i] * dv[i];
            if (!(dir < 0.0)) descent = false;
        }
        if (!descent) {
            dv.assign(grad.begin(), grad.end());
            for (auto& x : dv) x = -x;
        }
        std::vector<double> vn = v;
        if (inf_norm(dv) < 1e-8 * std::max(1.0, inf_norm(v))) {
            // the objective is flat to machine precision this close to the
            // minimum; trust the Newton step
            for (int i = 0; i < d; ++i) vn[i] = std::clamp(v[i] + dv[i], lo, hi);
        } else {
            const double j0 = obj.value(v);
            double step = 1.0;
            for (int ls = 0; ls < 40; ++ls) {
                for (int i = 0; i < d; ++i) vn[i] = std::clamp(v[i] + step * dv[i], lo, hi);
                if (obj.value(vn) <= j0 + 1e-14 * (1.0 + std::abs(j0))) break;
                step *= 0.5;
            }
        }
        if (vn == v) break;  // pinned against the box
        v = vn;
    }
    const double edge_tol = 1e-8 * (hi - lo);
    bool at_boundary = false;
    for (double vi : v) {
        if (vi < lo + edge_tol || vi > hi - edge_tol) at_boundary = true;
    }
    if (at_boundary) {
        throw BoxViolationError(
            "t_map: minimizer on the price-box boundary (interiority fails for this "
            "scenario/box)");
    }
    if (!converged) throw ConvergenceError("t_map: inner minimizer did not converge");
    return v;
}

EquilibriumResult solve_equilibrium(const Economy& eco, const EquilibriumConfig& cfg) {
    const int d = eco.inputs();
    const double lo = cfg.eps_box, hi = 1.0 / cfg.eps_box;

    std::vector<double> w = cfg.w_init;
    if (w.empty()) w.assign(static_cast<std::size_t>(d), 1.0);
    if (static_cast<int>(w.size()) != d) {
        throw DomainError("solve_equilibrium: w_init dimension mismatch");
    }
    for (auto& wi : w) wi = std::clamp(wi, lo, hi);

    std::vector<double> sched = cfg.schedule;
    std::sort(sched.begin(), sched.end());
    if (sched.empty() || sched.back() != 1.0) sched.push_back(1.0);

    GridSpec grid = cfg.grid;
    grid.k_lo = 0.0;  // bounds follow kappa*(w) as prices move
    grid.k_hi = 0.0;
    GridSpec inner_grid = grid;
    inner_grid.reg_ladder = {grid.reg_ladder.empty() ? 1e-8 : grid.reg_ladder.back()};
    inner_grid.check_regularization = false;

    // value/density cache keyed by prices quantized at 1e-12;
    // concurrent readers, serialized insertion
    using Key = std::vector<long long>;
    using Entry = std::shared_ptr<std::pair<ValueSolution, DensitySolution>>;
    std::map<Key, Entry> cache;
    std::shared_mutex cache_mutex;
    auto quantize = [](std::span<const double> ww) {
        Key key;
        key.reserve(ww.size());
        for (double x : ww) key.push_back(std::llround(x / 1e-12));
        return key;
    };
    auto solve_at = [&](std::span<const double> ww) -> Entry {
        const Key key = quantize(ww);
        {
            std::shared_lock lock(cache_mutex);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
        }
        ValueSolution value = solve_value(eco, ww, inner_grid);
        DensitySolution density = solve_density(eco, value, inner_grid);
        auto entry = std::make_shared<std::pair<ValueSolution, DensitySolution>>(
            std::move(value), std::move(density));
        std::unique_lock lock(cache_mutex);
        cache.emplace(key, entry);
        return entry;
    };

    std::vector<HomotopyRecord> trace;
    long total_iters = 0;
    int refinements = 0;
    double lambda_prev = 0.0;
    std::size_t si = 0;
    while (si < sched.size()) {
        const double lambda = sched[si];
        const double stage_tol = (lambda >= 1.0) ? cfg.final_gap_tol : cfg.stage_gap_tol;
        const std::vector<double> w_start = w;

        double tau = cfg.damping;
        double prev_gap = std::numeric_limits<double>::infinity();
        int decreases = 0;
        int iters = 0;
        double gap = std::numeric_limits<double>::infinity();
        bool stage_ok = false;
        try {
            while (iters < cfg.max_stage_iters) {
                Entry sol;
                if (lambda > 0.0) sol = solve_at(w);
                const auto w_target =
                    t_map(eco, lambda, w, sol ? &sol->second : nullptr, cfg);
                ++iters;
                ++total_iters;
                gap = 0.0;
                for (int i = 0; i < d; ++i) {
                    gap = std::max(gap, std::abs(w[i] - w_target[i]));
                }
                if (lambda == 0.0) {
                    w = w_target;  // T_0 is constant, so this step lands on its
                    gap = 0.0;     // fixed point exactly
                    stage_ok = true;
                    break;
                }
                if (gap < stage_tol) {
                    w = w_target;
                    stage_ok = true;
                    break;
                }
                if (gap > prev_gap * (1.0 + 1e-12)) {
                    tau = std::max(0.0625, 0.5 * tau);
                    decreases = 0;
                } else if (++decreases >= 3) {
                    tau = cfg.damping;
                }
                for (int i = 0; i < d; ++i) {
                    w[i] = (1.0 - tau) * w[i] + tau * w_target[i];
                }
                prev_gap = gap;
            }
        } catch (const BoxViolationError& e) {
            trace.push_back({lambda, iters, gap, w});
            throw EquilibriumFailure(e.what(), trace, /*box=*/true);
        }
        if (!stage_ok) {
            if (refinements >= cfg.max_schedule_refinements) {
                trace.push_back({lambda, iters, gap, w});
                throw EquilibriumFailure(
                    "solve_equilibrium: stage at lambda=" + std::to_string(lambda) +
                        " exceeded its iteration budget",
                    trace, /*box=*/false);
            }
            ++refinements;
            sched.insert(sched.begin() + static_cast<std::ptrdiff_t>(si),
                         0.5 * (lambda_prev + lambda));
            w = w_start;
            continue;
        }
        trace.push_back({lambda, iters, gap, w});
        lambda_prev = lambda;
        ++si;
    }

    EquilibriumResult out;
    out.w_star = w;
    out.trace = std::move(trace);
    out.total_inner_iterations = total_iters;

    // final solve at w* with the full regularization ladder
    out.value = solve_value(eco, w, grid);
    out.density = solve_density(eco, out.value, grid);
    out.residuals = clearing_residual(eco, w, out.value, out.density);
    out.clearing_residual = clearing_residual_scalar(eco, w, out.value, out.density);
    if (!(out.clearing_residual < cfg.tol_clearing)) {
        throw EquilibriumFailure(
            "solve_equilibrium: clearing residual " +
                std::to_string(out.clearing_residual) + " above tolerance",
            out.trace, /*box=*/false);
    }
    for (double wi : w) {
        if (!(wi > lo && wi < hi)) {
            throw EquilibriumFailure("solve_equilibrium: w* not strictly inside the box",
                                     out.trace, /*box=*/true);
        }
    }
    return out;
}

}  // namespace firmmfg
