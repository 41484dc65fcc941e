#include "firmmfg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "firmmfg/errors.hpp"
#include "firmmfg/numerics.hpp"

namespace firmmfg {

namespace {

// payoff increment over one accepted step: cubic-Hermite capital path,
// 3-point Gauss in time
double step_payoff(const ValueSolution& value, double rho, double t0, double k0,
                   double b0, double t1, double k1, double b1) {
    const double h = t1 - t0;
    if (h <= 0.0) return 0.0;
    std::vector<double> gx, gw;
    num::gauss_legendre(3, t0, t1, gx, gw);
    double s = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
        const double tt = (gx[i] - t0) / h;
        const double t2 = tt * tt, t3 = t2 * tt;
        const double kk = (2 * t3 - 3 * t2 + 1) * k0 + (t3 - 2 * t2 + tt) * h * b0 +
                          (-2 * t3 + 3 * t2) * k1 + (t3 - t2) * h * b1;
        const double chi = value.consumption_at(kk);
        s += gw[i] * value.economy.utility.value(chi) * std::exp(-rho * gx[i]);
    }
    return s;
}

}  // namespace

Trajectory simulate_firm(const ValueSolution& value, double k0, double horizon,
                         const StepControl& ctrl) {
    if (k0 < value.k_front() || k0 > value.k_back()) {
        throw DomainError("simulate_firm: k0 outside the value grid span");
    }
    if (!(horizon > 0.0)) throw DomainError("simulate_firm: horizon must be positive");
    const double ks = value.kappa_star;
    const double rho = value.economy.params.rho;
    const double side = k0 == ks ? 0.0 : (k0 < ks ? 1.0 : -1.0);

    Trajectory traj;
    traj.t.push_back(0.0);
    traj.k.push_back(k0);
    traj.chi.push_back(value.consumption_at(k0));
    traj.payoff.push_back(0.0);

    auto drift = [&](double, double kk) { return value.drift_at(kk); };
    auto admissible = [&](double, double kk) {
        if (kk < value.k_front() || kk > value.k_back()) return false;
        return side * (ks - kk) >= 0.0;  // never cross the golden rule
    };

    num::OdeOptions opt;
    opt.rel_tol = ctrl.rel_tol;
    opt.abs_tol = 1e-14 * std::max(1.0, ks);
    opt.max_step = ctrl.max_dt > 0.0 ? ctrl.max_dt : horizon / 200.0;

    auto observe = [&](double t0, double kk0, double b0, double t1, double kk1,
                       double b1) {
        traj.t.push_back(t1);
        traj.k.push_back(kk1);
        traj.chi.push_back(value.consumption_at(kk1));
        traj.payoff.push_back(traj.payoff.back() +
                              step_payoff(value, rho, t0, kk0, b0, t1, kk1, b1));
    };
    num::integrate_ode_observed(drift, 0.0, k0, horizon, admissible, opt, observe);
    return traj;
}

double discounted_payoff(const Economy& eco, const Trajectory& traj) {
    if (traj.t.empty()) throw DomainError("discounted_payoff: empty trajectory");
    const double rho = eco.params.rho;
    const double tail =
        eco.utility.value(traj.chi.back()) * std::exp(-rho * traj.t.back()) / rho;
    return traj.payoff.back() + tail;
}

double constant_policy_payoff(const Economy& eco, std::span<const double> w, double k0,
                              double cbar, double k_floor) {
    if (!(cbar > 0.0)) throw DomainError("constant_policy_payoff: cbar must be positive");
    if (!(k_floor > 0.0 && k_floor < k0)) {
        throw DomainError("constant_policy_payoff: need 0 < k_floor < k0");
    }
    const double rho = eco.params.rho;
    if (eco.net(k0, w) >= cbar) {
        // capital never shrinks; the policy runs forever
        return eco.utility.value(cbar) / rho;
    }
    // capital reaches k_floor at t*, then the firm stays put consuming f(k_floor)
    auto rate = [&](double k) { return 1.0 / (cbar - eco.net(k, w)); };
    std::vector<double> grid;
    const int cells = 400;
    for (int i = 0; i <= cells; ++i) grid.push_back(k_floor + (k0 - k_floor) * i / cells);
    const double t_star = num::gauss_composite(rate, grid, 7);
    const double stay = eco.utility.value(eco.net(k_floor, w)) / rho;
    return eco.utility.value(cbar) * (1.0 - std::exp(-rho * t_star)) / rho +
           std::exp(-rho * t_star) * stay;
}

Histogram population_histogram(const Economy& eco, const ValueSolution& value,
                               int n_firms, double horizon, std::uint64_t seed,
                               int n_bins, int workers) {
    if (n_firms <= 0 || n_bins <= 0) {
        throw DomainError("population_histogram: n_firms and n_bins must be positive");
    }
    const double ks = value.kappa_star;
    const double a1 = eco.entry.a1, a2 = eco.entry.a2;
    const double lo = std::min(a1, ks), hi = std::max(a2, ks);
    const double nu = eco.params.nu;
    const double c_hat = eco.params.c_hat;
    const double eta_hat_max = 2.0 / (a2 - a1);

    // majorant process: births at rate c_hat (eta_hat has unit mass), each
    // carrying mass c_hat * horizon / n_firms, thinned down to the true eta
    const double firm_weight = c_hat * horizon / n_firms;

    // per-firm results, filled independently and reduced in index order so
    // the outcome does not depend on the thread split
    std::vector<int> bin_of(static_cast<std::size_t>(n_firms), -1);

    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            num::Rng rng(seed, static_cast<std::uint64_t>(i));
            const double tau = rng.u01() * horizon;  // birth time
            // draw birth capital from eta_hat (raised cosine) by rejection
            double kb = 0.0;
            for (;;) {
                kb = a1 + (a2 - a1) * rng.u01();
                const double hat = eco.entry.hat(kb);
                if (hat > 0.0 && rng.u01() * eta_hat_max <= hat) break;
            }
            // thin against the majorant c_hat * eta_hat
            const double accept =
                eco.entry_rate(kb, value.value_at(kb)) / (c_hat * eco.entry.hat(kb));
            if (rng.u01() > accept) continue;
            const double life = rng.exponential(nu);
            const double span = horizon - tau;
            if (life <= span) continue;  // extinct before the horizon
            // drift to the horizon
            const double side = kb == ks ? 0.0 : (kb < ks ? 1.0 : -1.0);
            num::OdeOptions opt;
            opt.rel_tol = 1e-8;
            opt.abs_tol = 1e-12;
            const double kT = num::integrate_ode(
                [&](double, double kk) { return value.drift_at(kk); }, 0.0, kb, span,
                [&](double, double kk) {
                    return kk >= value.k_front() && kk <= value.k_back() &&
                           side * (ks - kk) >= 0.0;
                },
                opt);
            int b = static_cast<int>((kT - lo) / (hi - lo) * n_bins);
            bin_of[static_cast<std::size_t>(i)] = std::clamp(b, 0, n_bins - 1);
        }
    };

    workers = std::max(1, workers);
    if (workers == 1) {
        run_range(0, n_firms);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_firms + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const int b = t * chunk, e = std::min(n_firms, b + chunk);
            if (b < e) pool.emplace_back(run_range, b, e);
        }
        for (auto& th : pool) th.join();
    }

    Histogram out;
    out.seed = seed;
    out.n_firms = n_firms;
    out.horizon = horizon;
    out.bin_lo.resize(static_cast<std::size_t>(n_bins));
    out.bin_hi.resize(static_cast<std::size_t>(n_bins));
    out.density.assign(static_cast<std::size_t>(n_bins), 0.0);
    const double bin_w = (hi - lo) / n_bins;
    for (int b = 0; b < n_bins; ++b) {
        out.bin_lo[static_cast<std::size_t>(b)] = lo + b * bin_w;
        out.bin_hi[static_cast<std::size_t>(b)] = lo + (b + 1) * bin_w;
    }
    long alive = 0;
    for (int i = 0; i < n_firms; ++i) {
        const int b = bin_of[static_cast<std::size_t>(i)];
        if (b >= 0) {
            out.density[static_cast<std::size_t>(b)] += firm_weight;
            ++alive;
        }
    }
    out.total_mass = static_cast<double>(alive) * firm_weight;
    const double p = static_cast<double>(alive) / n_firms;
    out.total_mass_stderr = firm_weight * std::sqrt(n_firms * p * (1.0 - p));
    if (out.total_mass > 0.0) {
        for (auto& d : out.density) d /= out.total_mass * bin_w;
    }
    return out;
}

}  // namespace firmmfg
