#include "doctest.h"

#include <cmath>

#include "firmmfg/density.hpp"
#include "firmmfg/economy.hpp"
#include "firmmfg/errors.hpp"
#include "firmmfg/hjb.hpp"
#include "firmmfg/numerics.hpp"
#include "firmmfg/simulate.hpp"
#include "helpers.hpp"

using namespace firmmfg;
using test::cobb_douglas_economy;

namespace {

struct World {
    Economy eco;
    std::vector<double> w{0.4};
    ValueSolution value;
};

World make_world() {
    World out;
    out.eco = cobb_douglas_economy();
    GridSpec gs;
    gs.n_points = 400;
    out.value = solve_value(out.eco, out.w, gs);
    return out;
}

// payoff of an arbitrary consumption policy chi(k), simulated forward with
// the stationary-continuation tail at the horizon
double policy_payoff(const World& wd, const std::function<double(double)>& chi,
                     double k0, double horizon) {
    const double rho = wd.eco.params.rho;
    auto drift = [&](double, double kk) { return wd.eco.net(kk, wd.w) - chi(kk); };
    auto admissible = [&](double, double kk) {
        return kk >= wd.value.k_front() && kk <= wd.value.k_back();
    };
    num::OdeOptions opt;
    opt.max_step = horizon / 400.0;
    double payoff = 0.0;
    double k_end = k0;
    auto observe = [&](double t0, double kk0, double, double t1, double kk1, double) {
        std::vector<double> gx, gw;
        num::gauss_legendre(3, t0, t1, gx, gw);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double tt = (gx[i] - t0) / (t1 - t0);
            const double kk = kk0 + (kk1 - kk0) * tt;
            payoff += gw[i] * wd.eco.utility.value(chi(kk)) * std::exp(-rho * gx[i]);
        }
        k_end = kk1;
    };
    num::integrate_ode_observed(drift, 0.0, k0, horizon, admissible, opt, observe);
    return payoff + wd.eco.utility.value(chi(k_end)) * std::exp(-rho * horizon) / rho;
}

}  // namespace

TEST_CASE("trajectory at the golden rule is constant") {
    const World wd = make_world();
    const double ks = wd.value.kappa_star;
    const Trajectory traj = simulate_firm(wd.value, ks, 50.0);
    for (double kk : traj.k) CHECK(kk == ks);
    // constant consumption f(kappa*): payoff equals U(f)/rho up to quadrature
    const double expect = wd.eco.utility.value(wd.eco.net(ks, wd.w)) / wd.eco.params.rho;
    CHECK(discounted_payoff(wd.eco, traj) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("monotone approach, no crossing, exponential rate") {
    const World wd = make_world();
    const double ks = wd.value.kappa_star;
    const double theta =
        0.5 * (drift_slopes(wd.value).left + drift_slopes(wd.value).right);
    const double horizon = 20.0 / wd.eco.params.rho;

    for (double k0 : {0.5 * ks, 1.5 * ks}) {
        const Trajectory traj = simulate_firm(wd.value, k0, horizon);
        const double side = k0 < ks ? 1.0 : -1.0;
        double prev_gap = std::abs(k0 - ks);
        for (std::size_t i = 1; i < traj.k.size(); ++i) {
            CHECK(side * (ks - traj.k[i]) >= 0.0);  // never crosses
            const double gap = std::abs(traj.k[i] - ks);
            CHECK(gap <= prev_gap * (1.0 + 1e-12));  // monotone approach
            prev_gap = gap;
        }
        CHECK(traj.t.back() == doctest::Approx(horizon));
        // linearized drift bound with a 10% slack on the fitted slope
        const double bound =
            std::abs(k0 - ks) * std::exp(-theta * 0.9 * horizon);
        CHECK(std::abs(traj.k.back() - ks) < bound);
    }
}

TEST_CASE("verification: optimal payoff matches the value function") {
    const World wd = make_world();
    const double ks = wd.value.kappa_star;
    const double horizon = 20.0 / wd.eco.params.rho;
    for (double frac : {0.5, 1.0, 1.5}) {
        const double k0 = frac * ks;
        const Trajectory traj = simulate_firm(wd.value, k0, horizon);
        const double payoff = discounted_payoff(wd.eco, traj);
        const double u0 = wd.value.value_at(k0);
        CHECK(std::abs(payoff - u0) < 1e-3 * (1.0 + std::abs(u0)));
    }
}

TEST_CASE("suboptimal policies earn strictly less") {
    const World wd = make_world();
    const double ks = wd.value.kappa_star;
    const double f_ks = wd.eco.net(ks, wd.w);
    const double k_floor = wd.value.k_front() * 1.01;

    SUBCASE("constant-consumption panel") {
        for (double k0 : {0.7 * ks, ks, 1.3 * ks}) {
            const double u0 = wd.value.value_at(k0);
            for (double frac : {0.5, 0.9, 1.1}) {
                const double payoff = constant_policy_payoff(
                    wd.eco, wd.w, k0, frac * f_ks, k_floor);
                CHECK(payoff < u0);
            }
        }
    }
    SUBCASE("perturbed optimal policies stay below the value function") {
        const double horizon = 20.0 / wd.eco.params.rho;
        for (double scale : {0.95, 1.02}) {
            for (double k0 : {0.6 * ks, 1.2 * ks}) {
                auto chi = [&](double kk) { return scale * wd.value.consumption_at(kk); };
                const double payoff = policy_payoff(wd, chi, k0, horizon);
                const double u0 = wd.value.value_at(k0);
                CHECK(payoff <= u0 + 1e-3 * (1.0 + std::abs(u0)));
                CHECK(payoff < u0);  // strictly suboptimal in practice
            }
        }
    }
}

TEST_CASE("energy identity along the optimal flow") {
    const World wd = make_world();
    const double rho = wd.eco.params.rho;
    const Trajectory traj = simulate_firm(wd.value, 0.5 * wd.value.kappa_star, 40.0);
    // pointwise differentiated HJB: u'(k) b(k) = rho u(k) - U(chi(k))
    for (std::size_t i = 0; i < traj.k.size(); ++i) {
        const double kk = traj.k[i];
        const double lhs = wd.value.deriv_at(kk) * wd.value.drift_at(kk);
        const double rhs = rho * wd.value.value_at(kk) -
                           wd.eco.utility.value(wd.value.consumption_at(kk));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
    // and the same along the realized path by finite differences
    for (std::size_t i = 1; i + 1 < traj.k.size(); i += 5) {
        const double du_dt = (wd.value.value_at(traj.k[i + 1]) -
                              wd.value.value_at(traj.k[i - 1])) /
                             (traj.t[i + 1] - traj.t[i - 1]);
        const double rhs = rho * wd.value.value_at(traj.k[i]) -
                           wd.eco.utility.value(traj.chi[i]);
        CHECK(du_dt == doctest::Approx(rhs).epsilon(5e-3));
    }
}

TEST_CASE("time reversal recovers the start") {
    const World wd = make_world();
    const double ks = wd.value.kappa_star;
    const double theta = drift_slopes(wd.value).left;
    const double horizon = 4.0 / theta;
    const double k0 = 0.5 * ks;
    const Trajectory traj = simulate_firm(wd.value, k0, horizon);
    const double k_end = traj.k.back();
    const double side = 1.0;
    const double back = num::integrate_ode(
        [&](double, double kk) { return wd.value.drift_at(kk); }, horizon, k_end, 0.0,
        [&](double, double kk) {
            return kk >= wd.value.k_front() && kk <= wd.value.k_back() &&
                   side * (ks - kk) >= 0.0;
        },
        {});
    CHECK(back == doctest::Approx(k0).epsilon(1e-6));
}

TEST_CASE("population histogram") {
    const World wd = make_world();
    const double nu = wd.eco.params.nu;
    const double horizon = 20.0 / nu;

    SUBCASE("fixed seed is bit-identical, independent of workers") {
        const Histogram h1 = population_histogram(wd.eco, wd.value, 20000, horizon, 7, 80, 1);
        const Histogram h2 = population_histogram(wd.eco, wd.value, 20000, horizon, 7, 80, 1);
        const Histogram h3 = population_histogram(wd.eco, wd.value, 20000, horizon, 7, 80, 3);
        CHECK(h1.density == h2.density);
        CHECK(h1.density == h3.density);
        CHECK(h1.total_mass == h3.total_mass);
    }

    SUBCASE("total mass within 3 standard errors of entry mass / nu") {
        const Histogram h = population_histogram(wd.eco, wd.value, 50000, horizon, 11, 100, 2);
        // constant entry mode: integral of eta is exactly 1
        const double expect = (1.0 - std::exp(-nu * horizon)) / nu;
        CHECK(std::abs(h.total_mass - expect) < 3.0 * h.total_mass_stderr);
    }

    SUBCASE("wasserstein distance to the analytic density") {
        GridSpec gs;
        gs.n_points = 400;
        const DensitySolution dens = solve_density(wd.eco, wd.value, gs);
        const int n_firms = 20000, n_bins = 60;
        const Histogram h =
            population_histogram(wd.eco, wd.value, n_firms, horizon, 23, n_bins, 2);

        const double lo = dens.support_lo, hi = dens.support_hi;
        auto cdf_m = [&](double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < dens.qx.size(); ++i) {
                if (dens.qx[i] <= x) s += dens.qw[i] * dens.qm[i];
            }
            if (x >= dens.kappa_star) s += dens.window_mass;
            return s / dens.total_mass;
        };
        auto cdf_h = [&](double x) {
            double s = 0.0;
            const double bw = h.bin_hi[0] - h.bin_lo[0];
            for (std::size_t b = 0; b < h.density.size(); ++b) {
                if (h.bin_hi[b] <= x) {
                    s += h.density[b] * bw;
                } else if (h.bin_lo[b] < x) {
                    s += h.density[b] * (x - h.bin_lo[b]);
                }
            }
            return s;
        };
        double w1 = 0.0;
        const int n_grid = 2000;
        for (int i = 0; i < n_grid; ++i) {
            const double x = lo + (hi - lo) * (i + 0.5) / n_grid;
            w1 += std::abs(cdf_m(x) - cdf_h(x)) * (hi - lo) / n_grid;
        }
        const double bin_w = (hi - lo) / n_bins;
        CHECK(w1 < 5.0 * (bin_w + 1.0 / std::sqrt(static_cast<double>(n_firms))));
    }
}

TEST_CASE("simulate_firm rejects out-of-span starts") {
    const World wd = make_world();
    CHECK_THROWS_AS(simulate_firm(wd.value, wd.value.k_back() * 2.0, 10.0), DomainError);
}
