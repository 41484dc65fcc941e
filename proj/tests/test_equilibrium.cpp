#include "doctest.h"

#include <cmath>
#include <random>

#include "firmmfg/economy.hpp"
#include "firmmfg/equilibrium.hpp"
#include "firmmfg/errors.hpp"
#include "helpers.hpp"

using namespace firmmfg;
using test::cobb_douglas_economy;

namespace {

EquilibriumConfig default_config() {
    EquilibriumConfig cfg;
    cfg.grid.n_points = 300;
    return cfg;
}

struct Solved {
    ValueSolution value;
    DensitySolution density;
};

Solved solve_at(const Economy& eco, const std::vector<double>& w, int n_points = 300) {
    GridSpec gs;
    gs.n_points = n_points;
    ValueSolution v = solve_value(eco, w, gs);
    DensitySolution d = solve_density(eco, v, gs);
    return {std::move(v), std::move(d)};
}

}  // namespace

TEST_CASE("aggregate demand") {
    const Economy eco = cobb_douglas_economy();
    const std::vector<double> w{0.4};
    const Solved s = solve_at(eco, w);

    SUBCASE("components nonnegative") {
        const auto dem = aggregate_demand(eco, s.value, s.density, w);
        REQUIRE(dem.size() == 1);
        CHECK(dem[0] >= 0.0);
    }

    SUBCASE("concentrated entry: demand ~ total_mass * l*(center)") {
        Economy conc = cobb_douglas_economy();
        conc.params.nu = 40.0;  // firms die before drifting away from the entry spot
        conc.entry.a1 = 0.29;
        conc.entry.a2 = 0.31;
        const Solved cs = solve_at(conc, w);
        const auto dem = aggregate_demand(conc, cs.value, cs.density, w);
        const auto l_mid = conc.production.input_demand(0.3, w);
        CHECK(dem[0] == doctest::Approx(cs.density.total_mass * l_mid[0]).epsilon(0.01));
    }

    SUBCASE("frozen-m finite-difference identity") {
        // d/dw_i of int g(k,w) dm with m frozen equals -demand_i
        const auto dem = aggregate_demand(eco, s.value, s.density, w);
        const double h = 1e-5;
        auto big_g = [&](double wi) {
            const std::vector<double> ww{wi};
            return s.density.integrate_against(
                [&](double k) { return eco.production.gross(k, ww); });
        };
        const double fd = (big_g(w[0] + h) - big_g(w[0] - h)) / (2.0 * h);
        CHECK(-fd == doctest::Approx(dem[0]).epsilon(1e-5));
    }
}

TEST_CASE("t_map") {
    const Economy eco = cobb_douglas_economy();
    EquilibriumConfig cfg = default_config();
    const std::vector<double> w{0.4};
    const Solved s = solve_at(eco, w);

    SUBCASE("lambda = 0 ignores the current prices") {
        const auto t1 = t_map(eco, 0.0, std::vector<double>{0.2}, nullptr, cfg);
        const auto t2 = t_map(eco, 0.0, std::vector<double>{5.0}, nullptr, cfg);
        REQUIRE(t1.size() == 1);
        CHECK(t1[0] == doctest::Approx(t2[0]).epsilon(1e-8));
    }

    SUBCASE("strict convexity: multistart lands on one minimizer") {
        std::mt19937_64 gen(17);
        std::uniform_real_distribution<double> u(0.05, 20.0);
        const auto ref = t_map(eco, 1.0, w, &s.density, cfg);
        for (int trial = 0; trial < 5; ++trial) {
            const std::vector<double> start{u(gen)};
            const auto got = t_map(eco, 1.0, start, &s.density, cfg);
            CHECK(got[0] == doctest::Approx(ref[0]).epsilon(1e-8));
        }
    }

    SUBCASE("first-order condition residual below 1e-10") {
        const auto v = t_map(eco, 0.5, w, &s.density, cfg);
        const auto sv = eco.supply.value(v);
        // grad Phi - (1-lambda) int l* d eta_hat - lambda int l* dm
        double eta_part = 0.0;
        const int cells = 400;
        for (int i = 0; i < cells; ++i) {
            const double k =
                eco.entry.a1 + (eco.entry.a2 - eco.entry.a1) * (i + 0.5) / cells;
            eta_part += eco.entry.hat(k) * eco.production.input_demand(k, v)[0] *
                        (eco.entry.a2 - eco.entry.a1) / cells;
        }
        const double m_part = s.density.integrate_against(
            [&](double k) { return eco.production.input_demand(k, v)[0]; });
        const double foc = sv[0] - 0.5 * eta_part - 0.5 * m_part;
        CHECK(std::abs(foc) < 1e-8);  // eta_part here is only midpoint-rule accurate
    }

    SUBCASE("tiny box triggers the box-violation error") {
        EquilibriumConfig tiny = cfg;
        tiny.eps_box = 0.9;  // box (0.9, 1.11): the minimizer falls outside
        CHECK_THROWS_AS(t_map(eco, 0.0, std::vector<double>{1.0}, nullptr, tiny),
                        BoxViolationError);
    }
}

TEST_CASE("solve_equilibrium d=1 with constant supply") {
    const Economy eco = cobb_douglas_economy();  // S(w) = 0.5
    EquilibriumConfig cfg = default_config();
    const EquilibriumResult eq = solve_equilibrium(eco, cfg);

    CHECK(eq.clearing_residual < 1e-6);
    CHECK(eq.w_star[0] > cfg.eps_box);
    CHECK(eq.w_star[0] < 1.0 / cfg.eps_box);

    SUBCASE("trace sanity") {
        REQUIRE(!eq.trace.empty());
        CHECK(eq.trace.front().lambda == 0.0);
        CHECK(eq.trace.front().iters == 1);  // T_0 is constant
        CHECK(eq.trace.back().lambda == 1.0);
        for (std::size_t i = 0; i + 1 < eq.trace.size(); ++i) {
            CHECK(eq.trace[i].lambda < eq.trace[i + 1].lambda);
        }
        CHECK(eq.trace.back().gap < cfg.final_gap_tol);
    }

    SUBCASE("matches direct bisection on the clearing residual") {
        auto residual = [&](double wi) {
            const std::vector<double> w{wi};
            const Solved s = solve_at(eco, w);
            return clearing_residual(eco, w, s.value, s.density)[0];
        };
        double lo = 0.2, hi = 3.0;
        REQUIRE(residual(lo) < 0.0);
        REQUIRE(residual(hi) > 0.0);
        for (int i = 0; i < 50; ++i) {
            const double mid = 0.5 * (lo + hi);
            (residual(mid) < 0.0 ? lo : hi) = mid;
        }
        CHECK(eq.w_star[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
    }

    SUBCASE("clearing residual by direct substitution") {
        const Solved s = solve_at(eco, eq.w_star);
        const auto r = clearing_residual(eco, eq.w_star, s.value, s.density);
        const auto sv = eco.supply.value(eq.w_star);
        CHECK(std::abs(r[0]) < 1e-6 * sv[0]);
    }
}

TEST_CASE("clearing residual diagnostics along a price scan") {
    const Economy eco = cobb_douglas_economy();
    // supply is the constant 0.5; far above equilibrium supply exceeds demand
    std::vector<double> residuals;
    for (double wi : {0.5, 0.8, 1.1, 1.4, 1.7, 2.0, 2.3}) {
        const std::vector<double> w{wi};
        const Solved s = solve_at(eco, w, 250);
        residuals.push_back(clearing_residual(eco, w, s.value, s.density)[0]);
    }
    CHECK(residuals.back() > 0.0);
    // continuity: no jumps an order of magnitude beyond the local secant slope
    for (std::size_t i = 0; i + 2 < residuals.size(); ++i) {
        const double d1 = std::abs(residuals[i + 1] - residuals[i]);
        const double d2 = std::abs(residuals[i + 2] - residuals[i + 1]);
        CHECK(d2 < 10.0 * std::max(d1, 1e-6));
    }
}

TEST_CASE("warm start does not increase the final-stage work") {
    // The damped fixed-point iteration converges linearly, so the homotopy's
    // intermediate stages are a robustness premium rather than a saving; what
    // warm-starting does guarantee is that the lambda = 1 stage costs no more
    // than a cold lambda = 1 run, and that both land on the same prices.
    const Economy eco = cobb_douglas_economy();
    EquilibriumConfig warm = default_config();
    const EquilibriumResult eq_warm = solve_equilibrium(eco, warm);

    EquilibriumConfig cold = default_config();
    cold.schedule = {1.0};
    const EquilibriumResult eq_cold = solve_equilibrium(eco, cold);

    CHECK(eq_warm.trace.back().iters <= eq_cold.total_inner_iterations);
    CHECK(eq_warm.w_star[0] == doctest::Approx(eq_cold.w_star[0]).epsilon(1e-7));
}

TEST_CASE("fixed-point gap controls the clearing residual") {
    const Economy eco = cobb_douglas_economy();
    EquilibriumConfig cfg = default_config();
    const EquilibriumResult eq = solve_equilibrium(eco, cfg);
    // ||w - T_1(w)|| < tol at w* translated into clearing units
    const Solved s = solve_at(eco, eq.w_star);
    const auto t1 = t_map(eco, 1.0, eq.w_star, &s.density, cfg);
    const double gap = std::abs(t1[0] - eq.w_star[0]);
    CHECK(gap < 10.0 * cfg.final_gap_tol);
    CHECK(eq.clearing_residual < 100.0 * std::max(gap, 1e-9));
}

TEST_CASE("exhausted stage budget surfaces with the trace attached") {
    const Economy eco = cobb_douglas_economy();
    EquilibriumConfig cfg = default_config();
    cfg.max_stage_iters = 2;
    cfg.max_schedule_refinements = 0;
    try {
        solve_equilibrium(eco, cfg);
        FAIL("expected EquilibriumFailure");
    } catch (const EquilibriumFailure& e) {
        CHECK(!e.trace.empty());
        CHECK(!e.box_violation);
    }
}

TEST_CASE("demand continuity along a small price scan") {
    const Economy eco = cobb_douglas_economy();
    std::vector<double> demands;
    std::vector<double> ws;
    for (int i = 0; i <= 8; ++i) {
        const double wi = 0.7 + 0.01 * i;
        const std::vector<double> w{wi};
        const Solved s = solve_at(eco, w, 250);
        demands.push_back(aggregate_demand(eco, s.value, s.density, w)[0]);
        ws.push_back(wi);
    }
    for (std::size_t i = 0; i + 2 < demands.size(); ++i) {
        const double s1 = std::abs(demands[i + 1] - demands[i]);
        const double s2 = std::abs(demands[i + 2] - demands[i + 1]);
        CHECK(s2 < 10.0 * std::max(s1, 1e-9));
    }
}
