#include <benchmark/benchmark.h>

#include "firmmfg/density.hpp"
#include "firmmfg/economy.hpp"
#include "firmmfg/equilibrium.hpp"
#include "firmmfg/hjb.hpp"
#include "firmmfg/simulate.hpp"

using namespace firmmfg;

namespace {

Economy cobb_douglas() {
    Economy eco;
    eco.utility = {Utility::Kind::Log, 0.5};
    eco.production.fn = CobbDouglas{1.0, 0.3, {0.4}};
    eco.params = {0.25, 0.0, 0.3, 2.0};
    eco.entry = {0.08, 0.22, EntrySpec::Mode::Constant, 1.0};
    eco.supply.fn = SeparableSupply{{0.5}, {0.0}};
    return eco;
}

Economy ces() {
    Economy eco;
    eco.utility = {Utility::Kind::Power, 0.5};
    eco.production.fn = Ces{0.45, 0.55, {0.35, 0.3}};
    eco.params = {0.2, 0.1, 0.4, 2.0};
    eco.entry = {0.05, 0.15, EntrySpec::Mode::Constant, 1.0};
    eco.supply.fn = SoftmaxSupply{0.25, 0.5, 2};
    return eco;
}

const std::vector<double> kW1{0.4};
const std::vector<double> kW2{0.7, 1.2};

}  // namespace

static void BM_kappa_star_cobb_douglas(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    for (auto _ : state) benchmark::DoNotOptimize(eco.kappa_star(kW1));
}
BENCHMARK(BM_kappa_star_cobb_douglas);

static void BM_kappa_star_ces(benchmark::State& state) {
    const Economy eco = ces();
    for (auto _ : state) benchmark::DoNotOptimize(eco.kappa_star(kW2));
}
BENCHMARK(BM_kappa_star_ces);

static void BM_ces_multiplier(benchmark::State& state) {
    const Economy eco = ces();
    for (auto _ : state) benchmark::DoNotOptimize(eco.production.ces_multiplier(1.0, kW2));
}
BENCHMARK(BM_ces_multiplier);

static void BM_invert_hamiltonian(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    const double h_min = eco.utility.value(eco.net(1.0, kW1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            invert_hamiltonian(eco, Branch::Increasing, 1.0, h_min + 0.5, kW1));
    }
}
BENCHMARK(BM_invert_hamiltonian);

static void BM_solve_value(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    GridSpec gs;
    gs.n_points = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_value(eco, kW1, gs));
}
BENCHMARK(BM_solve_value)->Arg(200)->Arg(400)->Arg(800);

static void BM_solve_density(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    GridSpec gs;
    gs.n_points = 400;
    const ValueSolution value = solve_value(eco, kW1, gs);
    for (auto _ : state) benchmark::DoNotOptimize(solve_density(eco, value, gs));
}
BENCHMARK(BM_solve_density);

static void BM_simulate_firm(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    GridSpec gs;
    gs.n_points = 400;
    const ValueSolution value = solve_value(eco, kW1, gs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_firm(value, 0.5 * value.kappa_star, 80.0));
    }
}
BENCHMARK(BM_simulate_firm);

static void BM_t_map(benchmark::State& state) {
    const Economy eco = cobb_douglas();
    GridSpec gs;
    gs.n_points = 400;
    const ValueSolution value = solve_value(eco, kW1, gs);
    const DensitySolution density = solve_density(eco, value, gs);
    EquilibriumConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(t_map(eco, 1.0, kW1, &density, cfg));
    }
}
BENCHMARK(BM_t_map);

BENCHMARK_MAIN();
