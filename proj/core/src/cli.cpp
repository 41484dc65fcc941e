#include "firmmfg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "firmmfg/checks.hpp"
#include "firmmfg/density.hpp"
#include "firmmfg/equilibrium.hpp"
#include "firmmfg/errors.hpp"
#include "firmmfg/hjb.hpp"
#include "firmmfg/report.hpp"
#include "firmmfg/scenario.hpp"
#include "firmmfg/simulate.hpp"

namespace firmmfg {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct CliOptions {
    std::string scenario_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int workers = 1;
    std::string format;
};

struct RunContext {
    Scenario scenario;
    fs::path out;
    bool json = false;
    int workers = 1;
};

RunContext make_context(const CliOptions& opt) {
    RunContext ctx;
    ctx.scenario = load_scenario(opt.scenario_path, opt.overrides);
    if (!opt.out_dir.empty()) ctx.scenario.output.directory = opt.out_dir;
    if (!opt.format.empty()) ctx.scenario.output.format = opt.format;
    if (ctx.scenario.output.format != "csv" && ctx.scenario.output.format != "json") {
        throw ValidationError("--format must be csv or json");
    }
    ctx.json = ctx.scenario.output.format == "json";
    ctx.workers = std::max(1, opt.workers);
    ctx.out = ctx.scenario.output.directory;
    fs::create_directories(ctx.out);
    return ctx;
}

const std::vector<double>& fixed_prices(const Scenario& sc) {
    if (sc.w.empty()) {
        throw ValidationError("this subcommand needs price.w in the scenario");
    }
    return sc.w;
}

void write_kv_report(const fs::path& path,
                     const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path);
    for (const auto& [k, v] : rows) out << k << " = " << v << '\n';
}

void write_json_report(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

std::string join_g17(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_g17(v[i]);
    }
    return s;
}

int cmd_value(const RunContext& ctx, bool with_density) {
    const Scenario& sc = ctx.scenario;
    const auto& w = fixed_prices(sc);
    const ValueSolution value = solve_value(sc.economy, w, sc.grid);
    write_value_csv((ctx.out / "value.csv").string(), value);

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("w", join_g17(value.w));
    rows.emplace_back("kappa_star", format_g17(value.kappa_star));
    if (value.k0) rows.emplace_back("k0", format_g17(*value.k0));
    rows.emplace_back("u_at_kappa_star", format_g17(value.value_at(value.kappa_star)));
    rows.emplace_back("grid_lo", format_g17(value.k_front()));
    rows.emplace_back("grid_hi", format_g17(value.k_back()));
    rows.emplace_back("grid_points", std::to_string(value.k.size()));
    rows.emplace_back("value_csv", "value.csv");

    nlohmann::json j;
    j["w"] = value.w;
    j["kappa_star"] = value.kappa_star;
    if (value.k0) j["k0"] = *value.k0;
    j["u_at_kappa_star"] = value.value_at(value.kappa_star);
    j["grid_points"] = value.k.size();

    if (with_density) {
        const DensitySolution density = solve_density(sc.economy, value, sc.grid);
        write_density_csv((ctx.out / "density.csv").string(), density);
        write_density_summary((ctx.out / "density_summary.txt").string(), density);
        rows.emplace_back("total_mass", format_g17(density.total_mass));
        rows.emplace_back("density_csv", "density.csv");
        j["total_mass"] = density.total_mass;
        j["window_mass"] = density.window_mass;
    }
    write_kv_report(ctx.out / "summary.txt", rows);
    if (ctx.json) write_json_report(ctx.out / "summary.json", j);
    return kExitOk;
}

int cmd_equilibrium(const RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    EquilibriumConfig cfg = sc.equilibrium;
    cfg.grid = sc.grid;
    try {
        const EquilibriumResult eq = solve_equilibrium(sc.economy, cfg);
        write_trace_csv((ctx.out / "trace.csv").string(), eq.trace, sc.economy.inputs());
        write_value_csv((ctx.out / "value.csv").string(), eq.value);
        write_density_csv((ctx.out / "density.csv").string(), eq.density);
        write_density_summary((ctx.out / "density_summary.txt").string(), eq.density);

        std::vector<std::pair<std::string, std::string>> rows;
        rows.emplace_back("w_star", join_g17(eq.w_star));
        rows.emplace_back("clearing_residual", format_g17(eq.clearing_residual));
        rows.emplace_back("residuals", join_g17(eq.residuals));
        rows.emplace_back("kappa_star", format_g17(eq.value.kappa_star));
        rows.emplace_back("total_mass", format_g17(eq.density.total_mass));
        rows.emplace_back("inner_iterations", std::to_string(eq.total_inner_iterations));
        rows.emplace_back("value_csv", "value.csv");
        rows.emplace_back("density_csv", "density.csv");
        rows.emplace_back("trace_csv", "trace.csv");
        write_kv_report(ctx.out / "equilibrium_report.txt", rows);

        if (ctx.json) {
            nlohmann::json j;
            j["w_star"] = eq.w_star;
            j["clearing_residual"] = eq.clearing_residual;
            j["residuals"] = eq.residuals;
            j["kappa_star"] = eq.value.kappa_star;
            j["total_mass"] = eq.density.total_mass;
            j["inner_iterations"] = eq.total_inner_iterations;
            write_json_report(ctx.out / "equilibrium_report.json", j);
        }
        return kExitOk;
    } catch (const EquilibriumFailure& e) {
        write_trace_csv((ctx.out / "trace.csv").string(), e.trace, sc.economy.inputs());
        std::vector<std::pair<std::string, std::string>> rows;
        rows.emplace_back("error", e.what());
        rows.emplace_back("box_violation", e.box_violation ? "true" : "false");
        rows.emplace_back("trace_csv", "trace.csv");
        write_kv_report(ctx.out / "equilibrium_report.txt", rows);
        std::cerr << "equilibrium failed: " << e.what() << '\n';
        return kExitConvergence;
    }
}

int cmd_simulate(const RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    const auto& w = fixed_prices(sc);
    const ValueSolution value = solve_value(sc.economy, w, sc.grid);

    const double horizon =
        sc.simulate.horizon > 0.0 ? sc.simulate.horizon : 20.0 / sc.economy.params.rho;
    std::vector<double> k0s = sc.simulate.k0;
    if (k0s.empty()) {
        for (double f : {0.5, 1.0, 1.5}) k0s.push_back(f * value.kappa_star);
    }

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("w", join_g17(value.w));
    rows.emplace_back("kappa_star", format_g17(value.kappa_star));
    rows.emplace_back("horizon", format_g17(horizon));
    nlohmann::json j;
    j["kappa_star"] = value.kappa_star;
    j["horizon"] = horizon;
    j["payoffs"] = nlohmann::json::array();

    for (std::size_t i = 0; i < k0s.size(); ++i) {
        const Trajectory traj = simulate_firm(value, k0s[i], horizon);
        const std::string name = "trajectory_" + std::to_string(i + 1) + ".csv";
        write_trajectory_csv((ctx.out / name).string(), traj);
        const double payoff = discounted_payoff(sc.economy, traj);
        rows.emplace_back("k0_" + std::to_string(i + 1), format_g17(k0s[i]));
        rows.emplace_back("payoff_" + std::to_string(i + 1), format_g17(payoff));
        rows.emplace_back("u_" + std::to_string(i + 1),
                          format_g17(value.value_at(k0s[i])));
        j["payoffs"].push_back({{"k0", k0s[i]},
                                {"payoff", payoff},
                                {"u", value.value_at(k0s[i])}});
    }

    const double mc_horizon = 20.0 / sc.economy.params.nu;
    const Histogram hist =
        population_histogram(sc.economy, value, sc.simulate.n_firms, mc_horizon,
                             sc.simulate.seed, sc.simulate.n_bins, ctx.workers);
    write_histogram_csv((ctx.out / "histogram.csv").string(), hist);
    rows.emplace_back("seed", std::to_string(sc.simulate.seed));
    rows.emplace_back("n_firms", std::to_string(sc.simulate.n_firms));
    rows.emplace_back("mc_horizon", format_g17(mc_horizon));
    rows.emplace_back("mc_total_mass", format_g17(hist.total_mass));
    rows.emplace_back("rng", num::kRngName);
    j["seed"] = sc.simulate.seed;
    j["n_firms"] = sc.simulate.n_firms;
    j["mc_total_mass"] = hist.total_mass;

    write_kv_report(ctx.out / "simulate_summary.txt", rows);
    if (ctx.json) write_json_report(ctx.out / "simulate_summary.json", j);
    return kExitOk;
}

int cmd_check(const RunContext& ctx) {
    const auto results = run_checks(ctx.scenario);
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    bool all_pass = true;
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "[ ok ] " : "[FAIL] ") << r.name;
        if (!r.detail.empty()) {
            std::cout << std::string(width - r.name.size() + 2, ' ') << r.detail;
        }
        std::cout << '\n';
    }
    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << '\n';
    return all_pass ? kExitOk : kExitConvergence;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"stationary mean-field equilibrium solver for firm capital"};
    app.require_subcommand(1);

    CliOptions opt;
    const char* env_out = std::getenv("FIRMMFG_OUT");
    if (env_out) opt.out_dir = env_out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", opt.scenario_path, "scenario file")->required();
        cmd->add_option("--override", opt.overrides, "key=value override (repeatable)");
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--workers", opt.workers, "worker thread budget");
        cmd->add_option("--format", opt.format, "csv|json");
    };
    CLI::App* c_value = app.add_subcommand("value", "solve the HJB at fixed prices");
    CLI::App* c_density = app.add_subcommand("density", "value + stationary density");
    CLI::App* c_eq = app.add_subcommand("equilibrium", "full market-clearing pipeline");
    CLI::App* c_sim = app.add_subcommand("simulate", "firm trajectories + Monte Carlo");
    CLI::App* c_check = app.add_subcommand("check", "run the invariant suite");
    for (CLI::App* c : {c_value, c_density, c_eq, c_sim, c_check}) add_common(c);

    std::vector<const char*> argv;
    argv.push_back("firmmfg");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        const RunContext ctx = make_context(opt);
        if (c_value->parsed()) return cmd_value(ctx, /*with_density=*/false);
        if (c_density->parsed()) return cmd_value(ctx, /*with_density=*/true);
        if (c_eq->parsed()) return cmd_equilibrium(ctx);
        if (c_sim->parsed()) return cmd_simulate(ctx);
        if (c_check->parsed()) return cmd_check(ctx);
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitValidation;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace firmmfg
