#include "firmmfg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "firmmfg/errors.hpp"

namespace firmmfg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

class KeyStore {
public:
    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
        consumed_[key] = false;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string raw(const std::string& key) {
        consumed_[key] = true;
        return values_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return parse_number(key, raw(key));
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return raw(key);
    }

    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        if (!has(key)) return out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(parse_number(key, item));
        }
        return out;
    }

    std::vector<std::string> unconsumed() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) {
            if (!consumed_.at(k)) out.push_back(k);
        }
        return out;
    }

private:
    double parse_number(const std::string& key, const std::string& s) const {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ValidationError("scenario: key '" + key + "' has non-numeric value '" +
                                  s + "'");
        }
        if (pos != s.size()) {
            throw ValidationError("scenario: key '" + key + "' has trailing junk in '" +
                                  s + "'");
        }
        return v;
    }

    std::map<std::string, std::string> values_;
    std::map<std::string, bool> consumed_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError("scenario: " + message);
}

}  // namespace

Scenario parse_scenario(const std::string& text,
                        const std::vector<std::string>& overrides) {
    KeyStore ks;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("scenario: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), "empty key on line " + std::to_string(line_no));
        ks.set(key, trim(line.substr(eq + 1)));
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("override '" + ov + "' is not key=value");
        }
        ks.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }

    Scenario sc;

    // utility
    const std::string uv = ks.text("utility.variant", "log");
    if (uv == "log") {
        sc.economy.utility.kind = Utility::Kind::Log;
        if (ks.has("utility.b")) ks.raw("utility.b");  // tolerated, unused
    } else if (uv == "power") {
        sc.economy.utility.kind = Utility::Kind::Power;
        sc.economy.utility.b = ks.number("utility.b", 0.5);
        require(sc.economy.utility.b > 0.0 && sc.economy.utility.b < 1.0,
                "utility.b must lie in (0,1)");
    } else {
        throw ValidationError("scenario: utility.variant must be log or power");
    }

    // production
    const std::string pv = ks.text("production.variant", "cobb_douglas");
    const std::vector<double> beta = ks.numbers("production.beta");
    require(!beta.empty(), "production.beta must list at least one input elasticity");
    if (pv == "cobb_douglas") {
        CobbDouglas cd;
        cd.A = ks.number("production.A", 1.0);
        cd.alpha = ks.number("production.alpha", 0.3);
        cd.beta = beta;
        require(cd.A > 0.0, "production.A must be positive");
        double bs = 0.0;
        for (double b : cd.beta) {
            require(b > 0.0 && b < 1.0, "each production.beta entry must lie in (0,1)");
            bs += b;
        }
        require(bs < 1.0, "sum of production.beta must be below 1");
        require(cd.alpha > 0.0 && cd.alpha < 1.0 - bs,
                "production.alpha must lie in (0, 1 - sum beta)");
        if (ks.has("production.gamma")) ks.raw("production.gamma");  // unused here
        sc.economy.production.fn = cd;
    } else if (pv == "ces") {
        Ces ces;
        ces.alpha = ks.number("production.alpha", 0.5);
        ces.gamma = ks.number("production.gamma", 0.5);
        ces.beta = beta;
        require(ces.alpha > 0.0 && ces.alpha < 1.0, "production.alpha must lie in (0,1)");
        require(ces.gamma > 0.0 && ces.gamma < 1.0, "production.gamma must lie in (0,1)");
        for (double b : ces.beta) {
            require(b > 0.0 && b < 1.0, "each production.beta entry must lie in (0,1)");
        }
        if (ks.has("production.A")) ks.raw("production.A");  // unused here
        sc.economy.production.fn = ces;
    } else {
        throw ValidationError("scenario: production.variant must be cobb_douglas or ces");
    }
    const int d = sc.economy.inputs();

    // params
    sc.economy.params.rho = ks.number("params.rho", 0.1);
    sc.economy.params.delta = ks.number("params.delta", 0.0);
    sc.economy.params.nu = ks.number("params.nu", 0.5);
    sc.economy.params.c_hat = ks.number("params.c_hat", 2.0);
    require(sc.economy.params.rho > 0.0, "params.rho must be positive");
    require(sc.economy.params.delta >= 0.0, "params.delta must be >= 0");
    require(sc.economy.params.nu > 0.0, "params.nu must be positive");
    require(sc.economy.params.c_hat >= 1.0, "params.c_hat must be >= 1");

    // entry
    sc.economy.entry.a1 = ks.number("entry.a1", 0.1);
    sc.economy.entry.a2 = ks.number("entry.a2", 0.3);
    require(sc.economy.entry.a1 > 0.0 && sc.economy.entry.a1 < sc.economy.entry.a2,
            "entry support needs 0 < a1 < a2");
    const std::string em = ks.text("entry.mode", "constant");
    if (em == "constant") {
        sc.economy.entry.mode = EntrySpec::Mode::Constant;
    } else if (em == "bounded") {
        sc.economy.entry.mode = EntrySpec::Mode::BoundedModulation;
    } else {
        throw ValidationError("scenario: entry.mode must be constant or bounded");
    }
    sc.economy.entry.v_scale = ks.number("entry.v_scale", 1.0);
    require(sc.economy.entry.v_scale > 0.0, "entry.v_scale must be positive");

    // supply
    const std::string sv = ks.text("supply.variant", "separable");
    if (sv == "separable") {
        SeparableSupply sep;
        if (ks.has("supply.curves")) {
            std::stringstream ss(ks.raw("supply.curves"));
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                const auto colon = item.find(':');
                require(colon != std::string::npos,
                        "supply.curves entries must be intercept:slope");
                try {
                    sep.intercept.push_back(std::stod(item.substr(0, colon)));
                    sep.slope.push_back(std::stod(item.substr(colon + 1)));
                } catch (const std::exception&) {
                    throw ValidationError("scenario: bad supply.curves entry '" + item +
                                          "'");
                }
            }
        }
        if (sep.intercept.empty()) {
            // identity curves S_i(t) = t when no curves are given
            sep.intercept.assign(static_cast<std::size_t>(d), 0.0);
            sep.slope.assign(static_cast<std::size_t>(d), 1.0);
        }
        require(static_cast<int>(sep.intercept.size()) == d,
                "supply.curves must list one intercept:slope pair per input");
        for (std::size_t i = 0; i < sep.intercept.size(); ++i) {
            require(sep.intercept[i] >= 0.0 && sep.slope[i] >= 0.0,
                    "supply curves must be nonnegative and nondecreasing");
            require(sep.intercept[i] + sep.slope[i] > 0.0,
                    "supply curves must not be identically zero");
        }
        if (ks.has("supply.sigma")) ks.raw("supply.sigma");
        if (ks.has("supply.w0")) ks.raw("supply.w0");
        sc.economy.supply.fn = sep;
    } else if (sv == "softmax") {
        SoftmaxSupply sm;
        sm.sigma = ks.number("supply.sigma", 0.25);
        sm.w0 = ks.number("supply.w0", 0.5);
        sm.d = d;
        require(sm.sigma > 0.0, "supply.sigma must be positive");
        require(sm.w0 > 0.0, "supply.w0 must be positive");
        if (ks.has("supply.curves")) ks.raw("supply.curves");
        sc.economy.supply.fn = sm;
    } else {
        throw ValidationError("scenario: supply.variant must be separable or softmax");
    }

    // fixed prices
    sc.w = ks.numbers("price.w");
    if (!sc.w.empty()) {
        require(static_cast<int>(sc.w.size()) == d, "price.w must have one entry per input");
        for (double wi : sc.w) require(wi > 0.0, "price.w entries must be positive");
    }

    // grid
    sc.grid.k_lo = ks.number("grid.k_lo", 0.0);
    sc.grid.k_hi = ks.number("grid.k_hi", 0.0);
    sc.grid.n_points = static_cast<int>(ks.number("grid.n_points", 400));
    sc.grid.clustering = ks.number("grid.clustering", 0.9);
    sc.grid.h_sing_rel = ks.number("grid.h_sing", 1e-4);
    sc.grid.density_points = static_cast<int>(ks.number("grid.density_points", 0));
    require(sc.grid.n_points >= 100, "grid.n_points must be >= 100");
    require(sc.grid.clustering >= 0.0 && sc.grid.clustering < 1.0,
            "grid.clustering must lie in [0,1)");
    require(sc.grid.h_sing_rel > 0.0 && sc.grid.h_sing_rel < 0.1,
            "grid.h_sing must lie in (0, 0.1)");
    if (sc.grid.k_lo != 0.0 || sc.grid.k_hi != 0.0) {
        require(sc.grid.k_lo > 0.0 && sc.grid.k_hi > sc.grid.k_lo,
                "grid bounds need 0 < k_lo < k_hi");
    }

    // equilibrium
    sc.equilibrium.grid = sc.grid;
    sc.equilibrium.eps_box = ks.number("equilibrium.eps_box", 1e-3);
    sc.equilibrium.tol_clearing = ks.number("equilibrium.tol_clearing", 1e-6);
    sc.equilibrium.stage_gap_tol = ks.number("equilibrium.stage_tol", 1e-4);
    sc.equilibrium.final_gap_tol = ks.number("equilibrium.final_tol", 1e-9);
    sc.equilibrium.damping = ks.number("equilibrium.damping", 0.5);
    sc.equilibrium.max_stage_iters =
        static_cast<int>(ks.number("equilibrium.max_iter", 100));
    if (ks.has("equilibrium.schedule")) {
        sc.equilibrium.schedule = ks.numbers("equilibrium.schedule");
    }
    if (ks.has("equilibrium.w_init")) {
        sc.equilibrium.w_init = ks.numbers("equilibrium.w_init");
        require(static_cast<int>(sc.equilibrium.w_init.size()) == d,
                "equilibrium.w_init must have one entry per input");
    }
    require(sc.equilibrium.eps_box > 0.0 && sc.equilibrium.eps_box < 1.0,
            "equilibrium.eps_box must lie in (0,1)");
    require(sc.equilibrium.tol_clearing > 0.0, "equilibrium.tol_clearing must be positive");
    require(sc.equilibrium.stage_gap_tol > 0.0, "equilibrium.stage_tol must be positive");
    require(sc.equilibrium.final_gap_tol > 0.0, "equilibrium.final_tol must be positive");
    require(sc.equilibrium.damping > 0.0 && sc.equilibrium.damping <= 1.0,
            "equilibrium.damping must lie in (0,1]");
    require(sc.equilibrium.max_stage_iters > 0, "equilibrium.max_iter must be positive");
    for (double lam : sc.equilibrium.schedule) {
        require(lam >= 0.0 && lam <= 1.0, "equilibrium.schedule entries must lie in [0,1]");
    }

    // simulate
    sc.simulate.k0 = ks.numbers("simulate.k0");
    for (double k : sc.simulate.k0) require(k > 0.0, "simulate.k0 entries must be positive");
    sc.simulate.horizon = ks.number("simulate.horizon", 0.0);
    require(sc.simulate.horizon >= 0.0, "simulate.horizon must be >= 0");
    sc.simulate.n_firms = static_cast<int>(ks.number("simulate.n_firms", 100000));
    require(sc.simulate.n_firms > 0, "simulate.n_firms must be positive");
    const double seed = ks.number("simulate.seed", 12345);
    require(seed >= 0.0, "simulate.seed must be >= 0");
    sc.simulate.seed = static_cast<std::uint64_t>(seed);
    sc.simulate.n_bins = static_cast<int>(ks.number("simulate.n_bins", 100));
    require(sc.simulate.n_bins > 0, "simulate.n_bins must be positive");

    // output
    sc.output.directory = ks.text("output.directory", ".");
    sc.output.format = ks.text("output.format", "csv");
    require(sc.output.format == "csv" || sc.output.format == "json",
            "output.format must be csv or json");

    const auto leftovers = ks.unconsumed();
    if (!leftovers.empty()) {
        std::string msg = "scenario: unknown key(s):";
        for (const auto& k : leftovers) msg += " '" + k + "'";
        throw ValidationError(msg);
    }
    return sc;
}

Scenario load_scenario(const std::string& path,
                       const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), overrides);
}

}  // namespace firmmfg
