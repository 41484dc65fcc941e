#include "firmmfg/checks.hpp"

#include <cmath>
#include <sstream>

#include "firmmfg/density.hpp"
#include "firmmfg/errors.hpp"
#include "firmmfg/hjb.hpp"
#include "firmmfg/report.hpp"

namespace firmmfg {

namespace {

class Suite {
public:
    template <typename Fn>
    void run(const std::string& name, Fn&& fn) {
        CheckResult res;
        res.name = name;
        try {
            std::ostringstream detail;
            res.pass = fn(detail);
            res.detail = detail.str();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = e.what();
        }
        results.push_back(std::move(res));
    }
    std::vector<CheckResult> results;
};

}  // namespace

std::vector<CheckResult> run_checks(const Scenario& sc) {
    if (sc.w.empty()) {
        throw ValidationError("check: scenario needs price.w");
    }
    const Economy& eco = sc.economy;
    const std::vector<double>& w = sc.w;
    Suite suite;

    suite.run("utility: argmax inverts the marginal", [&](std::ostream& out) {
        double worst = 0.0;
        for (double c : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
            const double back = eco.utility.marginal_inverse(eco.utility.marginal(c));
            worst = std::max(worst, std::abs(back - c) / c);
        }
        out << "max rel err " << format_g17(worst);
        return worst < 1e-10;
    });

    suite.run("utility: increasing, strictly concave", [&](std::ostream&) {
        double pu = -1e300, pdu = 1e300;
        for (double c = 0.05; c < 10.0; c += 0.05) {
            const double u = eco.utility.value(c), du = eco.utility.marginal(c);
            if (u <= pu || du >= pdu) return false;
            pu = u;
            pdu = du;
        }
        return true;
    });

    suite.run("production: f strictly concave, f(0,w) >= 0", [&](std::ostream&) {
        if (eco.net(0.0, w) < 0.0) return false;
        for (double k = 0.2; k < 5.0; k += 0.2) {
            const double h = 0.05;
            if (eco.net(k + h, w) - 2.0 * eco.net(k, w) + eco.net(k - h, w) >= 0.0) {
                return false;
            }
        }
        return true;
    });

    suite.run("production: -f monotone in prices", [&](std::ostream&) {
        std::vector<double> w2 = w;
        for (auto& x : w2) x *= 1.3;
        for (double k : {0.3, 1.0, 2.5}) {
            if (eco.net(k, w) < eco.net(k, w2)) return false;
        }
        return true;
    });

    suite.run("production: demand attains the net-output gradient", [&](std::ostream& out) {
        double worst = 0.0;
        for (double k : {0.4, 1.1}) {
            const auto l = eco.production.input_demand(k, w);
            for (std::size_t i = 0; i < w.size(); ++i) {
                auto f_of = [&](double wi) {
                    auto ww = w;
                    ww[i] = wi;
                    return eco.net(k, ww);
                };
                const double h = 1e-6 * w[i];
                const double fd = -(f_of(w[i] + h) - f_of(w[i] - h)) / (2.0 * h);
                worst = std::max(worst, std::abs(fd - l[i]) / std::max(1e-12, l[i]));
            }
        }
        out << "max rel err " << format_g17(worst);
        return worst < 1e-6;
    });

    if (!eco.production.is_cobb_douglas()) {
        suite.run("production: CES multiplier residual", [&](std::ostream& out) {
            double worst = 0.0;
            for (double k : {0.0, 0.5, 2.0}) {
                const double lam = eco.production.ces_multiplier(k, w);
                const auto& ces = std::get<Ces>(eco.production.fn);
                double s = k > 0.0 ? std::pow(k, ces.alpha) : 0.0;
                for (std::size_t j = 0; j < ces.beta.size(); ++j) {
                    s += std::pow(lam * ces.beta[j] / w[j],
                                  ces.beta[j] / (1.0 - ces.beta[j]));
                }
                worst = std::max(worst,
                                 std::abs(lam * std::pow(s, 1.0 - ces.gamma) - ces.gamma));
            }
            out << "max residual " << format_g17(worst);
            return worst < 1e-12;
        });
    }

    suite.run("entry: unit mass, two-sided bound", [&](std::ostream& out) {
        const double a1 = eco.entry.a1, a2 = eco.entry.a2;
        const int n = 200000;
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            mass += eco.entry.hat(a1 + (a2 - a1) * (i + 0.5) / n) * (a2 - a1) / n;
        }
        out << "mass " << format_g17(mass);
        if (std::abs(mass - 1.0) > 1e-9) return false;
        const double mid = 0.5 * (a1 + a2);
        for (double v : {-1e6, 0.0, 1e6}) {
            const double ratio = eco.entry_rate(mid, v) / eco.entry.hat(mid);
            if (ratio < 1.0 / eco.params.c_hat - 1e-12 ||
                ratio > eco.params.c_hat + 1e-12) {
                return false;
            }
        }
        return true;
    });

    suite.run("supply: gradient of the potential matches S", [&](std::ostream& out) {
        const auto sv = eco.supply.value(w);
        double worst = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            auto phi = [&](double wi) {
                auto ww = w;
                ww[i] = wi;
                return eco.supply.potential(ww);
            };
            const double h = 1e-6 * std::max(w[i], 0.1);
            const double fd = (phi(w[i] + h) - phi(w[i] - h)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - sv[i]) / std::max(1e-9, std::abs(sv[i])));
        }
        out << "max rel err " << format_g17(worst);
        return worst < 1e-6;
    });

    suite.run("supply: potential nonnegative and midpoint convex", [&](std::ostream&) {
        std::vector<double> a = w, b = w;
        for (auto& x : a) x *= 0.35;
        for (auto& x : b) x *= 2.7;
        std::vector<double> mid(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
        if (eco.supply.potential(a) < 0.0 || eco.supply.potential(b) < 0.0) return false;
        return eco.supply.potential(mid) <=
               0.5 * (eco.supply.potential(a) + eco.supply.potential(b)) + 1e-12;
    });

    // value function
    ValueSolution value;
    suite.run("value: solve with regularization ladder", [&](std::ostream& out) {
        value = solve_value(eco, w, sc.grid);
        out << "kappa* " << format_g17(value.kappa_star);
        return true;
    });
    if (!suite.results.back().pass) return suite.results;

    suite.run("value: golden-rule corner values", [&](std::ostream& out) {
        const double f_ks = eco.net(value.kappa_star, w);
        const double du_err =
            std::abs(value.deriv_at(value.kappa_star) - eco.utility.marginal(f_ks));
        const double u_err = std::abs(value.value_at(value.kappa_star) -
                                      eco.utility.value(f_ks) / eco.params.rho);
        out << "du err " << format_g17(du_err) << ", u err " << format_g17(u_err);
        return du_err < 1e-8 && u_err < 1e-8;
    });

    suite.run("value: HJB residual below 1e-6", [&](std::ostream& out) {
        double worst = 0.0;
        for (std::size_t i = 0; i < value.k.size(); ++i) {
            const double h = hamiltonian(eco, value.k[i], value.du[i], w);
            const double res = std::abs(-eco.params.rho * value.u[i] + h) /
                               (1.0 + std::abs(eco.params.rho * value.u[i]));
            worst = std::max(worst, res);
        }
        out << "max residual " << format_g17(worst);
        return worst < 1e-6;
    });

    suite.run("value: increasing, strictly concave, du > 0 decreasing", [&](std::ostream&) {
        for (std::size_t i = 0; i + 1 < value.k.size(); ++i) {
            if (value.u[i + 1] <= value.u[i]) return false;
            if (value.du[i] <= 0.0) return false;
            if (value.du[i + 1] >= value.du[i] * (1.0 + 1e-9) + 1e-13) return false;
        }
        return true;
    });

    suite.run("value: drift sign pattern (+, 0, -)", [&](std::ostream&) {
        for (std::size_t i = 0; i < value.k.size(); ++i) {
            const double b = value.drift_at(value.k[i]);
            if (value.k[i] < value.kappa_star && b <= 0.0) return false;
            if (value.k[i] > value.kappa_star && b >= 0.0) return false;
        }
        return value.drift_at(value.kappa_star) == 0.0;
    });

    if (eco.params.delta > 0.0) {
        suite.run("value: break-even capital k0 > kappa*", [&](std::ostream& out) {
            if (!value.k0) return false;
            out << "k0 " << format_g17(*value.k0);
            return *value.k0 > value.kappa_star && std::abs(eco.net(*value.k0, w)) < 1e-9;
        });
    }

    // density
    DensitySolution density;
    suite.run("density: solve", [&](std::ostream& out) {
        density = solve_density(eco, value, sc.grid);
        out << "total mass " << format_g17(density.total_mass);
        return true;
    });
    if (!suite.results.back().pass) return suite.results;

    suite.run("density: nonnegative on the clipped grid", [&](std::ostream&) {
        for (double mm : density.m) {
            if (mm < 0.0) return false;
        }
        return true;
    });

    suite.run("density: mass balance nu*mass = entry mass", [&](std::ostream& out) {
        const double em = entry_mass(value, density);
        const double err = std::abs(eco.params.nu * density.total_mass - em) / em;
        out << "rel err " << format_g17(err);
        return err < 1e-6;
    });

    suite.run("density: total mass within [1/(nu c), c/nu]", [&](std::ostream& out) {
        const double lo = 1.0 / (eco.params.nu * eco.params.c_hat);
        const double hi = eco.params.c_hat / eco.params.nu;
        out << "mass " << format_g17(density.total_mass);
        return density.total_mass >= lo - 1e-9 && density.total_mass <= hi + 1e-9;
    });

    suite.run("density: support inside [min(a1,k*), max(a2,k*)]", [&](std::ostream&) {
        for (std::size_t i = 0; i < density.k.size(); ++i) {
            if (density.k[i] < density.support_lo - 1e-12 ||
                density.k[i] > density.support_hi + 1e-12) {
                return false;
            }
            if (density.m[i] > 0.0 &&
                (density.k[i] < density.support_lo || density.k[i] > density.support_hi)) {
                return false;
            }
        }
        return true;
    });

    suite.run("density: no atom at kappa* (window halving)", [&](std::ostream& out) {
        GridSpec half = sc.grid;
        half.h_sing_rel = 0.5 * sc.grid.h_sing_rel;
        const DensitySolution d2 = solve_density(eco, value, half);
        out << "mass shift " << format_g17(std::abs(d2.total_mass - density.total_mass));
        return std::abs(d2.total_mass - density.total_mass) < 1e-6;
    });

    suite.run("density: positive one-sided drift slopes", [&](std::ostream& out) {
        const SlopePair th = drift_slopes(value);
        out << "theta " << format_g17(th.left) << " / " << format_g17(th.right);
        return th.left > 0.0 && th.right > 0.0;
    });

    return suite.results;
}

}  // namespace firmmfg
