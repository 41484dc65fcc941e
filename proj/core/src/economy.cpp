#include "firmmfg/economy.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "firmmfg/errors.hpp"
#include "firmmfg/numerics.hpp"

namespace firmmfg {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void check_prices(std::span<const double> w, int d) {
    if (static_cast<int>(w.size()) != d) {
        throw DomainError("price vector has " + std::to_string(w.size()) +
                          " components, economy has " + std::to_string(d) + " inputs");
    }
    for (double wi : w) {
        if (!(wi > 0.0)) throw DomainError("price components must be positive");
    }
}

// ---------------------------------------------------------------------------
// Utility
// ---------------------------------------------------------------------------

double Utility::value(double c) const {
    if (!(c > 0.0)) throw DomainError("utility: consumption must be positive");
    return kind == Kind::Log ? std::log(c) : std::pow(c, b) / b;
}

double Utility::marginal(double c) const {
    if (!(c > 0.0)) throw DomainError("utility: consumption must be positive");
    return kind == Kind::Log ? 1.0 / c : std::pow(c, b - 1.0);
}

double Utility::curvature(double c) const {
    if (!(c > 0.0)) throw DomainError("utility: consumption must be positive");
    return kind == Kind::Log ? -1.0 / (c * c) : (b - 1.0) * std::pow(c, b - 2.0);
}

double Utility::marginal_inverse(double q) const {
    if (!(q > 0.0)) throw DomainError("utility: costate must be positive");
    return kind == Kind::Log ? 1.0 / q : std::pow(q, 1.0 / (b - 1.0));
}

double Utility::conjugate(double q) const {
    if (!(q > 0.0)) throw DomainError("utility: costate must be positive");
    if (kind == Kind::Log) return -std::log(q) - 1.0;
    return (1.0 / b - 1.0) * std::pow(q, b / (b - 1.0));
}

double Utility::inf_value() const {
    return kind == Kind::Log ? -std::numeric_limits<double>::infinity() : 0.0;
}

// ---------------------------------------------------------------------------
// Production
// ---------------------------------------------------------------------------

double CobbDouglas::beta_sum() const {
    return std::accumulate(beta.begin(), beta.end(), 0.0);
}

double CobbDouglas::price_aggregate(std::span<const double> w) const {
    double g = 1.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        g *= std::pow(beta[i] / w[i], beta[i]);
    }
    return g;
}

int Production::inputs() const {
    if (const auto* cd = std::get_if<CobbDouglas>(&fn)) {
        return static_cast<int>(cd->beta.size());
    }
    return static_cast<int>(std::get<Ces>(fn).beta.size());
}

double Production::ces_multiplier(double k, std::span<const double> w) const {
    const auto* ces = std::get_if<Ces>(&fn);
    if (!ces) throw DomainError("ces_multiplier: production is not CES");
    check_prices(w, inputs());
    if (k < 0.0) throw DomainError("ces_multiplier: capital must be >= 0");

    const double ka = k > 0.0 ? std::pow(k, ces->alpha) : 0.0;
    // lhs(lambda) is continuous, strictly increasing, 0 -> infinity
    auto lhs = [&](double lam) {
        double s = ka;
        for (std::size_t j = 0; j < ces->beta.size(); ++j) {
            const double bj = ces->beta[j];
            s += std::pow(lam * bj / w[j], bj / (1.0 - bj));
        }
        return lam * std::pow(s, 1.0 - ces->gamma);
    };
    auto res = [&](double lam) { return lhs(lam) - ces->gamma; };

    double lo = 1.0, hi = 1.0;
    if (res(1.0) < 0.0) {
        if (!num::expand_bracket(res, lo, hi, /*grow_up=*/true, 200)) {
            throw ConvergenceError("ces_multiplier: bracket expansion failed");
        }
    } else {
        if (!num::expand_bracket(res, lo, hi, /*grow_up=*/false, 200)) {
            throw ConvergenceError("ces_multiplier: bracket expansion failed");
        }
    }
    auto dres = [&](double lam) {
        const double h = std::max(1e-8 * lam, 1e-14);
        return (res(lam + h) - res(lam - h)) / (2.0 * h);
    };
    num::RootOptions opt;
    opt.f_tol = 1e-13 * std::max(1.0, ces->gamma);
    const double lam = num::newton_bisect(res, dres, lo, hi, opt);
    return lam;
}

double Production::gross(double k, std::span<const double> w) const {
    check_prices(w, inputs());
    if (k < 0.0) throw DomainError("gross: capital must be >= 0");
    if (const auto* cd = std::get_if<CobbDouglas>(&fn)) {
        if (k == 0.0) return 0.0;
        const double bs = cd->beta_sum();
        const double base = cd->A * std::pow(k, cd->alpha) * cd->price_aggregate(w);
        return (1.0 - bs) * std::pow(base, 1.0 / (1.0 - bs));
    }
    const auto& ces = std::get<Ces>(fn);
    const double lam = ces_multiplier(k, w);
    double s = k > 0.0 ? std::pow(k, ces.alpha) : 0.0;
    double cost = 0.0;
    for (std::size_t j = 0; j < ces.beta.size(); ++j) {
        const double bj = ces.beta[j];
        s += std::pow(lam * bj / w[j], bj / (1.0 - bj));
        cost += w[j] * std::pow(lam * bj / w[j], 1.0 / (1.0 - bj));
    }
    return std::pow(s, ces.gamma) - cost;
}

double Production::gross_dk(double k, std::span<const double> w) const {
    check_prices(w, inputs());
    if (!(k > 0.0)) throw DomainError("gross_dk: capital must be positive");
    if (const auto* cd = std::get_if<CobbDouglas>(&fn)) {
        const double bs = cd->beta_sum();
        const double bw = std::pow(cd->A * cd->price_aggregate(w), 1.0 / (1.0 - bs));
        return cd->alpha * bw * std::pow(k, -(1.0 - cd->alpha - bs) / (1.0 - bs));
    }
    const auto& ces = std::get<Ces>(fn);
    const double lam = ces_multiplier(k, w);
    return ces.alpha * lam * std::pow(k, ces.alpha - 1.0);
}

std::vector<double> Production::input_demand(double k, std::span<const double> w) const {
    check_prices(w, inputs());
    if (k < 0.0) throw DomainError("input_demand: capital must be >= 0");
    std::vector<double> l(w.size(), 0.0);
    if (const auto* cd = std::get_if<CobbDouglas>(&fn)) {
        if (k == 0.0) return l;
        const double bs = cd->beta_sum();
        const double base = std::pow(cd->A * std::pow(k, cd->alpha) * cd->price_aggregate(w),
                                     1.0 / (1.0 - bs));
        for (std::size_t i = 0; i < l.size(); ++i) {
            l[i] = base * cd->beta[i] / w[i];
        }
        return l;
    }
    const auto& ces = std::get<Ces>(fn);
    const double lam = ces_multiplier(k, w);
    for (std::size_t i = 0; i < l.size(); ++i) {
        l[i] = std::pow(lam * ces.beta[i] / w[i], 1.0 / (1.0 - ces.beta[i]));
    }
    return l;
}

// ---------------------------------------------------------------------------
// Entry
// ---------------------------------------------------------------------------

double EntrySpec::hat(double k) const {
    if (k <= a1 || k >= a2) return 0.0;
    const double width = a2 - a1;
    const double mid = 0.5 * (a1 + a2);
    return (1.0 + std::cos(2.0 * kPi * (k - mid) / width)) / width;
}

double EntrySpec::rate(double k, double v, double c_hat) const {
    const double h = hat(k);
    if (h == 0.0 || mode == Mode::Constant) return h;
    // midpoint-plus-scaled-sigmoid modulation, range [1/c_hat, c_hat]
    const double lo = 1.0 / c_hat;
    const double sig = 1.0 / (1.0 + std::exp(-v / v_scale));
    return h * (lo + (c_hat - lo) * sig);
}

// ---------------------------------------------------------------------------
// Supply
// ---------------------------------------------------------------------------

int Supply::inputs() const {
    if (const auto* sep = std::get_if<SeparableSupply>(&fn)) {
        return static_cast<int>(sep->intercept.size());
    }
    return std::get<SoftmaxSupply>(fn).d;
}

std::vector<double> Supply::value(std::span<const double> w) const {
    const int d = inputs();
    if (static_cast<int>(w.size()) != d) throw DomainError("supply: dimension mismatch");
    std::vector<double> s(w.size(), 0.0);
    if (const auto* sep = std::get_if<SeparableSupply>(&fn)) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = sep->intercept[i] + sep->slope[i] * w[i];
        }
        return s;
    }
    const auto& sm = std::get<SoftmaxSupply>(fn);
    double mx = sm.w0;
    for (double wi : w) mx = std::max(mx, wi);
    double z = std::exp((sm.w0 - mx) / sm.sigma);
    for (double wi : w) z += std::exp((wi - mx) / sm.sigma);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = std::exp((w[i] - mx) / sm.sigma) / z;
    }
    return s;
}

double Supply::potential(std::span<const double> w) const {
    const int d = inputs();
    if (static_cast<int>(w.size()) != d) throw DomainError("supply: dimension mismatch");
    if (const auto* sep = std::get_if<SeparableSupply>(&fn)) {
        double phi = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            phi += sep->intercept[i] * w[i] + 0.5 * sep->slope[i] * w[i] * w[i];
        }
        return phi;
    }
    const auto& sm = std::get<SoftmaxSupply>(fn);
    double mx = sm.w0;
    for (double wi : w) mx = std::max(mx, wi);
    double z = std::exp((sm.w0 - mx) / sm.sigma);
    for (double wi : w) z += std::exp((wi - mx) / sm.sigma);
    return mx + sm.sigma * std::log(z);
}

// ---------------------------------------------------------------------------
// Economy
// ---------------------------------------------------------------------------

double Economy::net(double k, std::span<const double> w) const {
    return production.gross(k, w) - params.delta * k;
}

double Economy::net_dk(double k, std::span<const double> w) const {
    return production.gross_dk(k, w) - params.delta;
}

double Economy::kappa_star(std::span<const double> w) const {
    check_prices(w, inputs());
    const double target = params.rho + params.delta;  // dg/dk(kappa*) = rho + delta

    if (const auto* cd = std::get_if<CobbDouglas>(&production.fn)) {
        const double bs = cd->beta_sum();
        const double k = std::pow(cd->alpha / target, (1.0 - bs) / (1.0 - cd->alpha - bs)) *
                         std::pow(cd->A * cd->price_aggregate(w),
                                  1.0 / (1.0 - cd->alpha - bs));
        return k;
    }

    // CES: dg/dk is strictly decreasing from +inf to 0
    auto res = [&](double k) { return production.gross_dk(k, w) - target; };
    double lo = 1.0, hi = 1.0;
    const double r1 = res(1.0);
    bool ok = (r1 >= 0.0) ? num::expand_bracket(res, lo, hi, /*grow_up=*/true, 200)
                          : num::expand_bracket(res, lo, hi, /*grow_up=*/false, 200);
    if (!ok) throw ConvergenceError("kappa_star: bracketing failed");
    auto dres = [&](double k) {
        const double h = std::max(1e-7 * k, 1e-14);
        return (res(k + h) - res(k - h)) / (2.0 * h);
    };
    num::RootOptions opt;
    opt.f_tol = 1e-11 * std::max(1.0, target);
    return num::newton_bisect(res, dres, lo, hi, opt);
}

double Economy::break_even(std::span<const double> w) const {
    if (!(params.delta > 0.0)) {
        throw DomainError("break_even: defined only for delta > 0");
    }
    const double ks = kappa_star(w);
    auto f = [&](double k) { return net(k, w); };
    double lo = ks, hi = 2.0 * ks;  // f(kappa*) > 0, f -> -inf
    if (!num::expand_bracket(f, lo, hi, /*grow_up=*/true, 200)) {
        throw ConvergenceError("break_even: bracketing failed");
    }
    auto df = [&](double k) { return net_dk(k, w); };
    num::RootOptions opt;
    opt.f_tol = 1e-13;
    return num::newton_bisect(f, df, lo, hi, opt);
}

}  // namespace firmmfg
