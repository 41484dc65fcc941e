#pragma once

#include <span>
#include <variant>
#include <vector>

namespace firmmfg {

// All types in this header are immutable after construction and every
// operation is a pure function of its inputs; concurrent evaluation from
// multiple threads needs no synchronization.

// ---------------------------------------------------------------------------
// Utility (CRRA family)
// ---------------------------------------------------------------------------

struct Utility {
    enum class Kind { Log, Power };
    Kind kind = Kind::Log;
    double b = 0.5;  // Power exponent, in (0, 1)

    double value(double c) const;        // U(c); rejects c <= 0
    double marginal(double c) const;     // U'(c)
    double curvature(double c) const;    // U''(c) < 0
    double marginal_inverse(double q) const;  // c*(q), the maximizer of U(c) - c q
    double conjugate(double q) const;    // sup_c { U(c) - c q }
    double inf_value() const;            // lim_{c -> 0+} U(c)
};

// ---------------------------------------------------------------------------
// Production
// ---------------------------------------------------------------------------

struct CobbDouglas {
    double A = 1.0;       // total factor productivity
    double alpha = 0.3;   // capital elasticity
    std::vector<double> beta;  // input elasticities, each in (0,1), sum < 1 - alpha

    double beta_sum() const;
    // price aggregate prod_i (beta_i / w_i)^{beta_i}
    double price_aggregate(std::span<const double> w) const;
};

struct Ces {
    double alpha = 0.5;
    double gamma = 0.5;
    std::vector<double> beta;  // each in (0,1)
};

struct Production {
    std::variant<CobbDouglas, Ces> fn;

    int inputs() const;
    bool is_cobb_douglas() const { return std::holds_alternative<CobbDouglas>(fn); }

    // g(k,w) = sup_l F(k,l) - w.l  (>= 0)
    double gross(double k, std::span<const double> w) const;
    // dg/dk, analytic (envelope theorem for CES); requires k > 0
    double gross_dk(double k, std::span<const double> w) const;
    // l*(k,w), the unique maximizer; componentwise >= 0
    std::vector<double> input_demand(double k, std::span<const double> w) const;
    // CES multiplier lambda(k,w) > 0; residual of its defining equation < 1e-12
    double ces_multiplier(double k, std::span<const double> w) const;
};

// ---------------------------------------------------------------------------
// Entry / exit
// ---------------------------------------------------------------------------

struct EntrySpec {
    enum class Mode { Constant, BoundedModulation };

    double a1 = 0.1;  // support [a1, a2], 0 < a1 < a2
    double a2 = 0.3;
    Mode mode = Mode::Constant;
    double v_scale = 1.0;

    // raised-cosine bump, unit mass, compact support in (0, inf)
    double hat(double k) const;
    // eta(k, v); bounded by [hat(k)/c_hat, c_hat*hat(k)]
    double rate(double k, double v, double c_hat) const;
};

// ---------------------------------------------------------------------------
// Input supply
// ---------------------------------------------------------------------------

// Per-input affine curves S_i(t) = intercept_i + slope_i * t (both >= 0).
struct SeparableSupply {
    std::vector<double> intercept;
    std::vector<double> slope;
};

// S_i(w) = exp(w_i/sigma) / sum_{j=0..d} exp(w_j/sigma), index 0 carrying the
// reserve price w0.
struct SoftmaxSupply {
    double sigma = 0.25;
    double w0 = 0.5;
    int d = 1;
};

struct Supply {
    std::variant<SeparableSupply, SoftmaxSupply> fn;

    int inputs() const;
    std::vector<double> value(std::span<const double> w) const;  // S(w) = grad Phi
    double potential(std::span<const double> w) const;           // Phi(w) >= 0
};

// ---------------------------------------------------------------------------
// Assembled economy
// ---------------------------------------------------------------------------

struct EconomyParams {
    double rho = 0.1;    // discount rate, > 0
    double delta = 0.0;  // depreciation, >= 0
    double nu = 0.5;     // extinction rate, > 0
    double c_hat = 2.0;  // entry-bound constant, >= 1
};

struct Economy {
    Utility utility;
    Production production;
    EconomyParams params;
    EntrySpec entry;
    Supply supply;

    int inputs() const { return production.inputs(); }

    double net(double k, std::span<const double> w) const;     // f = g - delta k
    double net_dk(double k, std::span<const double> w) const;  // df/dk, analytic

    // golden-rule capital: the unique root of df/dk = rho
    double kappa_star(std::span<const double> w) const;
    // break-even capital: the unique root of f = 0 in (kappa*, inf); delta > 0 only
    double break_even(std::span<const double> w) const;

    double entry_rate(double k, double v) const {
        return entry.rate(k, v, params.c_hat);
    }
};

void check_prices(std::span<const double> w, int d);

}  // namespace firmmfg
