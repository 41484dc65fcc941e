#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace firmmfg::num {

// ---------------------------------------------------------------------------
// Scalar root finding
// ---------------------------------------------------------------------------

struct RootOptions {
    double x_tol = 0.0;        // absolute interval width to stop at (0 = off)
    double f_tol = 1e-14;      // |f| stopping tolerance
    int max_iter = 200;
};

// Safeguarded Newton: Newton steps clipped to a maintained sign-change
// bracket [lo, hi], bisection whenever the step leaves it or stalls.
// f(lo) and f(hi) must have opposite (or zero) signs.
double newton_bisect(const std::function<double(double)>& f,
                     const std::function<double(double)>& df,
                     double lo, double hi, const RootOptions& opt = {});

// Plain bisection on a sign-change bracket.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double x_tol, int max_iter = 200);

// Expands [lo, hi] geometrically (factor 2) until f changes sign across it.
// `grow_up` expands hi, otherwise lo shrinks toward 0 (positive domain).
// Returns false after max_doublings.
bool expand_bracket(const std::function<double(double)>& f, double& lo, double& hi,
                    bool grow_up, int max_doublings = 200);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

// Nodes/weights of an n-point Gauss-Legendre rule mapped to [a, b].
// Supported n: 3, 7, 15.
void gauss_legendre(int n, double a, double b,
                    std::vector<double>& x, std::vector<double>& w);

// \int_a^b f, single n-point Gauss panel.
double gauss_panel(const std::function<double(double)>& f, double a, double b, int n = 7);

// Composite Gauss over the cells of a strictly increasing grid.
double gauss_composite(const std::function<double(double)>& f,
                       std::span<const double> grid, int n = 7);

// ---------------------------------------------------------------------------
// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)), scalar state
// ---------------------------------------------------------------------------

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 0.0;  // 0 = auto
    double max_step = 0.0;      // 0 = unbounded
    int max_steps = 2000000;
};

// Integrates y' = f(x, y) from (x0, y0) to x1 (x1 may be < x0).
// `admissible(x, y)` guards the domain: a trial stage or step endpoint
// outside it causes the step to be halved rather than accepted.
// Returns y(x1).
double integrate_ode(const std::function<double(double, double)>& f,
                     double x0, double y0, double x1,
                     const std::function<bool(double, double)>& admissible,
                     const OdeOptions& opt = {});

// called once per accepted step with the step endpoints and slopes
using StepObserver =
    std::function<void(double x0, double y0, double f0, double x1, double y1, double f1)>;

double integrate_ode_observed(const std::function<double(double, double)>& f,
                              double x0, double y0, double x1,
                              const std::function<bool(double, double)>& admissible,
                              const OdeOptions& opt, const StepObserver& observe);

// ---------------------------------------------------------------------------
// Monotone cubic interpolation (Fritsch-Carlson)
// ---------------------------------------------------------------------------

class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    std::size_t cell(double x) const;
    std::vector<double> x_, y_, d_;  // d_: node derivatives
};

// ---------------------------------------------------------------------------
// Deterministic RNG (xoshiro256++, splitmix64-seeded)
// ---------------------------------------------------------------------------

// Output sequence is fixed by (seed, stream) alone so per-firm streams are
// reproducible regardless of thread scheduling.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double u01();                       // uniform in [0, 1)
    double exponential(double rate);    // mean 1/rate

private:
    std::uint64_t s_[4];
};

inline constexpr const char* kRngName = "xoshiro256++(splitmix64 seeded)";

}  // namespace firmmfg::num
