#include "firmmfg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "firmmfg/errors.hpp"

namespace firmmfg::num {

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

double newton_bisect(const std::function<double(double)>& f,
                     const std::function<double(double)>& df,
                     double lo, double hi, const RootOptions& opt) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw InternalError("newton_bisect: bracket does not straddle a root");
    }
    // orient so f(lo) < 0
    if (flo > 0.0) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    double x = 0.5 * (lo + hi);
    double fx = f(x);
    for (int it = 0; it < opt.max_iter; ++it) {
        if (std::abs(fx) <= opt.f_tol) return x;
        if (fx < 0.0) lo = x; else hi = x;
        const double width = std::abs(hi - lo);
        if (opt.x_tol > 0.0 && width <= opt.x_tol) return x;
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) return x;

        double x_next;
        const double dfx = df(x);
        if (dfx != 0.0) {
            x_next = x - fx / dfx;
            const double a = std::min(lo, hi), b = std::max(lo, hi);
            if (!(x_next > a && x_next < b)) x_next = 0.5 * (lo + hi);
        } else {
            x_next = 0.5 * (lo + hi);
        }
        x = x_next;
        fx = f(x);
    }
    return x;
}

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double x_tol, int max_iter) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw InternalError("bisect: bracket does not straddle a root");
    }
    for (int it = 0; it < max_iter && std::abs(hi - lo) > x_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool expand_bracket(const std::function<double(double)>& f, double& lo, double& hi,
                    bool grow_up, int max_doublings) {
    double flo = f(lo);
    double fhi = f(hi);
    for (int i = 0; i < max_doublings; ++i) {
        if (std::signbit(flo) != std::signbit(fhi) || flo == 0.0 || fhi == 0.0) return true;
        if (grow_up) {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = f(hi);
        } else {
            hi = lo;
            fhi = flo;
            lo *= 0.5;
            flo = f(lo);
        }
    }
    return std::signbit(flo) != std::signbit(fhi);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

// Gauss-Legendre abscissae/weights on [-1, 1].
const double kG3x[] = {0.0, 0.7745966692414834};
const double kG3w[] = {0.8888888888888888, 0.5555555555555556};

const double kG7x[] = {0.0,
                       0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
const double kG7w[] = {0.4179591836734694,
                       0.3818300505051189, 0.2797053914892767, 0.1294849661688697};

const double kG15x[] = {0.0,
                        0.2011940939974345, 0.3941513470775634, 0.5709721726085388,
                        0.7244177313601701, 0.8482065834104272, 0.9372733924007060,
                        0.9879925180204854};
const double kG15w[] = {0.2025782419255613,
                        0.1984314853271116, 0.1861610000155622, 0.1662692058169939,
                        0.1395706779261543, 0.1071592204671719, 0.0703660474881081,
                        0.0307532419961173};

}  // namespace

void gauss_legendre(int n, double a, double b,
                    std::vector<double>& x, std::vector<double>& w) {
    const double* gx;
    const double* gw;
    int half;
    switch (n) {
        case 3:  gx = kG3x;  gw = kG3w;  half = 2; break;
        case 7:  gx = kG7x;  gw = kG7w;  half = 4; break;
        case 15: gx = kG15x; gw = kG15w; half = 8; break;
        default: throw InternalError("gauss_legendre: unsupported order");
    }
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    x.clear();
    w.clear();
    x.push_back(mid);
    w.push_back(gw[0] * hw);
    for (int i = 1; i < half; ++i) {
        x.push_back(mid - hw * gx[i]);
        w.push_back(gw[i] * hw);
        x.push_back(mid + hw * gx[i]);
        w.push_back(gw[i] * hw);
    }
}

double gauss_panel(const std::function<double(double)>& f, double a, double b, int n) {
    std::vector<double> x, w;
    gauss_legendre(n, a, b, x, w);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
    return s;
}

double gauss_composite(const std::function<double(double)>& f,
                       std::span<const double> grid, int n) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        s += gauss_panel(f, grid[i], grid[i + 1], n);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)
// ---------------------------------------------------------------------------

namespace {
// Butcher tableau
const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
const double a21 = 1.0 / 5;
const double a31 = 3.0 / 40, a32 = 9.0 / 40;
const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
             a54 = -212.0 / 729;
const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
             a64 = 49.0 / 176, a65 = -5103.0 / 18656;
const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
             b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order weights (for the error estimate)
const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
             e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace

double integrate_ode(const std::function<double(double, double)>& f,
                     double x0, double y0, double x1,
                     const std::function<bool(double, double)>& admissible,
                     const OdeOptions& opt) {
    return integrate_ode_observed(f, x0, y0, x1, admissible, opt, nullptr);
}

double integrate_ode_observed(const std::function<double(double, double)>& f,
                              double x0, double y0, double x1,
                              const std::function<bool(double, double)>& admissible,
                              const OdeOptions& opt, const StepObserver& observe) {
    if (x0 == x1) return y0;
    const double dir = (x1 > x0) ? 1.0 : -1.0;
    const double span = std::abs(x1 - x0);

    double x = x0, y = y0;
    if (!admissible(x, y)) throw InternalError("integrate_ode: inadmissible start");

    double k1 = f(x, y);
    double h = opt.initial_step > 0.0 ? opt.initial_step : span / 64.0;
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

    const double h_floor = std::max(span, std::abs(x0)) *
                           16.0 * std::numeric_limits<double>::epsilon();

    for (int step = 0; step < opt.max_steps; ++step) {
        if (dir * (x1 - x) <= 0.0) return y;
        h = std::min(h, std::abs(x1 - x));
        const double hs = dir * h;

        bool ok = true;
        double k2 = 0, k3 = 0, k4 = 0, k5 = 0, k6 = 0, k7 = 0, y5 = 0;
        // every stage point must stay admissible, otherwise retry smaller
        auto stage = [&](double dx, double yv, double& k) {
            if (!admissible(x + dx, yv)) return false;
            k = f(x + dx, yv);
            return true;
        };
        ok = ok && stage(c2 * hs, y + hs * (a21 * k1), k2);
        ok = ok && stage(c3 * hs, y + hs * (a31 * k1 + a32 * k2), k3);
        ok = ok && stage(c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3), k4);
        ok = ok && stage(c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
        ok = ok && stage(hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        if (ok) {
            y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            ok = stage(hs, y5, k7);
        }
        if (!ok) {
            h *= 0.5;
            if (h < h_floor) {
                throw ConvergenceError("integrate_ode: step collapsed at domain boundary");
            }
            continue;
        }

        const double err = std::abs(hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 +
                                          e6 * k6 + e7 * k7));
        const double tol = opt.abs_tol + opt.rel_tol * std::max(std::abs(y), std::abs(y5));
        if (err <= tol) {
            if (observe) observe(x, y, k1, x + hs, y5, k7);
            x += hs;
            y = y5;
            k1 = k7;  // FSAL
            const double grow = (err > 0.0)
                                    ? std::min(5.0, 0.9 * std::pow(tol / err, 0.2))
                                    : 5.0;
            h *= grow;
            if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
        } else {
            h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
            if (h < h_floor) {
                throw ConvergenceError("integrate_ode: step size underflow");
            }
        }
    }
    throw ConvergenceError("integrate_ode: step budget exceeded");
}

// ---------------------------------------------------------------------------
// Pchip
// ---------------------------------------------------------------------------

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InternalError("Pchip: need >= 2 nodes");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (h[i] <= 0.0) throw InternalError("Pchip: x not strictly increasing");
        s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
        d_[0] = d_[1] = s[0];
        return;
    }
    // Fritsch-Carlson: harmonic-mean interior slopes, shape-preserving ends
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) d = 0.0;
        else if (s0 * s1 <= 0.0 && std::abs(d) > 3.0 * std::abs(s0)) d = 3.0 * s0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], s[0], s[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
}

std::size_t Pchip::cell(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
}

double Pchip::operator()(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double Pchip::derivative(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double g00 = (6 * t2 - 6 * t) / h;
    const double g10 = 3 * t2 - 4 * t + 1;
    const double g01 = (-6 * t2 + 6 * t) / h;
    const double g11 = 3 * t2 - 2 * t;
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
    // 1 - u01() is in (0, 1], so the log is finite
    return -std::log(1.0 - u01()) / rate;
}

}  // namespace firmmfg::num
