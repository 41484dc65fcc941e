#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "firmmfg/economy.hpp"

namespace firmmfg::test {

// Reference Cobb-Douglas economy: log utility, one input, delta = 0.
inline Economy cobb_douglas_economy(double delta = 0.0) {
    Economy eco;
    eco.utility = {Utility::Kind::Log, 0.5};
    eco.production.fn = CobbDouglas{1.0, 0.3, {0.4}};
    eco.params = {0.25, delta, 0.3, 2.0};
    eco.entry = {0.08, 0.22, EntrySpec::Mode::Constant, 1.0};
    eco.supply.fn = SeparableSupply{{0.5}, {0.0}};
    return eco;
}

inline Economy ces_economy(double delta = 0.0) {
    Economy eco;
    eco.utility = {Utility::Kind::Power, 0.5};
    eco.production.fn = Ces{0.45, 0.55, {0.35, 0.3}};
    eco.params = {0.2, delta, 0.4, 2.0};
    eco.entry = {0.05, 0.15, EntrySpec::Mode::Constant, 1.0};
    eco.supply.fn = SoftmaxSupply{0.25, 0.5, 2};
    return eco;
}

// Raw production functions for oracle use.
inline double cobb_douglas_F(const CobbDouglas& cd, double k, const std::vector<double>& l) {
    double out = cd.A * std::pow(k, cd.alpha);
    for (std::size_t i = 0; i < l.size(); ++i) out *= std::pow(l[i], cd.beta[i]);
    return out;
}

inline double ces_F(const Ces& c, double k, const std::vector<double>& l) {
    double s = std::pow(k, c.alpha);
    for (std::size_t i = 0; i < l.size(); ++i) s += std::pow(l[i], c.beta[i]);
    return std::pow(s, c.gamma);
}

// sup over a 1-d grid of step `step` on (0, hi]
inline double grid_sup(const std::function<double(double)>& f, double hi, double step) {
    double best = -1e300;
    for (double x = step; x <= hi; x += step) best = std::max(best, f(x));
    return best;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace firmmfg::test
