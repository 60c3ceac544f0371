#pragma once

// Independent charge-conservation solver used as a numerical oracle. Instead
// of the closed-form weighted average it finds the settled node voltage by
// bisection on the net-charge function, then derives the supply charge.

#include <algorithm>
#include <span>
#include <vector>

namespace oracle {

// Net charge flowing into the shared node at voltage v: c_par * v plus
// sum of c_i * (v - v_x_i). Monotone increasing in v, so bisection applies.
inline double net_charge(double v, std::span<const double> v_x, std::span<const double> caps,
                         double c_par) {
    double q = c_par * v;
    for (std::size_t i = 0; i < v_x.size(); ++i)
        q += caps[i] * (v - v_x[i]);
    return q;
}

inline double settle_voltage(std::span<const double> v_x, std::span<const double> caps,
                             double c_par) {
    double lo = 0.0, hi = 0.0;
    for (double v : v_x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (net_charge(mid, v_x, caps, c_par) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Charge drawn from the v_dd supply while charging a column of n equal caps,
// m of them tied to v_dd and the rest to ground, expressed as an equivalent
// capacitance Q / v_dd.
inline double supply_ceq(int m, int n, double c, double v_dd) {
    std::vector<double> v_x(static_cast<std::size_t>(n), 0.0);
    std::vector<double> caps(static_cast<std::size_t>(n), c);
    for (int i = 0; i < m; ++i)
        v_x[static_cast<std::size_t>(i)] = v_dd;
    const double v = settle_voltage(v_x, caps, 0.0);
    return m * c * (v_dd - v) / v_dd;
}

} // namespace oracle
