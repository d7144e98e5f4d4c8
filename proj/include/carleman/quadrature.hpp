#pragma once

#include <algorithm>
#include <limits>
#include <utility>

#include "carleman/numeric.hpp"

namespace carleman {

struct QuadratureNonConvergence : ComputationError {
    using ComputationError::ComputationError;
};

namespace detail {

// 16-point Gauss-Legendre rule on [-1, 1], exact through degree 31.
inline constexpr double kGL16Node[8] = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542,
};
inline constexpr double kGL16Weight[8] = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806,
};

}  // namespace detail

template <class F>
double gl16(F&& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    StableSum s;
    for (int i = 0; i < 8; ++i) {
        double dx = half * detail::kGL16Node[i];
        s.add(detail::kGL16Weight[i] * (f(mid - dx) + f(mid + dx)));
    }
    return s.value() * half;
}

struct QuadratureResult {
    double value = 0.0;
    double err = 0.0;  // accumulated local error estimates of accepted panels
};

namespace detail {

template <class F>
void adapt(F& f, double a, double b, double budget, int depth, int depth_cap,
           StableSum& value, StableSum& err) {
    double whole = gl16(f, a, b);
    double m = 0.5 * (a + b);
    double refined = gl16(f, a, m) + gl16(f, m, b);
    double e = std::abs(whole - refined);
    // Roundoff floor: below ~20 ulp of the panel value the difference between
    // the two rules is noise and refinement cannot reduce it.  Width floor:
    // once the panel is a few ulp wide the nodes coincide.  Without both,
    // budgets that halve past these floors would force a full binary tree
    // down to depth_cap.
    bool at_floor = e <= 4e-15 * std::abs(refined) ||
                    (b - a) <= 8.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(a), std::abs(b));
    if (e <= budget || at_floor || depth >= depth_cap) {
        value.add(refined);
        err.add(e);
        return;
    }
    adapt(f, a, m, 0.5 * budget, depth + 1, depth_cap, value, err);
    adapt(f, m, b, 0.5 * budget, depth + 1, depth_cap, value, err);
}

}  // namespace detail

// Adaptive bisection around gl16.  Panels are accepted when the refinement
// step moves the value by less than the local absolute budget; bisection
// produces the geometric mesh the endpoint singularities of |poly|^p need.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_budget,
                                    int depth_cap = 60) {
    QuadratureResult r;
    if (!(a < b)) return r;
    StableSum value, err;
    detail::adapt(f, a, b, abs_budget, 0, depth_cap, value, err);
    r.value = value.value();
    r.err = err.value();
    return r;
}

}  // namespace carleman
