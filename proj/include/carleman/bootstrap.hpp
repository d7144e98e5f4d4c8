#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "carleman/numeric.hpp"
#include "carleman/piecewise.hpp"
#include "carleman/polynomial.hpp"
#include "carleman/quadrature.hpp"
#include "carleman/weights.hpp"

namespace carleman {

struct DivergentKappa : ComputationError {
    using ComputationError::ComputationError;
};

// Lq = q' - 2xq, the polynomial part of (q e^{-x^2})'.
inline Polynomial hermite_ladder(const Polynomial& q) {
    const auto& c = q.coeffs();
    if (c.empty()) return {};
    std::vector<double> out(c.size() + 1, 0.0);
    for (size_t j = 1; j < c.size(); ++j) out[j - 1] += static_cast<double>(j) * c[j];
    for (size_t j = 0; j < c.size(); ++j) out[j + 1] -= 2.0 * c[j];
    return Polynomial(std::move(out));
}

// f(x) = q(x) e^{-x^2}; derivatives stay in the class via the ladder operator.
class HermiteFunction {
  public:
    HermiteFunction() = default;
    explicit HermiteFunction(Polynomial q) : q_(std::move(q)) {}

    const Polynomial& q() const { return q_; }
    bool is_zero() const { return q_.is_zero(); }
    int degree() const { return q_.is_zero() ? 0 : static_cast<int>(q_.coeffs().size()) - 1; }

    double operator()(double x) const { return q_(x) * std::exp(-x * x); }
    HermiteFunction derivative() const { return HermiteFunction(hermite_ladder(q_)); }

  private:
    Polynomial q_;
};

namespace detail {

// Radius beyond which |q(x)| e^{-x^2} is certifiably below `floor`: outside
// [-R, R] each term m x^j e^{-x^2} is decreasing once R^2 > j/2, and the sum
// of the d+1 terms stays under m (d+1) R^d e^{-R^2}.
inline double hermite_tail_radius(const Polynomial& q, double floor_abs) {
    if (q.is_zero()) return 1.0;
    double d = static_cast<double>(q.coeffs().size()) - 1.0;
    double m = std::max(q.max_abs_coeff(), 1e-300);
    double r = std::sqrt(0.5 * d) + 2.0;
    auto log_tail = [&](double R) {
        return std::log(m * (d + 1.0)) + d * std::log(R) - R * R;
    };
    while (log_tail(r) >= std::log(floor_abs) && r < 1e4) r += 1.0;
    return r;
}

}  // namespace detail

// sup over the real line of |q(x)| e^{-x^2}, located through the critical
// points (roots of the ladder polynomial) inside the tail radius.
inline double hermite_sup(const HermiteFunction& f) {
    if (f.is_zero()) return 0.0;
    double r = detail::hermite_tail_radius(f.q(), 1e-14);
    double best = std::max(std::abs(f(-r)), std::abs(f(r)));
    best = std::max(best, std::abs(f(0.0)));
    for (double x : real_roots_in(hermite_ladder(f.q()), -r, r))
        best = std::max(best, std::abs(f(x)));
    return best;
}

struct HermiteSupReport {
    double measured = 0.0;  // located sup of |f^{(n)}|
    double bound = 0.0;     // closed-form coefficient bound
};

// Measured sup of the n-th derivative next to the closed-form bound
// m_q (d+2)_{n+1} ((d+n)/2)^{(d+n)/2} e^{-(d+n)/2}.
inline HermiteSupReport hermite_derivative_sup(const HermiteFunction& f, int n) {
    if (n < 0 || n > 40) throw ConfigError("hermite_derivative_sup: n must lie in [0, 40]");
    if (f.is_zero()) return {0.0, 0.0};
    double mq = f.q().max_abs_coeff();
    double d = static_cast<double>(f.degree());

    HermiteFunction g = f;
    for (int i = 0; i < n; ++i) g = g.derivative();

    double poch = 1.0;
    for (int i = 0; i <= n; ++i) poch *= d + 2.0 + static_cast<double>(i);
    double s = 0.5 * (d + static_cast<double>(n));
    double peak = (s == 0.0) ? 1.0 : std::exp(s * (std::log(s) - 1.0));
    return {hermite_sup(g), mq * poch * peak};
}

// || q e^{-x^2} ||_p^p = int |q|^p e^{-p x^2}.  Sign-constant cells between
// the real roots of q, each half re-expanded at its outer end (same
// conditioning concern as lp_quasinorm), plus a certified Gaussian tail cut.
inline double hermite_lp(const HermiteFunction& f, double p, double tol = 1e-10) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("hermite_lp: p must lie in (0, 1]");
    if (f.is_zero()) return 0.0;
    const Polynomial& q = f.q();
    double d = static_cast<double>(f.degree());
    double m = std::max(q.max_abs_coeff(), 1e-300);

    // choose R so the tail of |q|^p e^{-p x^2} integrates below 1e-16 * m^p
    double r = std::sqrt(0.5 * d / p) + 2.0;
    auto log_tail = [&](double R) {
        return p * (std::log(m * (d + 1.0)) + d * std::log(R)) - p * R * R -
               std::log(p * R);
    };
    while (log_tail(r) >= std::log(1e-16) + p * std::log(m) && r < 1e4) r += 1.0;

    std::vector<double> edges{-r};
    for (double x : real_roots_in(q, -r, r))
        if (x > edges.back()) edges.push_back(x);
    if (edges.back() < r) edges.push_back(r);

    struct Cell {
        Polynomial poly;  // re-expanded; evaluate at t in [0, len]
        double x0;        // real coordinate of t = 0
        double dir;       // +1 rightward, -1 leftward
        double len;
    };
    std::vector<Cell> cells;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        double a = edges[i], b = edges[i + 1], half = 0.5 * (b - a);
        if (!(half > 0.0)) continue;
        cells.push_back({q.taylor_shift(a), a, 1.0, half});
        Polynomial rq = q.taylor_shift(b);
        std::vector<double> rc = rq.coeffs();
        for (size_t j = 1; j < rc.size(); j += 2) rc[j] = -rc[j];
        cells.push_back({Polynomial(std::move(rc)), b, -1.0, half});
    }

    double total_len = 2.0 * r;
    StableSum coarse;
    for (const auto& c : cells)
        coarse.add(gl16(
            [&](double t) {
                double x = c.x0 + c.dir * t;
                return std::pow(std::abs(c.poly(t)), p) * std::exp(-p * x * x);
            },
            0.0, c.len));
    double scale = std::max(std::abs(coarse.value()), 1e-300);
    double budget_total = tol * scale;

    StableSum value, err;
    for (const auto& c : cells) {
        double budget = std::max(budget_total * (c.len / total_len), 1e-300);
        auto res = integrate_adaptive(
            [&](double t) {
                double x = c.x0 + c.dir * t;
                return std::pow(std::abs(c.poly(t)), p) * std::exp(-p * x * x);
            },
            0.0, c.len, budget);
        value.add(res.value);
        err.add(res.err);
    }
    if (err.value() > 50.0 * budget_total)
        throw QuadratureNonConvergence("hermite_lp: adaptive refinement exceeded depth cap");
    return value.value();
}

struct GrowthFit {
    std::vector<double> log_norms;  // log || f^{(n)} ||_p for n in [n_lo, n_hi]
    double sigma = 0.0;             // fitted exponent in || f^{(n)} ||_p ~ C (n!)^sigma
};

// Least-squares fit of log ||f^{(n)}||_p against log n! over an n-window.
inline GrowthFit hermite_lp_growth(const HermiteFunction& f, double p, int n_lo, int n_hi) {
    if (n_lo < 0 || n_hi < n_lo) throw ConfigError("hermite_lp_growth: bad n range");
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("hermite_lp_growth: p must lie in (0,1)");
    GrowthFit out;
    HermiteFunction g = f;
    for (int i = 0; i < n_lo; ++i) g = g.derivative();
    std::vector<double> xs;
    for (int n = n_lo; n <= n_hi; ++n) {
        out.log_norms.push_back(std::log(hermite_lp(g, p)) / p);
        xs.push_back(std::lgamma(static_cast<double>(n) + 1.0));
        g = g.derivative();
    }
    size_t cnt = xs.size();
    if (cnt >= 2) {
        double mx = 0.0, my = 0.0;
        for (size_t i = 0; i < cnt; ++i) {
            mx += xs[i];
            my += out.log_norms[i];
        }
        mx /= static_cast<double>(cnt);
        my /= static_cast<double>(cnt);
        double sxx = 0.0, sxy = 0.0;
        for (size_t i = 0; i < cnt; ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (out.log_norms[i] - my);
        }
        out.sigma = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    return out;
}

struct StepSlack {
    double lhs = 0.0;    // ||f||_inf
    double rhs = 0.0;    // ||f'||_inf^{1-p} ||f'||_p^p
    double slack = 0.0;  // rhs - lhs
    bool pass = false;
};

struct ChainSlack {
    double log_lhs = 0.0;
    double log_rhs = 0.0;
    double slack = 0.0;  // log_rhs - log_lhs
    bool pass = false;
};

namespace detail {

inline StepSlack make_step(double lhs, double sup1, double lp1, double p) {
    StepSlack s;
    s.lhs = lhs;
    s.rhs = std::pow(sup1, 1.0 - p) * lp1;
    s.slack = s.rhs - s.lhs;
    s.pass = s.slack >= -1e-9;
    return s;
}

// log rhs = (1-p)^n log||f^{(n)}||_inf + sum_j (1-p)^{j-1} log||f^{(j)}||_p^p
inline ChainSlack make_chain(double log_sup0, double log_supn,
                             const std::vector<double>& log_lp, double p) {
    ChainSlack c;
    size_t n = log_lp.size();
    double q = 1.0 - p;
    StableSum rhs;
    rhs.add(std::pow(q, static_cast<double>(n)) * log_supn);
    for (size_t j = 1; j <= n; ++j)
        rhs.add(std::pow(q, static_cast<double>(j) - 1.0) * log_lp[j - 1]);
    c.log_lhs = log_sup0;
    c.log_rhs = rhs.value();
    c.slack = c.log_rhs - c.log_lhs;
    c.pass = c.slack >= -1e-9;
    return c;
}

}  // namespace detail

// ||f||_inf <= ||f'||_inf^{1-p} ||f'||_p^p for compactly supported models.
inline StepSlack bootstrap_step_check(const PiecewisePoly& f, double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("bootstrap_step_check: p must lie in (0,1)");
    if (f.empty()) return {0.0, 0.0, 0.0, true};
    Distributional d = derivative(f, 1);
    if (!d.singular.empty())
        throw DistributionalDerivative("bootstrap_step_check: derivative has atoms");
    return detail::make_step(sup_norm(f), sup_norm(d.regular), lp_quasinorm(d.regular, p),
                             p);
}

inline StepSlack bootstrap_step_check(const HermiteFunction& f, double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("bootstrap_step_check: p must lie in (0,1)");
    if (f.is_zero()) return {0.0, 0.0, 0.0, true};
    HermiteFunction g = f.derivative();
    return detail::make_step(hermite_sup(f), hermite_sup(g), hermite_lp(g, p), p);
}

// Order-n chain: ||f||_inf <= ||f^{(n)}||_inf^{(1-p)^n} prod_j ||f^{(j)}||_p^{(1-p)^{j-1} p},
// compared in log domain.
inline ChainSlack bootstrap_chain_check(const PiecewisePoly& f, double p, int n) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("bootstrap_chain_check: p must lie in (0,1)");
    if (n < 1) throw ConfigError("bootstrap_chain_check: order must be >= 1");
    if (f.empty()) return {0.0, 0.0, 0.0, true};
    std::vector<double> log_lp;
    double log_supn = 0.0;
    for (int j = 1; j <= n; ++j) {
        Distributional d = derivative(f, j);
        if (!d.singular.empty())
            throw DistributionalDerivative("bootstrap_chain_check: derivative has atoms");
        log_lp.push_back(std::log(lp_quasinorm(d.regular, p)));
        if (j == n) log_supn = std::log(sup_norm(d.regular));
    }
    return detail::make_chain(std::log(sup_norm(f)), log_supn, log_lp, p);
}

inline ChainSlack bootstrap_chain_check(const HermiteFunction& f, double p, int n) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("bootstrap_chain_check: p must lie in (0,1)");
    if (n < 1) throw ConfigError("bootstrap_chain_check: order must be >= 1");
    if (f.is_zero()) return {0.0, 0.0, 0.0, true};
    std::vector<double> log_lp;
    HermiteFunction g = f;
    for (int j = 1; j <= n; ++j) {
        g = g.derivative();
        log_lp.push_back(std::log(hermite_lp(g, p)));
    }
    return detail::make_chain(std::log(hermite_sup(f)), std::log(hermite_sup(g)), log_lp,
                              p);
}

struct SupControlBound {
    double log_rhs = 0.0;        // point value with the computed kappa
    double log_rhs_lower = 0.0;  // certified lower value (kappa tail subtracted)
};

// log of the sup-norm control constant:
// theta (1-p)^{-k} + p (1-p)^{-k-1} kappa(p,M) - sum_{j<=k} (1-p)^{j-k-1} p log M_j.
inline SupControlBound sup_control_bound(const WeightSequence& m, double p, double theta,
                                         int k, double kappa_tol = 1e-12) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("sup_control_bound: p must lie in (0,1)");
    if (theta < 0.0) throw ConfigError("sup_control_bound: theta must be >= 0");
    if (k < 0) throw ConfigError("sup_control_bound: k must be >= 0");
    if (m.first_infinite() >= 0)
        throw DivergentKappa("sup_control_bound: weight sequence has infinite entries");
    KappaResult kr = kappa(m, p, kappa_tol);
    if (kr.status != KappaStatus::finite)
        throw DivergentKappa("sup_control_bound: kappa is not certifiably finite");
    double q = 1.0 - p;
    StableSum s;
    s.add(theta * std::pow(q, -k));
    s.add(p * std::pow(q, -k - 1) * kr.value);
    for (int j = 1; j <= k; ++j) s.add(-p * std::pow(q, j - k - 1) * m.logm(j));
    double unc = p * std::pow(q, -k - 1) * kr.tail_bound;
    return {s.value(), s.value() - unc};
}

struct SupControlReport {
    double log_lhs = 0.0;          // log ||f^{(k)}||_inf
    double log_bound = 0.0;        // certified log of the control constant
    double log_window_norm = 0.0;  // log sup_{n<=n_win} ||f^{(n)}||_p / M_n
    double slack = 0.0;            // log rhs - log lhs
    int n_win = 0;
    bool pass = false;
};

namespace detail {

inline SupControlReport finish_sup_control(double log_lhs, const SupControlBound& b,
                                           double log_window, int n_win) {
    SupControlReport r;
    r.log_lhs = log_lhs;
    r.log_bound = b.log_rhs_lower;
    r.log_window_norm = log_window;
    r.n_win = n_win;
    if (log_lhs == -kInf) {  // f^{(k)} vanishes identically; nothing to control
        r.slack = kInf;
        r.pass = true;
        return r;
    }
    r.slack = r.log_bound + r.log_window_norm - r.log_lhs;
    r.pass = r.slack >= -1e-9;
    return r;
}

}  // namespace detail

namespace detail {

// Weight sequences with a degenerate +inf tail make the kappa series, and
// with it the control constant, infinite: the inequality holds vacuously.
// Reported transparently instead of throwing, so degenerate classes can sit
// in the same sweep as genuine ones.
inline bool vacuous_bound(const WeightSequence& m, SupControlBound& b) {
    if (m.first_infinite() < 0) return false;
    b = {kInf, kInf};
    return true;
}

}  // namespace detail

// ||f^{(k)}||_inf <= bound * ||f||_{p,M}; the M-norm sup is taken over a
// declared window n <= n_win, a lower bound for the true sup, so a pass is a
// certificate for the full inequality.
inline SupControlReport verify_sup_control(const HermiteFunction& f,
                                           const WeightSequence& m, double p, double theta,
                                           int k, int n_win = 16) {
    if (n_win < k) throw ConfigError("verify_sup_control: window must reach k");
    SupControlBound b;
    if (!detail::vacuous_bound(m, b)) b = sup_control_bound(m, p, theta, k);
    if (f.is_zero()) return detail::finish_sup_control(-kInf, b, -kInf, n_win);
    double log_window = -kInf;
    HermiteFunction g = f;
    for (int n = 0; n <= n_win; ++n) {
        double lm = m.logm(n);
        if (lm < kInf)
            log_window = std::max(log_window, std::log(hermite_lp(g, p)) / p - lm);
        g = g.derivative();
    }
    HermiteFunction fk = f;
    for (int i = 0; i < k; ++i) fk = fk.derivative();
    return detail::finish_sup_control(std::log(hermite_sup(fk)), b, log_window, n_win);
}

inline SupControlReport verify_sup_control(const PiecewisePoly& f, const WeightSequence& m,
                                           double p, double theta, int k, int n_win = 16) {
    if (n_win < k) throw ConfigError("verify_sup_control: window must reach k");
    SupControlBound b;
    if (!detail::vacuous_bound(m, b)) b = sup_control_bound(m, p, theta, k);
    if (f.empty()) return detail::finish_sup_control(-kInf, b, -kInf, n_win);
    double log_window = -kInf;
    double log_lhs = 0.0;
    for (int n = 0; n <= n_win; ++n) {
        Distributional d = derivative(f, n);
        if (!d.singular.empty())
            throw DistributionalDerivative("verify_sup_control: derivative has atoms");
        double lm = m.logm(n);
        if (lm < kInf)
            log_window =
                std::max(log_window, std::log(lp_quasinorm(d.regular, p)) / p - lm);
        if (n == k) log_lhs = std::log(sup_norm(d.regular));
    }
    return detail::finish_sup_control(log_lhs, b, log_window, n_win);
}

}  // namespace carleman
