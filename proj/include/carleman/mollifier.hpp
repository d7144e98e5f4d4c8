#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "carleman/piecewise.hpp"
#include "carleman/weights.hpp"

namespace carleman {

struct UnderflowWidth : ComputationError {
    using ComputationError::ComputationError;
};
struct KExhausted : ComputationError {
    using ComputationError::ComputationError;
};

enum class MollifierMode : std::uint8_t { sobolev, carleman };

struct Certificate {
    std::string name;
    double measured = 0.0;  // log-domain entries are marked in method
    double bound = 0.0;
    bool pass = false;
    std::string method;  // "quadrature" | "atomic-bound" | "plan-arithmetic"
};

struct TamenessPoint {
    int n = 0;
    double value = 0.0;
};

struct TamenessWindow {
    std::vector<TamenessPoint> points;
    double theta_hat = 0.0;  // max over the top half of the window
};

struct MollifierPlan {
    MollifierMode mode = MollifierMode::sobolev;
    double p = 0.0, eps = 0.0;
    int k = 0;  // sobolev order
    int K = 0;  // carleman truncation actually used
    double r = 0.0, rho = 0.0;
    double delta_estimate = 0.0;
    bool delta_infinite = false;
    bool routed_through_minorant = false;
    std::vector<double> log_width;  // log a_l, l = 1..K (or k+1), full schedule
    std::vector<double> widths;     // representable prefix of exp(log_width)
    double support_len = 0.0;       // sum of all scheduled widths
    double log_b1 = 0.0;            // carleman: log b_{1,K}
    std::vector<int> tried_K;       // doubling-search trace
    std::string weight_desc;
};

struct InvisibleMollifier {
    PiecewisePoly phi;
    MollifierPlan plan;
    std::vector<Certificate> certificates;
    TamenessWindow tameness;  // carleman mode only
    int constructed_factors = 0;
};

namespace detail {

// Max number of box factors actually convolved; breakpoints double per
// factor, so this caps the exact-arithmetic cost.  Scheduled widths beyond
// the cap (or below the representable floor) stay in the log-domain plan.
inline constexpr int kMaxConstructedFactors = 12;

inline double log_sum_exp(const std::vector<double>& v, size_t lo, size_t hi) {
    double mx = -kInf;
    for (size_t i = lo; i < hi; ++i) mx = std::max(mx, v[i]);
    if (mx == -kInf) return -kInf;
    StableSum s;
    for (size_t i = lo; i < hi; ++i) s.add(std::exp(v[i] - mx));
    return mx + std::log(s.value());
}

}  // namespace detail

// Exact width schedule for order-k invisibility: each width is the larger of
// two ceilings (quasinorm budget, geometric halving), taken at the smaller.
inline MollifierPlan sobolev_schedule(int k, double p, double eps) {
    if (k < 0) throw ConfigError("sobolev_schedule: k must be >= 0");
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("sobolev_schedule: p must lie in (0,1)");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("sobolev_schedule: eps must be positive");

    MollifierPlan plan;
    plan.mode = MollifierMode::sobolev;
    plan.p = p;
    plan.eps = eps;
    plan.k = k;

    double kp1 = static_cast<double>(k) + 1.0;
    double inv1mp = 1.0 / (1.0 - p);
    std::vector<double> a;
    a.reserve(static_cast<size_t>(k) + 1);
    double a1 = std::min(std::pow(std::pow(eps, p) / (2.0 * kp1), inv1mp), eps / 2.0);
    a.push_back(a1);
    double log_prod = std::log(a1);  // log(a_1 ... a_{l-1}) running
    for (int l = 2; l <= k + 1; ++l) {
        double budget = std::exp(
            (p * std::log(eps) + p * log_prod - static_cast<double>(l) * std::log(2.0) -
             std::log(kp1)) *
            inv1mp);
        double al = std::min(budget, a.back() / 2.0);
        if (!(al >= kWidthFloor))
            throw UnderflowWidth("sobolev_schedule: width a_" + std::to_string(l) +
                                 " fell below the representable floor");
        // A width far below the breakpoint resolution of the support cannot
        // survive construction: the convolution grid coalesces it and the
        // profile acquires genuine jumps.  Reject the plan instead of
        // certifying a misrepresented function.
        if (al < 10.0 * PiecewisePoly::dedup_tol(0.0, a.front()))
            throw UnderflowWidth("sobolev_schedule: width a_" + std::to_string(l) +
                                 " fell below the coordinate resolution of the support");
        a.push_back(al);
        log_prod += std::log(al);
    }
    StableSum total;
    for (double w : a) {
        plan.log_width.push_back(std::log(w));
        total.add(w);
    }
    plan.widths = a;
    plan.support_len = total.value();
    if (plan.support_len > eps)
        throw ComputationError("sobolev_schedule: scheduled support exceeds eps");
    return plan;
}

inline InvisibleMollifier build_invisible_sobolev(int k, double p, double eps) {
    MollifierPlan plan = sobolev_schedule(k, p, eps);
    InvisibleMollifier out;
    out.plan = plan;
    out.phi = iterated_box(plan.widths);
    out.constructed_factors = static_cast<int>(plan.widths.size());

    auto& certs = out.certificates;
    auto fail = [&](const Certificate& c) {
        throw CertificateFailure("sobolev mollifier certificate '" + c.name +
                                 "' failed: measured " + std::to_string(c.measured) +
                                 " vs bound " + std::to_string(c.bound));
    };
    auto push = [&](Certificate c) {
        if (!c.pass) fail(c);
        certs.push_back(std::move(c));
    };

    double mass = out.phi.mass();
    push({"mass", std::abs(mass - 1.0), 1e-12, std::abs(mass - 1.0) <= 1e-12, "quadrature"});

    double hi = out.phi.support_hi();
    push({"support", hi, eps, out.phi.support_lo() >= -1e-15 && hi <= eps * (1.0 + 1e-12),
          "plan-arithmetic"});

    double min_val = range_on(out.phi, out.phi.support_lo(), out.phi.support_hi()).first;
    push({"nonnegativity", min_val, 0.0, min_val >= -1e-12, "quadrature"});

    double per_n_budget = std::pow(eps, p) / (static_cast<double>(k) + 1.0);
    StableSum total;
    for (int n = 0; n <= k; ++n) {
        Distributional d = derivative(out.phi, n);
        if (!d.singular.empty())
            throw ComputationError("sobolev mollifier: unexpected singular part at order " +
                                   std::to_string(n));
        double v = lp_quasinorm(d.regular, p, 1e-11);
        total.add(v);
        push({"quasinorm:" + std::to_string(n), v, per_n_budget,
              v <= per_n_budget * (1.0 + 1e-9), "quadrature"});
    }
    push({"quasinorm-total", total.value(), std::pow(eps, p),
          total.value() < std::pow(eps, p), "quadrature"});
    return out;
}

// Truncated-product schedule for the Carleman regime.  The working sequence
// is the p-regular minorant when the growth clause fired; widths are kept as
// logs because they collapse below the representable floor within a dozen
// factors.
inline MollifierPlan carleman_schedule(const WeightSequence& m, double p, double eps,
                                       int K = 0) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("carleman_schedule: p must lie in (0,1)");
    if (!(eps > 0.0)) throw ConfigError("carleman_schedule: eps must be positive");

    KappaResult kap = kappa(m, p, 1e-10);
    if (kap.status != KappaStatus::diverged)
        throw NotApplicable("carleman_schedule: kappa must be certified divergent");
    PRegularReport reg = p_regular(m, p);
    if (!reg.regular) throw NotApplicable("carleman_schedule: sequence is not p-regular");

    MollifierPlan plan;
    plan.mode = MollifierMode::carleman;
    plan.p = p;
    plan.eps = eps;

    WeightSequence work = m;
    if (reg.clause == 1) {
        work = minorant(m, p);
        plan.routed_through_minorant = true;
        reg = p_regular(work, p);
    }
    plan.weight_desc = work.describe();
    plan.delta_estimate = reg.delta_proof;
    plan.delta_infinite = reg.delta_infinite;

    if (reg.delta_infinite || !std::isfinite(reg.delta_proof)) {
        plan.r = p / 2.0;
        plan.rho = 1.0;
    } else {
        if (!(reg.delta_proof > 1.0))
            throw NotApplicable("carleman_schedule: delta estimate not above 1");
        plan.rho = (reg.delta_proof - 1.0) / 4.0;
        plan.r = p * (1.0 - (1.0 + plan.rho) / reg.delta_proof);
        plan.r = std::min(std::max(plan.r, 1e-8), p);
    }

    double q = 1.0 - p;
    auto try_K = [&](int Kc) -> bool {
        // log b_{l,K} = r sum_{j=0..K} q^j log W(l-1+j) for l = 1..K+2
        std::vector<double> qpow(static_cast<size_t>(Kc) + 1);
        qpow[0] = 1.0;
        for (int j = 1; j <= Kc; ++j) qpow[static_cast<size_t>(j)] = qpow[static_cast<size_t>(j - 1)] * q;
        std::vector<double> logw(static_cast<size_t>(Kc) + Kc + 2);
        for (size_t i = 0; i < logw.size(); ++i) logw[i] = work.logm(static_cast<int>(i));
        std::vector<double> log_b(static_cast<size_t>(Kc) + 3, 0.0);
        for (int l = 1; l <= Kc + 2; ++l) {
            StableSum s;
            for (int j = Kc; j >= 0; --j)
                s.add(qpow[static_cast<size_t>(j)] * logw[static_cast<size_t>(l - 1 + j)]);
            log_b[static_cast<size_t>(l)] = plan.r * s.value();
        }
        if (log_b[1] < 0.0) return false;
        std::vector<double> lw(static_cast<size_t>(Kc));
        StableSum support;
        double prev = kInf;
        for (int l = 1; l <= Kc; ++l) {
            double la = -(1.0 + plan.rho) * std::log(static_cast<double>(l)) +
                        log_b[static_cast<size_t>(l)] - log_b[static_cast<size_t>(l) + 1];
            if (la >= prev)
                throw ComputationError("carleman_schedule: widths are not decreasing");
            prev = la;
            lw[static_cast<size_t>(l - 1)] = la;
            support.add(std::exp(la));  // underflow adds zero, which is fine here
        }
        if (support.value() > eps) return false;
        plan.log_width = std::move(lw);
        plan.support_len = support.value();
        plan.log_b1 = log_b[1];
        plan.K = Kc;
        return true;
    };

    if (K > 0) {
        plan.tried_K.push_back(K);
        if (!try_K(K))
            throw KExhausted("carleman_schedule: requested K fails the support or b1 gate");
    } else {
        bool found = false;
        for (int Kc = 8; Kc <= 4096; Kc *= 2) {
            plan.tried_K.push_back(Kc);
            if (try_K(Kc)) {
                found = true;
                break;
            }
        }
        if (!found)
            throw KExhausted("carleman_schedule: no K <= 4096 meets the support certificate");
    }

    // Constructible prefix: stop at the representable floor and at the
    // breakpoint resolution of the support (narrower factors would coalesce
    // on the convolution grid).
    double res_floor = 10.0 * PiecewisePoly::dedup_tol(0.0, plan.support_len);
    for (double la : plan.log_width) {
        if (la < std::log(kWidthFloor)) break;
        double w = std::exp(la);
        if (w < res_floor) break;
        plan.widths.push_back(w);
    }
    return plan;
}

inline InvisibleMollifier build_invisible_carleman(const WeightSequence& m, double p,
                                                   double eps, int K, int n_check) {
    if (n_check < 0) throw ConfigError("build_invisible_carleman: n_check must be >= 0");
    MollifierPlan plan = carleman_schedule(m, p, eps, K);
    if (n_check + 2 > plan.K)
        throw ConfigError("build_invisible_carleman: n_check too large for the truncation");

    InvisibleMollifier out;
    out.plan = plan;
    int m_c = std::min<int>(static_cast<int>(plan.widths.size()),
                            detail::kMaxConstructedFactors);
    if (m_c < 1) throw UnderflowWidth("build_invisible_carleman: no representable widths");
    out.constructed_factors = m_c;
    out.phi = iterated_box(std::span<const double>(plan.widths.data(),
                                                   static_cast<size_t>(m_c)));

    auto fail = [&](const Certificate& c) {
        throw CertificateFailure("carleman mollifier certificate '" + c.name +
                                 "' failed: measured " + std::to_string(c.measured) +
                                 " vs bound " + std::to_string(c.bound));
    };
    auto push = [&](Certificate c) {
        if (!c.pass) fail(c);
        out.certificates.push_back(std::move(c));
    };

    double mass = out.phi.mass();
    push({"mass", std::abs(mass - 1.0), 1e-12, std::abs(mass - 1.0) <= 1e-12, "quadrature"});
    push({"support", plan.support_len, eps,
          plan.support_len <= eps && out.phi.support_hi() <= eps * (1.0 + 1e-12),
          "plan-arithmetic"});
    double min_val = range_on(out.phi, out.phi.support_lo(), out.phi.support_hi()).first;
    push({"nonnegativity", min_val, 0.0, min_val >= -1e-12, "quadrature"});

    // prefix sums of log(1/a_l) for the atomic bounds
    std::vector<double> neg_log_prefix(plan.log_width.size() + 1, 0.0);
    {
        StableSum s;
        for (size_t i = 0; i < plan.log_width.size(); ++i) {
            s.add(-plan.log_width[i]);
            neg_log_prefix[i + 1] = s.value();
        }
    }

    int smooth_orders = m_c - 1;  // derivative order m_c produces atoms
    for (int n = 0; n <= n_check; ++n) {
        double log_target = std::log(eps) + m.logm(n);  // certify against the original M
        if (n <= 3 && n <= smooth_orders) {
            Distributional d = derivative(out.phi, n);
            if (!d.singular.empty())
                throw ComputationError("carleman mollifier: unexpected atoms at order " +
                                       std::to_string(n));
            double vp = lp_quasinorm(d.regular, p, 1e-10);
            double log_norm = std::log(vp) / p;
            push({"norm:" + std::to_string(n), log_norm, log_target,
                  log_norm <= log_target + 1e-9, "quadrature"});
        } else {
            // || Phi^(n) ||_p^p <= 2^n (a_1..a_{n+1})^{-p} sum_{l>n} a_l
            double log_tail = detail::log_sum_exp(plan.log_width, static_cast<size_t>(n),
                                                  plan.log_width.size());
            double log_vp = n * std::log(2.0) +
                            p * neg_log_prefix[static_cast<size_t>(n) + 1] + log_tail;
            double log_norm = log_vp / p;
            push({"norm:" + std::to_string(n), log_norm, log_target,
                  log_norm <= log_target + 1e-9, "atomic-bound"});
        }
    }

    // tameness window from the schedule: log ||Phi^(n)||_inf <= n log 2 +
    // sum_{l<=n+1} log(1/a_l)
    double q = 1.0 - p;
    for (int n = 0; n <= n_check; ++n) {
        double log_sup = n * std::log(2.0) + neg_log_prefix[static_cast<size_t>(n) + 1];
        out.tameness.points.push_back({n, std::pow(q, n) * log_sup});
    }
    double th = -kInf;
    for (size_t i = out.tameness.points.size() / 2; i < out.tameness.points.size(); ++i)
        th = std::max(th, out.tameness.points[i].value);
    out.tameness.theta_hat = th;
    return out;
}

// (1-p)^n log ||f^(n)||_inf over a window, with the top-half max as the
// theta estimate.
inline TamenessWindow tameness_diagnostic(const PiecewisePoly& f, double p, int n_lo,
                                          int n_hi) {
    if (n_lo < 0 || n_hi < n_lo) throw ConfigError("tameness_diagnostic: bad range");
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("tameness_diagnostic: p must lie in (0,1)");
    TamenessWindow w;
    double q = 1.0 - p;
    for (int n = n_lo; n <= n_hi; ++n) {
        Distributional d = derivative(f, n);
        if (!d.singular.empty())
            throw DistributionalDerivative(
                "tameness_diagnostic: derivative leaves the function model at order " +
                std::to_string(n));
        w.points.push_back({n, std::pow(q, n) * std::log(sup_norm(d.regular))});
    }
    double th = -kInf;
    for (size_t i = w.points.size() / 2; i < w.points.size(); ++i)
        th = std::max(th, w.points[i].value);
    w.theta_hat = th;
    return w;
}

// Same diagnostic fed with precomputed log sup-norms (index i holds order
// n_lo + i); lets other function models reuse the window logic.
inline TamenessWindow tameness_from_log_sups(const std::vector<double>& log_sups, double p,
                                             int n_lo) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("tameness window: p must lie in (0,1)");
    TamenessWindow w;
    double q = 1.0 - p;
    for (size_t i = 0; i < log_sups.size(); ++i) {
        int n = n_lo + static_cast<int>(i);
        w.points.push_back({n, std::pow(q, n) * log_sups[i]});
    }
    double th = -kInf;
    for (size_t i = w.points.size() / 2; i < w.points.size(); ++i)
        th = std::max(th, w.points[i].value);
    w.theta_hat = th;
    return w;
}

}  // namespace carleman
