#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "carleman/mollifier.hpp"
#include "carleman/numeric.hpp"
#include "carleman/piecewise.hpp"
#include "carleman/weights.hpp"

namespace carleman {

struct BadPeriod : ConfigError {
    using ConfigError::ConfigError;
};
struct DepthExhausted : ComputationError {
    using ComputationError::ComputationError;
};

// A witness bundles the constructed function with the measured/bound rows
// that certify it.  Rows never throw on failure; the pass flag reports it.
struct WitnessReport {
    int index = 0;  // family parameter j, or the number of partition cells
    std::vector<Certificate> rows;
    bool pass = true;
    PiecewisePoly witness;
};

namespace detail {

inline void add_row(WitnessReport& rep, std::string name, double measured, double bound,
                    std::string method, double rel_tol = 1e-9) {
    bool ok = measured <= bound + rel_tol * std::max(1.0, std::abs(bound));
    rep.pass = rep.pass && ok;
    rep.rows.push_back({std::move(name), measured, bound, ok, std::move(method)});
}

}  // namespace detail

// Sawtooth with rises of slope 1 over 1/j and drops of slope -1/(j eps_j)
// over eps_j, repeated with period 1/j + eps_j and truncated to [0,1].  The
// profile takes values in [0, 1/j] and reaches the peak on every full rise.
inline PiecewisePoly sawtooth(int j, double eps_j) {
    if (j < 1) throw ConfigError("sawtooth: j must be >= 1");
    if (!(eps_j > 0.0) || !std::isfinite(eps_j))
        throw ConfigError("sawtooth: eps_j must be positive");
    double invj = 1.0 / static_cast<double>(j);
    if (!(eps_j < invj))
        throw BadPeriod("sawtooth: eps_j must be smaller than 1/j so a full tooth fits");

    double period = invj + eps_j;
    std::vector<double> breaks{0.0};
    std::vector<Polynomial> pieces;
    Polynomial rise({0.0, 1.0});
    Polynomial drop({invj, -1.0 / (static_cast<double>(j) * eps_j)});
    for (int m = 0;; ++m) {
        double r0 = static_cast<double>(m) * period;
        double r1 = r0 + invj;   // end of the rise
        double r2 = r0 + period; // end of the drop
        if (r0 >= 1.0 - 1e-15) break;
        if (r1 >= 1.0) {
            breaks.push_back(1.0);
            pieces.push_back(rise);
            break;
        }
        breaks.push_back(r1);
        pieces.push_back(rise);
        if (r2 >= 1.0) {
            if (1.0 - r1 > 1e-15) {
                breaks.push_back(1.0);
                pieces.push_back(drop);
            }
            break;
        }
        breaks.push_back(r2);
        pieces.push_back(drop);
    }
    return PiecewisePoly::from_pieces(std::move(breaks), std::move(pieces));
}

// Quasinorm collapse along the sawtooth family: the derivative defect
// 1 - f_j' vanishes on rises and equals 1 + 1/(j eps_j) on drops, so its
// p-quasinorm is controlled by (j eps_j)^{1-p} while f_j itself stays small.
inline WitnessReport douady_witness(double p, int j, double eps_j = 0.0) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("douady_witness: p must lie in (0,1)");
    if (j < 1) throw ConfigError("douady_witness: j must be >= 1");
    if (eps_j == 0.0) {
        double dj = static_cast<double>(j);
        eps_j = 1.0 / (dj * dj * dj);
    }
    PiecewisePoly f = sawtooth(j, eps_j);

    // 1 - f' as a piecewise constant on the same grid
    double c = 1.0 + 1.0 / (static_cast<double>(j) * eps_j);
    std::vector<Polynomial> defect;
    defect.reserve(f.piece_count());
    for (const auto& q : f.pieces())
        defect.push_back(q.coeff(1) < 0.0 ? Polynomial::constant(c) : Polynomial());
    PiecewisePoly one_minus_df = PiecewisePoly::from_pieces(f.breakpoints(), std::move(defect));

    double invj = 1.0 / static_cast<double>(j);
    WitnessReport rep;
    rep.index = j;
    rep.witness = f;
    double drop_measure =
        one_minus_df.empty() ? 0.0 : lp_quasinorm(one_minus_df, p, 1e-11);
    detail::add_row(rep, "derivative-defect", drop_measure,
                    std::pow(static_cast<double>(j) * eps_j, 1.0 - p), "quadrature");
    detail::add_row(rep, "value-quasinorm", lp_quasinorm(f, p, 1e-11), std::pow(invj, p),
                    "quadrature");
    detail::add_row(rep, "sup", sup_norm(f), invj, "closed-form", 1e-12);
    return rep;
}

// Exact integral of f over [lo, hi] from the piece antiderivatives.
inline double interval_integral(const PiecewisePoly& f, double lo, double hi) {
    if (f.empty() || !(lo < hi)) return 0.0;
    const auto& bk = f.breakpoints();
    StableSum s;
    for (size_t i = 0; i + 1 < bk.size(); ++i) {
        double a = std::max(bk[i], lo);
        double b = std::min(bk[i + 1], hi);
        if (!(a < b)) continue;
        Polynomial anti = f.pieces()[i].antiderivative();
        s.add(anti(b - bk[i]) - anti(a - bk[i]));
    }
    return s.value();
}

// Running antiderivative.  The result is supported on supp(f); a nonzero
// total mass shows up as a jump at the right endpoint, so callers that need
// a continuous compactly supported primitive must pass zero-mean input.
inline PiecewisePoly primitive(const PiecewisePoly& f) {
    if (f.empty()) return {};
    std::vector<Polynomial> pieces;
    pieces.reserve(f.piece_count());
    StableSum running;
    for (size_t i = 0; i < f.piece_count(); ++i) {
        Polynomial anti = f.pieces()[i].antiderivative();
        pieces.push_back(anti + Polynomial::constant(running.value()));
        running.add(anti(f.width(i)));
    }
    return PiecewisePoly::from_pieces(f.breakpoints(), std::move(pieces));
}

namespace detail {

// Smoothed indicator g_j = 1_{[a,b]} * Phi assembled exactly through the
// primitive F of Phi: g_j(x) = F(x-a) - F(x-b), i.e. F's local pieces on the
// rise, a constant plateau, and total - F on the fall.  Direct piece
// placement preserves breakpoint clusters that sit below the dedup
// resolution of a span-(b-a) grid, which any grid merge (convolution or
// merge_sum) would coalesce into garbage slopes.  For the same reason the
// quantitative rows are evaluated in the mollifier's own frame, where the
// two translates of g_j^{(n)} = Phi^{(n-1)}(x-a) - Phi^{(n-1)}(x-b) have
// disjoint supports:
//   ||g - g_j||_p^p   = int (1-F)^p + int (total-F)^p + plateau defect,
//   ||g_j^{(n)}||_p^p = 2 ||Phi^{(n-1)}||_p^p <= 2 (eps_j M_n)^p.
inline WitnessReport indicator_lift(double a, double b, double p,
                                    const InvisibleMollifier& moll,
                                    const WeightSequence* weights, double eps_j,
                                    int n_check) {
    double width = b - a;
    PiecewisePoly F = primitive(moll.phi);
    const auto& bk = F.breakpoints();
    size_t m = F.piece_count();
    double s = bk.back() - bk.front();
    if (!(a + s < b))
        throw ConfigError(
            "lift_beta_witness: mollifier support must fit strictly inside the interval");
    double total = moll.phi.mass();

    std::vector<double> x;
    std::vector<Polynomial> pieces;
    x.reserve(2 * m + 2);
    pieces.reserve(2 * m + 1);
    for (size_t i = 0; i <= m; ++i) x.push_back(a + (bk[i] - bk.front()));
    for (size_t i = 0; i < m; ++i) pieces.push_back(F.pieces()[i]);
    x.push_back(b);
    pieces.push_back(Polynomial::constant(total));
    for (size_t i = 0; i < m; ++i) {
        x.push_back(b + (bk[i + 1] - bk.front()));
        pieces.push_back(Polynomial::constant(total) - F.pieces()[i]);
    }
    PiecewisePoly gj = PiecewisePoly::from_pieces(std::move(x), std::move(pieces));

    WitnessReport rep;
    rep.witness = gj;
    detail::add_row(rep, "mass", std::abs(gj.mass() - width),
                    1e-10 * std::max(1.0, width), "quadrature", 0.0);

    std::vector<Polynomial> rise, fall;
    rise.reserve(m);
    fall.reserve(m);
    for (size_t i = 0; i < m; ++i) {
        rise.push_back(Polynomial::constant(1.0) - F.pieces()[i]);
        fall.push_back(Polynomial::constant(total) - F.pieces()[i]);
    }
    double dist = lp_quasinorm(PiecewisePoly::from_pieces(bk, std::move(rise)), p, 1e-11) +
                  lp_quasinorm(PiecewisePoly::from_pieces(bk, std::move(fall)), p, 1e-11) +
                  std::pow(std::abs(1.0 - total), p) * (width - s);
    detail::add_row(rep, "distance", dist, 2.0 * eps_j, "quadrature");
    double overhang = std::max(a - gj.support_lo(), gj.support_hi() - b);
    detail::add_row(rep, "support", overhang, eps_j, "plan-arithmetic", 1e-12);
    for (int n = 1; n <= n_check; ++n) {
        Distributional d = derivative(moll.phi, n - 1);
        if (!d.singular.empty())
            throw ComputationError("indicator lift: unexpected atoms at order " +
                                   std::to_string(n));
        double vp = 2.0 * lp_quasinorm(d.regular, p, 1e-11);
        double logm_n = weights == nullptr ? 0.0 : weights->logm(n);
        double bound = 2.0 * std::pow(eps_j * std::exp(logm_n), p);
        detail::add_row(rep, "derivative-quasinorm:" + std::to_string(n), vp, bound,
                        "quadrature");
    }
    return rep;
}

inline void check_lift_args(double a, double b, double p, double eps_j, int n_check) {
    if (!(a < b)) throw ConfigError("lift_beta_witness: interval must be nonempty");
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("lift_beta_witness: p must lie in (0,1)");
    if (!(eps_j > 0.0) || !std::isfinite(eps_j))
        throw ConfigError("lift_beta_witness: eps_j must be positive");
    if (n_check < 1) throw ConfigError("lift_beta_witness: n_check must be >= 1");
}

}  // namespace detail

// Sobolev flavor: the mollifier is invisible at order k, so derivative rows
// run up to k+1 with unit weights.
inline WitnessReport lift_beta_witness(double a, double b, double p, int sobolev_k,
                                       double eps_j, int n_check) {
    detail::check_lift_args(a, b, p, eps_j, n_check);
    if (sobolev_k < 0) throw ConfigError("lift_beta_witness: sobolev_k must be >= 0");
    if (n_check > sobolev_k + 1)
        throw ConfigError("lift_beta_witness: n_check exceeds the invisibility order + 1");
    InvisibleMollifier moll = build_invisible_sobolev(sobolev_k, p, eps_j);
    WitnessReport rep = detail::indicator_lift(a, b, p, moll, nullptr, eps_j, n_check);
    rep.index = sobolev_k;
    return rep;
}

// Carleman flavor: the mollifier is built invisible for the shifted weights,
// which is exactly what the two-translate derivative split consumes.
inline WitnessReport lift_beta_witness(double a, double b, double p,
                                       const WeightSequence& m, double eps_j, int n_check,
                                       int k_trunc = 0) {
    detail::check_lift_args(a, b, p, eps_j, n_check);
    InvisibleMollifier moll =
        build_invisible_carleman(m.shifted(1), p, eps_j, k_trunc, n_check);
    // the box factor from the indicator adds one classical derivative
    if (n_check > moll.constructed_factors)
        throw ConfigError(
            "lift_beta_witness: n_check exceeds the constructible smoothness (" +
            std::to_string(moll.constructed_factors) + " factors)");
    WitnessReport rep = detail::indicator_lift(a, b, p, moll, &m, eps_j, n_check);
    rep.index = n_check;
    return rep;
}

struct OscillationCell {
    double lo = 0.0;
    double hi = 0.0;
    double osc = 0.0;  // sup over the cell of |f - cell mean|
    int base = 0;      // unit cell of origin
    int depth = 0;     // halving generation
};

namespace detail {

inline double cell_oscillation(const PiecewisePoly& f, double lo, double hi) {
    double mean = interval_integral(f, lo, hi) / (hi - lo);
    auto [mn, mx] = range_on(f, lo, hi);
    return std::max(mx - mean, mean - mn);
}

}  // namespace detail

// Partition of the support into unit cells halved uniformly until every leaf
// obeys (osc)^p <= eps 2^{-(m+1)}, where m counts unit cells from the left
// edge.  The geometric budgets sum to at most eps, so the weighted sum
// sum |I| osc^p stays below eps (and in particular below 3 eps).
inline std::vector<OscillationCell> oscillation_partition(const PiecewisePoly& f, double p,
                                                          double eps, int max_depth = 20) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("oscillation_partition: p must lie in (0,1)");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("oscillation_partition: eps must be positive");
    if (max_depth < 0) throw ConfigError("oscillation_partition: max_depth must be >= 0");

    std::vector<OscillationCell> cells;
    if (f.empty()) {
        cells.push_back({0.0, 1.0, 0.0, 0, 0});
        return cells;
    }
    double lo = f.support_lo();
    double hi = f.support_hi();
    int base_count = std::max(1, static_cast<int>(std::ceil(hi - lo - 1e-12)));
    for (int m = 0; m < base_count; ++m) {
        double c0 = lo + static_cast<double>(m);
        double c1 = std::min(c0 + 1.0, hi);
        if (!(c0 < c1)) break;
        double budget = eps * std::pow(0.5, m + 1);
        std::vector<double> osc;
        for (int depth = 0;; ++depth) {
            if (depth > max_depth)
                throw DepthExhausted("oscillation_partition: halving exhausted at cell " +
                                     std::to_string(m));
            int parts = 1 << depth;
            double step = (c1 - c0) / static_cast<double>(parts);
            osc.assign(static_cast<size_t>(parts), 0.0);
            bool ok = true;
            for (int i = 0; i < parts; ++i) {
                double a = c0 + static_cast<double>(i) * step;
                double b = (i + 1 == parts) ? c1 : c0 + static_cast<double>(i + 1) * step;
                osc[static_cast<size_t>(i)] = detail::cell_oscillation(f, a, b);
                if (std::pow(osc[static_cast<size_t>(i)], p) > budget) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (int i = 0; i < parts; ++i) {
                double a = c0 + static_cast<double>(i) * step;
                double b = (i + 1 == parts) ? c1 : c0 + static_cast<double>(i + 1) * step;
                cells.push_back({a, b, osc[static_cast<size_t>(i)], m, depth});
            }
            break;
        }
    }
    return cells;
}

struct GammaWitness {
    PiecewisePoly u;
    PiecewisePoly phi;
    WitnessReport report;
    std::vector<OscillationCell> partition;
    std::vector<double> delta_widths;     // correction window width per cell
    std::vector<double> eps_corrections;  // certified mollifier budget per cell
    std::vector<double> cell_means;       // lambda_n
};

namespace detail {

// Shared gamma-lift driver.  Mollifiers are built per cell at the certified
// budget eps_n = delta_n^{1/p}; with delta_n < 1 the support automatically
// fits inside the width-delta_n correction window.  A nonzero total mass of
// g is absorbed by a single unpaired mollifier on a flat unit cell appended
// past the support, which keeps u compactly supported.
template <typename MollBuilder>
inline GammaWitness gamma_lift(const PiecewisePoly& g, double p, double eps, int n_check,
                               const WeightSequence* weights, MollBuilder&& build_moll) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("lift_gamma_witness: p must lie in (0,1)");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw ConfigError("lift_gamma_witness: eps must be positive");
    if (n_check < 0) throw ConfigError("lift_gamma_witness: n_check must be >= 0");

    GammaWitness out;
    if (g.empty()) {
        out.partition = oscillation_partition(g, p, eps);
        out.report.index = static_cast<int>(out.partition.size());
        detail::add_row(out.report, "u-quasinorm", 0.0, eps, "quadrature");
        detail::add_row(out.report, "mass-balance", 0.0, 1e-10, "quadrature", 0.0);
        return out;
    }

    PiecewisePoly f = primitive(g);
    double sup_f = sup_norm(f);
    double total_mass = g.mass();
    out.partition = oscillation_partition(f, p, eps);
    bool terminal = std::abs(total_mass) > 1e-13 * std::max(1.0, sup_f);
    if (terminal) {
        double edge = f.support_hi();
        int base = out.partition.back().base + 1;
        out.partition.push_back({edge, edge + 1.0, 0.0, base, 0});
    }
    size_t cell_count = out.partition.size();

    out.delta_widths.resize(cell_count);
    out.eps_corrections.resize(cell_count);
    out.cell_means.resize(cell_count);

    std::vector<PiecewisePoly> parts;
    StableSum width_budget;      // sum delta_n
    StableSum correction_budget; // sum eps_n^p
    StableSum pair_budget;       // sum |lambda_n|^p eps_n^p
    // phi lives on the merged frame of all placed copies (extending at most
    // eps past the support).  Breakpoint spacings at or below the frame's
    // dedup resolution would be coalesced by merge_sum into spurious slopes,
    // so reject such widths up front; anything strictly above survives every
    // grid merge exactly.
    double res_floor = PiecewisePoly::dedup_tol(f.support_lo(), f.support_hi() + eps);
    for (size_t n = 0; n < cell_count; ++n) {
        const OscillationCell& cell = out.partition[n];
        bool last_flat = terminal && n + 1 == cell_count;
        double len = cell.hi - cell.lo;
        double delta = std::min(eps / static_cast<double>(cell_count), len / 4.0);
        double eps_n = std::pow(delta, 1.0 / p);
        // past the support the true primitive sits at the total mass, which
        // the truncated representation cannot report
        double lambda =
            last_flat ? total_mass : interval_integral(f, cell.lo, cell.hi) / len;
        out.delta_widths[n] = delta;
        out.eps_corrections[n] = eps_n;
        out.cell_means[n] = lambda;
        width_budget.add(delta);
        correction_budget.add(std::pow(eps_n, p));
        if (lambda == 0.0) continue;
        pair_budget.add(std::pow(std::abs(lambda) * eps_n, p));

        InvisibleMollifier moll = build_moll(eps_n);
        if (n_check > moll.constructed_factors - 1)
            throw ConfigError(
                "lift_gamma_witness: n_check exceeds the constructible smoothness (" +
                std::to_string(moll.constructed_factors) + " factors)");
        if (moll.plan.widths.back() <= res_floor)
            throw UnderflowWidth(
                "lift_gamma_witness: correction widths fall below the placement "
                "resolution of the support; increase eps or lower n_check");
        // shifting quantizes breakpoints to coordinate ulps, which perturbs
        // each copy's mass by about height * ulp; renormalizing per copy
        // restores the exact pair cancellation the mass balance relies on
        PiecewisePoly left = moll.phi.shifted(cell.lo);
        parts.push_back(left.scaled(lambda / left.mass()));
        if (!last_flat) {
            PiecewisePoly right = moll.phi.shifted(cell.hi - delta);
            parts.push_back(right.scaled(-lambda / right.mass()));
        }
    }
    // balanced deterministic reduction keeps the merge cost near linear
    while (parts.size() > 1) {
        std::vector<PiecewisePoly> next;
        next.reserve(parts.size() / 2 + 1);
        for (size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(parts[i] + parts[i + 1]);
        if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
        parts = std::move(next);
    }
    PiecewisePoly phi = parts.empty() ? PiecewisePoly() : std::move(parts.front());

    PiecewisePoly u = primitive(g - phi);
    out.phi = phi;
    out.u = u;
    out.report.index = static_cast<int>(cell_count);
    out.report.witness = u;

    StableSum osc_sum;
    for (const auto& cell : out.partition)
        osc_sum.add((cell.hi - cell.lo) * std::pow(cell.osc, p));
    detail::add_row(out.report, "partition-sum", osc_sum.value(), eps, "quadrature");
    detail::add_row(out.report, "width-budget", width_budget.value(), eps,
                    "plan-arithmetic");
    detail::add_row(out.report, "correction-budget", correction_budget.value(), eps,
                    "plan-arithmetic");
    detail::add_row(out.report, "mass-balance", std::abs((g - phi).mass()), 1e-10,
                    "quadrature", 0.0);
    double u_bound = (std::exp2(1.0 + p) * std::pow(sup_f, p) + 1.0) * eps;
    detail::add_row(out.report, "u-quasinorm",
                    u.empty() ? 0.0 : lp_quasinorm(u, p, 1e-11), u_bound, "quadrature");
    double overhang = u.empty() ? 0.0
                                : std::max(g.support_lo() - u.support_lo(),
                                           u.support_hi() - g.support_hi());
    detail::add_row(out.report, "support", overhang, eps, "plan-arithmetic", 1e-12);
    for (int n = 0; n <= n_check; ++n) {
        double vp = 0.0;
        if (!phi.empty()) {
            Distributional d = derivative(phi, n);
            if (!d.singular.empty())
                throw ComputationError("lift_gamma_witness: unexpected atoms at order " +
                                       std::to_string(n));
            vp = d.regular.empty() ? 0.0 : lp_quasinorm(d.regular, p, 1e-11);
        }
        double logm_n = weights == nullptr ? 0.0 : weights->logm(n + 1);
        double bound = 2.0 * pair_budget.value() * std::exp(p * logm_n);
        detail::add_row(out.report, "phi-quasinorm:" + std::to_string(n), vp, bound,
                        "quadrature");
    }
    return out;
}

}  // namespace detail

// Sobolev flavor: per-cell mollifiers of order n_check, so phi keeps n_check
// classical derivatives and the correction rows carry unit weights.
inline GammaWitness lift_gamma_witness(const PiecewisePoly& g, double p, double eps,
                                       int n_check = 0) {
    return detail::gamma_lift(g, p, eps, n_check, nullptr, [&](double eps_n) {
        return build_invisible_sobolev(n_check, p, eps_n);
    });
}

// Carleman flavor: per-cell mollifiers invisible for the shifted weights.
// Tiny per-cell budgets can defeat the truncation search; those failures
// propagate as thrown certificates rather than weakened rows.
inline GammaWitness lift_gamma_witness(const PiecewisePoly& g, double p,
                                       const WeightSequence& m, double eps, int n_check,
                                       int k_trunc = 0) {
    return detail::gamma_lift(g, p, eps, n_check, &m, [&](double eps_n) {
        return build_invisible_carleman(m.shifted(1), p, eps_n, k_trunc, n_check);
    });
}

}  // namespace carleman
