#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "carleman/polynomial.hpp"
#include "carleman/quadrature.hpp"

namespace carleman {

struct NonPositiveWidth : ConfigError {
    using ConfigError::ConfigError;
};

// Differentiating past a jump would need derivatives of Dirac atoms, which the
// Distributional type deliberately does not model.
struct DistributionalDerivative : ComputationError {
    using ComputationError::ComputationError;
};

// Sorted point masses.  Locations within the dedup tolerance coalesce by
// adding masses; masses below 1e-300 are dropped.
struct AtomicMeasure {
    std::vector<std::pair<double, double>> atoms;  // (location, mass)

    bool empty() const { return atoms.empty(); }

    static AtomicMeasure from_unsorted(std::vector<std::pair<double, double>> raw) {
        AtomicMeasure m;
        if (raw.empty()) return m;
        std::sort(raw.begin(), raw.end());
        double span = std::max({std::abs(raw.front().first), std::abs(raw.back().first),
                                raw.back().first - raw.front().first, 1e-300});
        double tol = 1e-12 * span;
        for (const auto& [loc, mass] : raw) {
            if (!m.atoms.empty() && loc - m.atoms.back().first <= tol)
                m.atoms.back().second += mass;
            else
                m.atoms.emplace_back(loc, mass);
        }
        std::erase_if(m.atoms, [](const auto& a) { return std::abs(a.second) < 1e-300; });
        return m;
    }
};

// Compactly supported piecewise polynomial.  Coefficients of piece i live in
// the local variable t = x - breaks[i]; the function is identically zero
// outside [breaks.front(), breaks.back()].
class PiecewisePoly {
  public:
    PiecewisePoly() = default;

    static PiecewisePoly zero() { return {}; }

    static PiecewisePoly from_pieces(std::vector<double> breaks, std::vector<Polynomial> pieces) {
        if (pieces.empty() || breaks.size() != pieces.size() + 1)
            throw ConfigError("piecewise: breakpoint/piece count mismatch");
        for (size_t i = 0; i + 1 < breaks.size(); ++i)
            if (!(breaks[i] < breaks[i + 1]))
                throw ConfigError("piecewise: breakpoints must be strictly increasing");
        PiecewisePoly f;
        f.x_ = std::move(breaks);
        f.piece_ = std::move(pieces);
        f.trim();
        return f;
    }

    static PiecewisePoly constant_on(double lo, double hi, double v) {
        if (!(lo < hi)) throw ConfigError("piecewise: empty interval");
        return from_pieces({lo, hi}, {Polynomial::constant(v)});
    }

    bool empty() const { return piece_.empty(); }
    double support_lo() const { return empty() ? 0.0 : x_.front(); }
    double support_hi() const { return empty() ? 0.0 : x_.back(); }
    const std::vector<double>& breakpoints() const { return x_; }
    const std::vector<Polynomial>& pieces() const { return piece_; }
    size_t piece_count() const { return piece_.size(); }

    double operator()(double x) const {
        if (empty() || x < x_.front() || x > x_.back()) return 0.0;
        if (x == x_.back()) {
            size_t m = piece_.size();
            return piece_[m - 1](x_[m] - x_[m - 1]);
        }
        size_t i = locate(x);
        return piece_[i](x - x_[i]);
    }

    double mass() const {
        StableSum s;
        for (size_t i = 0; i < piece_.size(); ++i)
            s.add(piece_[i].antiderivative()(width(i)));
        return s.value();
    }

    double width(size_t i) const { return x_[i + 1] - x_[i]; }

    PiecewisePoly scaled(double s) const {
        if (s == 0.0 || empty()) return {};
        PiecewisePoly f = *this;
        for (auto& p : f.piece_) p = p.scaled(s);
        f.trim();
        return f;
    }

    // Translation: local-basis coefficients are shift invariant.
    PiecewisePoly shifted(double dx) const {
        PiecewisePoly f = *this;
        for (double& b : f.x_) b += dx;
        for (size_t i = 0; i + 1 < f.x_.size(); ++i)
            if (!(f.x_[i] < f.x_[i + 1]))
                throw ConfigError("piecewise: shift collapsed breakpoints");
        return f;
    }

    PiecewisePoly operator+(const PiecewisePoly& g) const;
    PiecewisePoly operator-(const PiecewisePoly& g) const { return *this + g.scaled(-1.0); }

    // Polynomial of this function on [u, u+dt) in local t, zero if outside.
    // u within the dedup tolerance of a breakpoint snaps onto it and selects
    // the piece to its right; picking the left piece there would extend a
    // polynomial past its cell of validity.
    Polynomial local_poly_at(double u) const {
        if (empty()) return {};
        double tol = dedup_tol(x_.front(), x_.back());
        size_t i;
        auto it = std::lower_bound(x_.begin(), x_.end(), u - tol);
        if (it != x_.end() && *it <= u + tol)
            i = static_cast<size_t>(it - x_.begin());
        else if (it == x_.begin())
            return {};  // u lies left of the support
        else
            i = static_cast<size_t>(it - x_.begin()) - 1;
        if (i >= piece_.size()) return {};  // at or past the right edge
        return piece_[i].taylor_shift(u - x_[i]);
    }

    static double dedup_tol(double lo, double hi) {
        return 1e-12 * std::max({std::abs(lo), std::abs(hi), hi - lo, 1e-300});
    }

  private:
    size_t locate(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        size_t i = static_cast<size_t>(it - x_.begin());
        if (i == 0) return 0;
        if (i >= x_.size()) return piece_.size() - 1;
        return i - 1;
    }

    void trim() {
        size_t lo = 0, hi = piece_.size();
        while (lo < hi && piece_[lo].is_zero()) ++lo;
        while (hi > lo && piece_[hi - 1].is_zero()) --hi;
        if (lo == hi) {
            x_.clear();
            piece_.clear();
            return;
        }
        if (lo > 0 || hi < piece_.size()) {
            x_ = std::vector<double>(x_.begin() + static_cast<long>(lo),
                                     x_.begin() + static_cast<long>(hi + 1));
            piece_ = std::vector<Polynomial>(piece_.begin() + static_cast<long>(lo),
                                             piece_.begin() + static_cast<long>(hi));
        }
    }

    friend PiecewisePoly merge_sum(const PiecewisePoly&, const PiecewisePoly&);

    std::vector<double> x_;
    std::vector<Polynomial> piece_;
};

namespace detail {

inline std::vector<double> dedup_sorted(std::vector<double> pts) {
    if (pts.empty()) return pts;
    std::sort(pts.begin(), pts.end());
    double tol = PiecewisePoly::dedup_tol(pts.front(), pts.back());
    std::vector<double> out;
    out.reserve(pts.size());
    for (double v : pts) {
        if (out.empty() || v - out.back() > tol) out.push_back(v);
    }
    return out;
}

}  // namespace detail

inline PiecewisePoly merge_sum(const PiecewisePoly& f, const PiecewisePoly& g) {
    if (f.empty()) return g;
    if (g.empty()) return f;
    std::vector<double> pts;
    pts.insert(pts.end(), f.x_.begin(), f.x_.end());
    pts.insert(pts.end(), g.x_.begin(), g.x_.end());
    pts = detail::dedup_sorted(pts);
    std::vector<Polynomial> pieces;
    pieces.reserve(pts.size() - 1);
    for (size_t j = 0; j + 1 < pts.size(); ++j)
        pieces.push_back(f.local_poly_at(pts[j]) + g.local_poly_at(pts[j]));
    return PiecewisePoly::from_pieces(std::move(pts), std::move(pieces));
}

inline PiecewisePoly PiecewisePoly::operator+(const PiecewisePoly& g) const {
    return merge_sum(*this, g);
}

// H_a = a^{-1} 1_{[0,a]}.
inline PiecewisePoly box(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw NonPositiveWidth("box: width must be positive");
    if (a < kWidthFloor) throw NonPositiveWidth("box: width below representable floor");
    return PiecewisePoly::from_pieces({0.0, a}, {Polynomial::constant(1.0 / a)});
}

// f * H_a computed exactly as a^{-1}(F(x) - F(x-a)) with F the running
// antiderivative of f.  Support grows by exactly a on the right.
namespace detail {

// (q(t) - q(t-a))/a expanded term by term.  Subtracting the two shifted
// polynomials directly cancels nearly identical coefficients and the /a
// amplifies the rounding by 1/a, which is catastrophic for the tiny widths
// the mollifier schedules produce; this form never subtracts close values.
inline Polynomial difference_quotient(const Polynomial& q, double a) {
    const auto& c = q.coeffs();
    if (c.size() <= 1) return {};
    std::vector<double> d(c.size() - 1, 0.0);
    for (size_t j = 1; j < c.size(); ++j) {
        double term = c[j];
        double binom = static_cast<double>(j);  // binom(j, i) starting at i = j-1
        double apow = 1.0;                      // a^{j-i-1}
        double sign = 1.0;                      // (-1)^{j-i-1}
        for (size_t i = j; i-- > 0;) {
            d[i] += term * binom * apow * sign;
            if (i == 0) break;
            binom *= static_cast<double>(i) / static_cast<double>(j - i + 1);
            apow *= a;
            sign = -sign;
        }
    }
    return Polynomial(std::move(d));
}

}  // namespace detail

inline PiecewisePoly convolve_box(const PiecewisePoly& f, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw NonPositiveWidth("convolve_box: width must be positive");
    if (a < kWidthFloor) throw NonPositiveWidth("convolve_box: width below representable floor");
    if (f.empty()) return {};

    const auto& x = f.breakpoints();
    size_t m = f.piece_count();
    std::vector<Polynomial> anti(m);
    std::vector<double> seg(m);
    StableSum run;
    for (size_t i = 0; i < m; ++i) {
        anti[i] = f.pieces()[i].antiderivative();
        seg[i] = anti[i](f.width(i));
        run.add(seg[i]);
    }
    double total = run.value();
    double x0 = x.front(), xm = x.back();
    double snap = PiecewisePoly::dedup_tol(x0, xm + a);

    // Source-piece index owning the merged cell that starts at u.  Queries
    // within the dedup tolerance of a source breakpoint snap onto it and take
    // the piece to its right; m encodes the right constant region (F = total)
    // and m+1 the region left of the support (F = 0).
    auto cell_index = [&](double u) -> size_t {
        auto it = std::lower_bound(x.begin(), x.end(), u - snap);
        size_t i;
        if (it != x.end() && *it <= u + snap)
            i = static_cast<size_t>(it - x.begin());
        else if (it == x.begin())
            return m + 1;
        else
            i = static_cast<size_t>(it - x.begin()) - 1;
        return i >= m ? m : i;
    };
    std::vector<double> pts;
    pts.reserve(2 * x.size());
    pts.insert(pts.end(), x.begin(), x.end());
    for (double b : x) pts.push_back(b + a);
    pts = detail::dedup_sorted(pts);

    std::vector<Polynomial> pieces;
    pieces.reserve(pts.size() - 1);
    double inv_a = 1.0 / a;
    for (size_t j = 0; j + 1 < pts.size(); ++j) {
        double u = pts[j];
        size_t ir = cell_index(u), il = cell_index(u - a);
        Polynomial P;
        if (ir == il && ir < m) {
            P = detail::difference_quotient(anti[ir].taylor_shift(u - x[ir]), a);
        } else if (ir != il) {
            // The averaging window straddles source pieces, so the result
            // piece is assembled as an exact Taylor polynomial at the cell
            // start.  The constant term comes from the window integral built
            // out of O(f a)-sized parts (integrals of pieces fully inside the
            // window plus short head/tail segments); coefficient k comes from
            // derivative values of the two window-end pieces, evaluated by
            // Horner, so no cross-piece coefficient cancellation is ever
            // amplified by the division by a.
            StableSum num0;
            size_t first_full = (il == m + 1) ? 0 : il + 1;
            size_t last_full = (ir == m) ? m : ir;
            for (size_t i = first_full; i < last_full; ++i) num0.add(seg[i]);
            if (ir < m) num0.add(anti[ir](u - x[ir]));
            if (il != m + 1) {
                Polynomial tail = anti[il].taylor_shift(f.width(il));
                tail = tail - Polynomial::constant(tail.coeff(0));
                // subtract the nearby breakpoint first so the tiny width a is
                // not absorbed by rounding in the larger coordinates
                num0.add(-tail((u - x[il + 1]) - a));
            }
            std::vector<double> pc{num0.value() * inv_a};
            Polynomial dr = (ir < m) ? f.pieces()[ir] : Polynomial{};
            Polynomial dl = (il != m + 1) ? f.pieces()[il] : Polynomial{};
            double off_r = (ir < m) ? u - x[ir] : 0.0;
            double off_l = (il != m + 1) ? (u - x[il]) - a : 0.0;
            double fact = 1.0;
            for (int k = 1; !(dr.is_zero() && dl.is_zero()); ++k) {
                fact *= k;
                double vr = dr.is_zero() ? 0.0 : dr(off_r);
                double vl = dl.is_zero() ? 0.0 : dl(off_l);
                pc.push_back((vr - vl) / (fact * a));
                dr = dr.derivative();
                dl = dl.derivative();
            }
            P = Polynomial(std::move(pc));
        }
        pieces.push_back(std::move(P));
    }
    return PiecewisePoly::from_pieces(std::move(pts), std::move(pieces));
}

// H_{a_1} * ... * H_{a_k}; support is [0, sum of widths] by construction.
inline PiecewisePoly iterated_box(std::span<const double> widths) {
    if (widths.empty()) throw ConfigError("iterated_box: at least one width required");
    PiecewisePoly f = box(widths[0]);
    for (size_t i = 1; i < widths.size(); ++i) f = convolve_box(f, widths[i]);
    return f;
}

inline PiecewisePoly iterated_box(std::initializer_list<double> widths) {
    return iterated_box(std::span<const double>(widths.begin(), widths.size()));
}

struct Distributional {
    PiecewisePoly regular;
    AtomicMeasure singular;
};

namespace detail {

// Jumps of f at its breakpoints (including the two support edges).
inline std::vector<std::pair<double, double>> jumps_of(const PiecewisePoly& f) {
    std::vector<std::pair<double, double>> out;
    if (f.empty()) return out;
    const auto& x = f.breakpoints();
    size_t m = f.piece_count();
    for (size_t i = 0; i <= m; ++i) {
        double left = (i == 0) ? 0.0 : f.pieces()[i - 1](f.width(i - 1));
        double right = (i == m) ? 0.0 : f.pieces()[i](0.0);
        out.emplace_back(x[i], right - left);
    }
    return out;
}

}  // namespace detail

// Exact sup norm: piece endpoints plus critical points of each piece.
inline double sup_norm(const PiecewisePoly& f) {
    if (f.empty()) return 0.0;
    double best = 0.0;
    for (size_t i = 0; i < f.piece_count(); ++i) {
        const Polynomial& p = f.pieces()[i];
        double w = f.width(i);
        best = std::max({best, std::abs(p(0.0)), std::abs(p(w))});
        for (double r : real_roots_in(p.derivative(), 0.0, w))
            best = std::max(best, std::abs(p(r)));
    }
    return best;
}

// Distributional n-th derivative.  Jumps may only surface at the final
// differentiation step (anything earlier would produce derivatives of atoms).
// A jump is deemed real when it exceeds 1e-8 of the function's sup norm:
// deep convolution chains with widely separated width scales leave paired
// cancelling pseudo-jumps of up to ~1e-9 * sup at narrow transition cells,
// while genuine distributional content in box chains sits orders of
// magnitude above the sup of the preceding derivative.
inline Distributional derivative(const PiecewisePoly& f, int n) {
    if (n < 0) throw ConfigError("derivative: order must be nonnegative");
    Distributional d{f, {}};
    for (int step = 1; step <= n; ++step) {
        auto jumps = detail::jumps_of(d.regular);
        double tol = 1e-8 * std::max(sup_norm(d.regular), 1e-300);
        // Breakpoints are rounded to doubles, so a kink of the underlying
        // function sits up to eps*|x| away from the stored location; two
        // adjacent pieces then disagree by about slope * eps * |x| without
        // any distributional content.  Jumps below that placement noise are
        // not atoms.
        const auto& xs = d.regular.breakpoints();
        const auto& ps = d.regular.pieces();
        size_t m = ps.size();
        auto placement_noise = [&](size_t i) -> double {
            double slope = 0.0;
            if (i > 0) {
                Polynomial q = ps[i - 1].derivative();
                slope = std::max(slope, std::abs(q(d.regular.width(i - 1))));
            }
            if (i < m) slope = std::max(slope, std::abs(ps[i].derivative()(0.0)));
            return 1e3 * 2.3e-16 * std::abs(xs[i]) * slope;
        };
        std::vector<std::pair<double, double>> atoms;
        for (size_t i = 0; i < jumps.size(); ++i) {
            const auto& [loc, j] = jumps[i];
            if (std::abs(j) > std::max(tol, placement_noise(i))) atoms.emplace_back(loc, j);
        }
        if (!atoms.empty() && step < n)
            throw DistributionalDerivative(
                "derivative: order exceeds distributional representability (jump at an "
                "intermediate order)");
        if (step == n) d.singular = AtomicMeasure::from_unsorted(std::move(atoms));
        std::vector<Polynomial> dp;
        dp.reserve(d.regular.piece_count());
        for (const auto& p : d.regular.pieces()) dp.push_back(p.derivative());
        if (d.regular.empty())
            d.regular = {};
        else
            d.regular = PiecewisePoly::from_pieces(d.regular.breakpoints(), std::move(dp));
    }
    return d;
}

// Range of f over [lo, hi], counting the implicit zero extension.
inline std::pair<double, double> range_on(const PiecewisePoly& f, double lo, double hi) {
    if (!(lo <= hi)) throw ConfigError("range_on: empty interval");
    double mn = kInf, mx = -kInf;
    auto take = [&](double v) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    };
    if (f.empty() || lo < f.support_lo() || hi > f.support_hi()) take(0.0);
    if (!f.empty()) {
        take(f(lo));
        take(f(hi));
        const auto& x = f.breakpoints();
        for (size_t i = 0; i < f.piece_count(); ++i) {
            double a = std::max(x[i], lo), b = std::min(x[i + 1], hi);
            if (!(a < b)) continue;
            const Polynomial& p = f.pieces()[i];
            take(p(a - x[i]));
            take(p(b - x[i]));
            for (double r : real_roots_in(p.derivative(), a - x[i], b - x[i])) take(p(r));
        }
    }
    return {mn, mx};
}

// Integral of |f|^p (i.e. the p-th power of the L^p quasinorm), 0 < p <= 1.
// Pieces are split at their real roots so every panel sees a sign-constant
// polynomial; adaptive GL16 handles the |.|^p endpoint singularities.
inline double lp_quasinorm(const PiecewisePoly& f, double p, double tol = 1e-10) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("lp_quasinorm: p must lie in (0, 1]");
    if (!(tol > 0.0)) throw ConfigError("lp_quasinorm: tol must be positive");
    if (f.empty()) return 0.0;

    struct Cell {
        Polynomial poly;  // re-expanded so the singular end sits at t = 0
        double len;
    };
    std::vector<Cell> cells;
    double total_len = 0.0;
    // Cell ends lie on roots or piece edges, exactly where |q|^p drives the
    // deepest refinement.  Evaluating the piece polynomial from its own origin
    // there suffers Horner cancellation (absolute noise ~ eps * |coeffs|,
    // relative noise unbounded near a root), which stalls the adaptive accept
    // tests.  Splitting each cell at its midpoint and expanding either half at
    // its outer end keeps the relative noise at machine scale near t = 0.
    auto push_cell = [&cells](const Polynomial& src, double a, double b) {
        double half = 0.5 * (b - a);
        if (!(half > 0.0)) return;
        cells.push_back({src.taylor_shift(a), half});
        Polynomial r = src.taylor_shift(b);
        std::vector<double> rc = r.coeffs();
        for (size_t k = 1; k < rc.size(); k += 2) rc[k] = -rc[k];
        cells.push_back({Polynomial(std::move(rc)), half});
    };
    for (size_t i = 0; i < f.piece_count(); ++i) {
        const Polynomial& poly = f.pieces()[i];
        double w = f.width(i);
        total_len += w;
        if (poly.is_zero()) continue;
        std::vector<double> cuts = real_roots_in(poly, 0.0, w);
        double prev = 0.0;
        for (double r : cuts) {
            if (r > prev) push_cell(poly, prev, r);
            prev = std::max(prev, r);
        }
        if (w > prev) push_cell(poly, prev, w);
    }
    if (cells.empty()) return 0.0;

    StableSum coarse;
    for (const auto& c : cells)
        coarse.add(gl16([&](double t) { return std::pow(std::abs(c.poly(t)), p); }, 0.0, c.len));
    double scale = std::abs(coarse.value());
    if (scale == 0.0) scale = 1e-300;
    double budget_total = tol * scale;

    StableSum value, err;
    for (const auto& c : cells) {
        double budget = std::max(budget_total * (c.len / total_len), 1e-300);
        auto r = integrate_adaptive([&](double t) { return std::pow(std::abs(c.poly(t)), p); },
                                    0.0, c.len, budget);
        value.add(r.value);
        err.add(r.err);
    }
    if (err.value() > 50.0 * budget_total)
        throw QuadratureNonConvergence("lp_quasinorm: adaptive refinement exceeded depth cap");
    return value.value();
}

// l^p sum of atom masses: ||mu||_{l^p}^p.
inline double lp_atomic(const AtomicMeasure& mu, double p) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("lp_atomic: p must lie in (0, 1]");
    StableSum s;
    for (const auto& [loc, mass] : mu.atoms) s.add(std::pow(std::abs(mass), p));
    return s.value();
}

// (mu * f)(x) = sum_j b_j f(x - x_j), exact piecewise-polynomial result.
inline PiecewisePoly convolve_atomic(const AtomicMeasure& mu, const PiecewisePoly& f) {
    if (mu.empty() || f.empty()) return {};
    struct Src {
        double lo, hi;
        const Polynomial* poly;
        double weight;
    };
    std::vector<Src> srcs;
    std::vector<double> pts;
    srcs.reserve(mu.atoms.size() * f.piece_count());
    const auto& x = f.breakpoints();
    for (const auto& [s, b] : mu.atoms) {
        for (size_t i = 0; i < f.piece_count(); ++i) {
            srcs.push_back({x[i] + s, x[i + 1] + s, &f.pieces()[i], b});
            pts.push_back(x[i] + s);
            pts.push_back(x[i + 1] + s);
        }
    }
    pts = detail::dedup_sorted(pts);
    std::vector<Polynomial> pieces(pts.size() - 1);
    double tol = PiecewisePoly::dedup_tol(pts.front(), pts.back());
    for (const auto& src : srcs) {
        auto first = std::lower_bound(pts.begin(), pts.end(), src.lo - tol);
        auto last = std::lower_bound(pts.begin(), pts.end(), src.hi - tol);
        for (auto it = first; it < last; ++it) {
            size_t j = static_cast<size_t>(it - pts.begin());
            if (j >= pieces.size()) break;
            pieces[j] = pieces[j] + src.poly->taylor_shift(pts[j] - src.lo).scaled(src.weight);
        }
    }
    return PiecewisePoly::from_pieces(std::move(pts), std::move(pieces));
}

// Atomic part of the n-th derivative of H_{a_1}*...*H_{a_n}: the expansion of
// prod_j (delta_0 - delta_{a_j}) / a_j into 2^n signed atoms at subset sums.
inline AtomicMeasure box_chain_derivative_atoms(std::span<const double> widths) {
    std::vector<std::pair<double, double>> atoms{{0.0, 1.0}};
    for (double a : widths) {
        if (!(a > 0.0)) throw NonPositiveWidth("box_chain_derivative_atoms: width must be positive");
        std::vector<std::pair<double, double>> next;
        next.reserve(atoms.size() * 2);
        double inv = 1.0 / a;
        for (const auto& [loc, mass] : atoms) {
            next.emplace_back(loc, mass * inv);
            next.emplace_back(loc + a, -mass * inv);
        }
        atoms = std::move(next);
    }
    return AtomicMeasure::from_unsorted(std::move(atoms));
}

// ---------------------------------------------------------------------------
// Grid oracles (testing only): slow reference implementations on uniform
// grids, used to cross-check the exact convolution arithmetic.

struct SampledFunction {
    double x0 = 0.0;
    double h = 0.0;
    std::vector<double> values;

    double x_at(size_t i) const { return x0 + h * static_cast<double>(i); }
};

inline SampledFunction sample(const PiecewisePoly& f, double h) {
    if (!(h > 0.0)) throw ConfigError("sample: step must be positive");
    SampledFunction s;
    if (f.empty()) return s;
    s.x0 = f.support_lo();
    s.h = h;
    auto n = static_cast<size_t>(std::floor((f.support_hi() - s.x0) / h)) + 1;
    s.values.resize(n + 1);
    for (size_t i = 0; i <= n; ++i) s.values[i] = f(s.x0 + h * static_cast<double>(i));
    return s;
}

// Direct discrete convolution, O(N*M).
inline SampledFunction grid_oracle_convolve(const SampledFunction& f, const SampledFunction& g) {
    if (f.values.empty() || g.values.empty()) return {};
    if (!nearly_equal(f.h, g.h, 1e-12)) throw ConfigError("grid_oracle_convolve: step mismatch");
    SampledFunction out;
    out.x0 = f.x0 + g.x0;
    out.h = f.h;
    out.values.assign(f.values.size() + g.values.size() - 1, 0.0);
    for (size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] == 0.0) continue;
        for (size_t j = 0; j < g.values.size(); ++j)
            out.values[i + j] += f.values[i] * g.values[j] * f.h;
    }
    return out;
}

// Grid oracle for H_{a_1} * ... * H_{a_k}, built without the exact
// convolution machinery.  The first two factors enter through the closed-form
// antiderivative of the box (plain clamp arithmetic), so the sampled start is
// continuous; later factors are folded in with grid_convolve_box.  Keeping a
// raw sampled box out of the pipeline avoids first-order error at its jumps.
inline SampledFunction grid_box_chain(std::span<const double> widths, double h);

// Sliding-window trapezoid oracle for f * H_a, O(N).  Window endpoints that
// fall between grid nodes are handled by linear interpolation.
inline SampledFunction grid_convolve_box(const SampledFunction& f, double a) {
    if (!(a > 0.0)) throw NonPositiveWidth("grid_convolve_box: width must be positive");
    if (f.values.empty()) return {};
    double h = f.h;
    size_t n = f.values.size();
    std::vector<double> prefix(n, 0.0);  // trapezoid integral from x0 to node i
    for (size_t i = 1; i < n; ++i)
        prefix[i] = prefix[i - 1] + 0.5 * h * (f.values[i - 1] + f.values[i]);
    auto value_at = [&](double x) -> double {
        double u = (x - f.x0) / h;
        if (u < 0.0 || u > static_cast<double>(n - 1)) return 0.0;
        auto i = static_cast<size_t>(u);
        if (i >= n - 1) return f.values[n - 1];
        double frac = u - static_cast<double>(i);
        return f.values[i] + frac * (f.values[i + 1] - f.values[i]);
    };
    auto integral_to = [&](double x) -> double {
        if (x <= f.x0) return 0.0;
        double xe = f.x0 + h * static_cast<double>(n - 1);
        if (x >= xe) return prefix[n - 1];
        double u = (x - f.x0) / h;
        auto i = static_cast<size_t>(u);
        double xi = f.x0 + h * static_cast<double>(i);
        return prefix[i] + 0.5 * (x - xi) * (f.values[i] + value_at(x));
    };
    SampledFunction out;
    out.x0 = f.x0;
    out.h = h;
    size_t extra = static_cast<size_t>(std::ceil(a / h)) + 1;
    out.values.assign(n + extra, 0.0);
    for (size_t i = 0; i < out.values.size(); ++i) {
        double x = out.x0 + h * static_cast<double>(i);
        out.values[i] = (integral_to(x) - integral_to(x - a)) / a;
    }
    return out;
}

inline SampledFunction grid_box_chain(std::span<const double> widths, double h) {
    if (widths.empty()) throw ConfigError("grid_box_chain: at least one width required");
    if (!(h > 0.0)) throw ConfigError("grid_box_chain: step must be positive");
    for (double a : widths)
        if (!(a > 0.0)) throw NonPositiveWidth("grid_box_chain: widths must be positive");
    SampledFunction g;
    g.x0 = 0.0;
    g.h = h;
    if (widths.size() == 1) {
        double a = widths[0];
        auto n = static_cast<size_t>(std::floor(a / h)) + 1;
        g.values.resize(n + 1, 0.0);
        for (size_t i = 0; i <= n; ++i) {
            double x = h * static_cast<double>(i);
            g.values[i] = (x >= 0.0 && x <= a) ? 1.0 / a : 0.0;
        }
        return g;
    }
    double a1 = widths[0], a2 = widths[1];
    auto F1 = [&](double x) { return std::min(std::max(x, 0.0), a1); };
    auto n = static_cast<size_t>(std::ceil((a1 + a2) / h)) + 1;
    g.values.resize(n + 1, 0.0);
    for (size_t i = 0; i <= n; ++i) {
        double x = h * static_cast<double>(i);
        g.values[i] = (F1(x) - F1(x - a2)) / (a1 * a2);
    }
    for (size_t j = 2; j < widths.size(); ++j) g = grid_convolve_box(g, widths[j]);
    return g;
}

}  // namespace carleman
