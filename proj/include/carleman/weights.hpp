#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "carleman/numeric.hpp"

namespace carleman {

struct NonPositiveWeight : ConfigError {
    using ConfigError::ConfigError;
};
// A +inf weight entry was touched by a functional that needs finite values.
struct DegenerateInfinite : ComputationError {
    using ComputationError::ComputationError;
};
struct DivergentTail : ComputationError {
    using ComputationError::ComputationError;
};
struct NotApplicable : ComputationError {
    using ComputationError::ComputationError;
};
struct InconclusiveVerdict : ComputationError {
    using ComputationError::ComputationError;
};

enum class Family : std::uint8_t {
    constant,
    gevrey,
    factorial,
    exp_char,
    sobolev_degenerate,
    minorant_char,
    table,
};

enum class TailRule : std::uint8_t { none, log_linear };
enum class Confidence : std::uint8_t { analytic, heuristic };

inline const char* to_string(Confidence c) {
    return c == Confidence::analytic ? "analytic" : "heuristic";
}

// Weight sequence M_n kept exclusively in log-domain.  Builtin families
// evaluate from closed forms; tables carry explicit logM values plus an
// optional log-linear extrapolation rule.  Shifts are index offsets and
// scaling is an additive log constant, so both compose bit-identically.
class WeightSequence {
  public:
    static WeightSequence constant(double c) {
        require(c > 0.0 && std::isfinite(c), "constant weight must be positive");
        WeightSequence w(Family::constant);
        w.a_ = std::log(c);
        return w;
    }

    static WeightSequence gevrey(double sigma) {
        require(sigma > 0.0 && std::isfinite(sigma), "gevrey exponent must be positive");
        WeightSequence w(Family::gevrey);
        w.a_ = sigma;
        return w;
    }

    static WeightSequence factorial() {
        WeightSequence w(Family::factorial);
        w.a_ = 1.0;
        return w;
    }

    // M_n = e^{c (1-p)^{-n}}, tied to the stated p.
    static WeightSequence exp_char(double c, double p) {
        require(c > 0.0 && std::isfinite(c), "exp_char scale must be positive");
        require(p > 0.0 && p < 1.0, "exp_char must be bound to p in (0,1)");
        WeightSequence w(Family::exp_char);
        w.a_ = c;
        w.pb_ = p;
        return w;
    }

    // M_n = 1 for n <= k, +inf beyond.
    static WeightSequence sobolev_degenerate(int k) {
        require(k >= 0, "sobolev_degenerate needs k >= 0");
        WeightSequence w(Family::sobolev_degenerate);
        w.k_ = k;
        return w;
    }

    // N_n = C1 e^{c0 (n+1)^{-1} (1-p)^{-n}}.
    static WeightSequence minorant_char(double c0, double log_c1, double p) {
        require(c0 > 0.0 && std::isfinite(c0), "minorant scale must be positive");
        require(std::isfinite(log_c1), "minorant C1 must be positive and finite");
        require(p > 0.0 && p < 1.0, "minorant must be bound to p in (0,1)");
        WeightSequence w(Family::minorant_char);
        w.a_ = c0;
        w.b_ = log_c1;
        w.pb_ = p;
        return w;
    }

    static WeightSequence table(std::vector<double> log_values, TailRule rule) {
        require(!log_values.empty(), "table weight needs at least one entry");
        size_t first_inf = log_values.size();
        for (size_t i = 0; i < log_values.size(); ++i) {
            double v = log_values[i];
            if (std::isnan(v) || v == -kInf)
                throw NonPositiveWeight("table entries must be log of positive weights");
            if (v == kInf && first_inf == log_values.size()) first_inf = i;
            if (first_inf < i && v != kInf)
                throw ConfigError("table: +inf entries are legal only as a terminal tail");
        }
        if (rule == TailRule::log_linear) {
            if (first_inf != log_values.size())
                throw ConfigError("table: tail rule cannot extend past +inf entries");
            if (log_values.size() < 2)
                throw ConfigError("table: tail rule needs at least two entries");
        }
        WeightSequence w(Family::table);
        w.tab_ = std::move(log_values);
        w.rule_ = rule;
        return w;
    }

    Family family() const { return fam_; }
    int shift_offset() const { return off_; }
    double log_scale() const { return logscale_; }
    double bound_p() const { return pb_; }
    double param() const { return a_; }

    // Largest n with a defined value; INT_MAX when the sequence extends
    // indefinitely (families, or tables with an extrapolation rule).
    int horizon() const {
        if (fam_ == Family::table && rule_ == TailRule::none)
            return static_cast<int>(tab_.size()) - 1 - off_;
        return std::numeric_limits<int>::max();
    }

    // Index of the first +inf entry (in the shifted view), or -1 if none.
    int first_infinite() const {
        if (fam_ == Family::sobolev_degenerate) return std::max(k_ - off_ + 1, 0);
        if (fam_ == Family::table) {
            for (size_t i = 0; i < tab_.size(); ++i)
                if (tab_[i] == kInf) return std::max(static_cast<int>(i) - off_, 0);
        }
        return -1;
    }

    double logm(int n) const {
        if (n < 0) throw ConfigError("weight index must be nonnegative");
        long idx = static_cast<long>(n) + off_;
        switch (fam_) {
            case Family::constant:
                return a_ + logscale_;
            case Family::gevrey:
            case Family::factorial:
                return a_ * std::lgamma(static_cast<double>(idx) + 1.0) + logscale_;
            case Family::exp_char:
                return a_ * std::pow(1.0 - pb_, -static_cast<double>(idx)) + logscale_;
            case Family::sobolev_degenerate:
                return idx <= k_ ? logscale_ : kInf;
            case Family::minorant_char:
                return b_ +
                       a_ * std::pow(1.0 - pb_, -static_cast<double>(idx)) /
                           (static_cast<double>(idx) + 1.0) +
                       logscale_;
            case Family::table: {
                auto size = static_cast<long>(tab_.size());
                if (idx < size) return tab_[static_cast<size_t>(idx)] + logscale_;
                if (rule_ == TailRule::none)
                    throw ConfigError("table weight exhausted without a tail rule");
                double last = tab_[static_cast<size_t>(size - 1)];
                double slope = last - tab_[static_cast<size_t>(size - 2)];
                return last + slope * static_cast<double>(idx - (size - 1)) + logscale_;
            }
        }
        throw ComputationError("unreachable weight family");
    }

    WeightSequence shifted(int k) const {
        require(k >= 0, "shift must be nonnegative");
        WeightSequence w = *this;
        w.off_ += k;
        if (fam_ == Family::table && static_cast<size_t>(w.off_) >= tab_.size() &&
            rule_ == TailRule::none)
            throw ConfigError("shift exhausts the weight table");
        return w;
    }

    // Multiplies every M_n by c, i.e. adds log c throughout.
    WeightSequence scaled(double c) const {
        require(c > 0.0 && std::isfinite(c), "scale factor must be positive");
        WeightSequence w = *this;
        w.logscale_ += std::log(c);
        return w;
    }

    std::string describe() const {
        std::string base;
        switch (fam_) {
            case Family::constant: base = "const:" + std::to_string(std::exp(a_)); break;
            case Family::gevrey: base = "gevrey:" + std::to_string(a_); break;
            case Family::factorial: base = "factorial"; break;
            case Family::exp_char:
                base = "expchar:" + std::to_string(a_) + "@" + std::to_string(pb_);
                break;
            case Family::sobolev_degenerate: base = "sobolev:" + std::to_string(k_); break;
            case Family::minorant_char:
                base = "minorant:" + std::to_string(a_) + "@" + std::to_string(pb_);
                break;
            case Family::table: base = "table[" + std::to_string(tab_.size()) + "]"; break;
        }
        if (off_ != 0) base += "|shift:" + std::to_string(off_);
        if (logscale_ != 0.0) base += "|scale:" + std::to_string(std::exp(logscale_));
        return base;
    }

    int degenerate_order() const { return k_; }

  private:
    explicit WeightSequence(Family f) : fam_(f) {}

    static void require(bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    }

    Family fam_;
    double a_ = 0.0;   // constant: log c; gevrey/factorial: sigma; exp_char/minorant: c0
    double b_ = 0.0;   // minorant: log C1
    double pb_ = 0.0;  // bound p for exp_char / minorant
    int k_ = 0;        // sobolev degeneracy order
    int off_ = 0;      // shift offset
    double logscale_ = 0.0;
    std::vector<double> tab_;
    TailRule rule_ = TailRule::none;
};

struct LogConvexity {
    bool ok = true;
    int first_violation = -1;
};

// logM(n-1) + logM(n+1) >= 2 logM(n) with absolute log-domain tolerance
// 1e-12.  +inf entries participate as "infinitely convex" right tails.
inline LogConvexity is_log_convex(const WeightSequence& m, int n_lo, int n_hi) {
    if (n_lo < 0 || n_hi < n_lo) throw ConfigError("is_log_convex: bad range");
    n_hi = std::min(n_hi, m.horizon());
    for (int n = n_lo + 1; n < n_hi; ++n) {
        double a = m.logm(n - 1), b = m.logm(n), c = m.logm(n + 1);
        if (c == kInf) break;  // terminal +inf tail
        if (a + c < 2.0 * b - 1e-12) return {false, n};
    }
    return {true, -1};
}

// Minimum over 0 <= j <= n of log(M_0 M_n) - log(M_j M_{n-j}); the algebra
// property needs this slack nonnegative (up to rounding).
inline double product_bound_check(const WeightSequence& m, int n) {
    if (n < 0) throw ConfigError("product_bound_check: n must be nonnegative");
    if (n > m.horizon()) throw ConfigError("product_bound_check: beyond table horizon");
    double base = m.logm(0) + m.logm(n);
    double worst = kInf;
    for (int j = 0; j <= n; ++j) worst = std::min(worst, base - m.logm(j) - m.logm(n - j));
    return worst;
}

enum class KappaStatus : std::uint8_t { finite, diverged, inconclusive };

struct KappaResult {
    KappaStatus status = KappaStatus::inconclusive;
    double value = 0.0;        // certified when finite, else the partial sum
    int truncation_index = 0;  // last summed j
    double tail_bound = 0.0;   // certified |remainder| bound when finite
    double term_floor = 0.0;   // diverged: positive floor hit by infinitely many terms
    std::string note;
};

namespace detail {

// Geometric tail sums from index J+1 on: sum q^j, sum j q^j, sum j^2 q^j.
inline double geo_tail0(int J, double q) { return std::pow(q, J + 1) / (1.0 - q); }

inline double geo_tail1(int J, double q) {
    double j1 = static_cast<double>(J) + 1.0;
    return std::pow(q, J + 1) * (j1 * (1.0 - q) + q) / ((1.0 - q) * (1.0 - q));
}

inline double geo_tail2(int J, double q) {
    double j1 = static_cast<double>(J) + 1.0;
    double A = j1 - static_cast<double>(J) * q;  // (J+1) - Jq
    double num = (j1 * A - static_cast<double>(J) * q) * (1.0 - q) + 2.0 * q * A;
    return std::pow(q, J + 1) * num / std::pow(1.0 - q, 3);
}

// Certified upper bound on |sum_{j>J} q^j logM_j| for sequences whose tail
// structure is known, or +inf when no certificate exists (bare tables).
inline double kappa_tail_bound(const WeightSequence& m, double p, int J) {
    double q = 1.0 - p;
    double scale_part = std::abs(m.log_scale()) * geo_tail0(J, q);
    switch (m.family()) {
        case Family::constant:
            return std::abs(m.logm(0)) * geo_tail0(J, q);
        case Family::gevrey:
        case Family::factorial: {
            // log (j+off)! <= (j+off)^2, so the tail is dominated by a
            // quadratic-geometric sum.
            double off = m.shift_offset();
            double sigma = m.param();
            return sigma * (geo_tail2(J, q) + 2.0 * off * geo_tail1(J, q) +
                            off * off * geo_tail0(J, q)) +
                   scale_part;
        }
        case Family::exp_char: {
            double Q = 1.0 - m.bound_p();
            double g = q / Q;
            if (g >= 1.0) return kInf;  // divergent; handled elsewhere
            double c_eff = m.param() * std::pow(Q, -m.shift_offset());
            return c_eff * std::pow(g, J + 1) / (1.0 - g) + scale_part;
        }
        case Family::minorant_char: {
            double Q = 1.0 - m.bound_p();
            double g = q / Q;
            if (g >= 1.0) return kInf;
            double c_eff = m.param() * std::pow(Q, -m.shift_offset());
            double denom = static_cast<double>(J) + m.shift_offset() + 2.0;
            return c_eff * std::pow(g, J + 1) / (denom * (1.0 - g)) +
                   (std::abs(m.logm(0)) + c_eff) * geo_tail0(J, q);
        }
        case Family::sobolev_degenerate:
            return kInf;
        case Family::table: {
            if (m.horizon() < std::numeric_limits<int>::max()) return kInf;
            // log-linear tail: logm(j) = A + B (j - J0) exactly beyond the
            // table, and |A + B(j-J0)| <= |A| + |B|(j-J0) for the bound.
            int j0 = J + 1;
            double A = m.logm(j0);
            double B = m.logm(j0 + 1) - A;  // beyond the table this is the exact slope
            double s0 = geo_tail0(J, q), s1 = geo_tail1(J, q);
            return std::abs(A - B * j0) * s0 + std::abs(B) * s1;
        }
    }
    return kInf;
}

}  // namespace detail

// kappa(p, M) = sum_{j>=1} (1-p)^j log M_j.  Finite status carries a
// certified remainder bound; divergence is only reported when the family
// structure proves a positive floor under infinitely many terms.  Table
// sequences without a tail rule end inconclusive at their horizon.
inline KappaResult kappa(const WeightSequence& m, double p, double tol = 1e-12,
                         int n_max = 200) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("kappa: p must lie in (0,1)");
    if (!(tol > 0.0)) throw ConfigError("kappa: tol must be positive");
    if (n_max < 1) throw ConfigError("kappa: n_max must be >= 1");
    double q = 1.0 - p;

    int fi = m.first_infinite();
    if (fi >= 0) throw DegenerateInfinite("kappa: weight sequence has +inf entries");

    // Family-level divergence certificates.
    if (m.family() == Family::exp_char || m.family() == Family::minorant_char) {
        double Q = 1.0 - m.bound_p();
        if (q >= Q) {
            KappaResult r;
            r.status = KappaStatus::diverged;
            StableSum s;
            int J = std::min(n_max, 64);
            for (int j = 1; j <= J; ++j) s.add(std::pow(q, j) * m.logm(j));
            r.value = s.value();
            r.truncation_index = J;
            if (m.family() == Family::exp_char) {
                double c_eff = m.param() * std::pow(Q, -m.shift_offset());
                r.term_floor = c_eff;
                r.note = (q == Q) ? "terms approach a positive constant"
                                  : "terms grow without bound";
            } else {
                r.term_floor = 0.0;
                r.note = (q == Q) ? "harmonic minorization: terms ~ c0/(j+1)"
                                  : "terms grow without bound";
            }
            return r;
        }
    }

    // Hard cap for internal extension when certifying a tail; tables without
    // a rule stop at their horizon.
    int cap = std::min(m.horizon(), std::max(n_max, 400000));

    auto convex = is_log_convex(m, 0, std::min(cap, 4000));
    if (!convex.ok)
        throw ConfigError("kappa: weight sequence is not log-convex (violation at n=" +
                          std::to_string(convex.first_violation) + ")");

    StableSum sum;
    KappaResult r;
    for (int j = 1; j <= cap; ++j) {
        double lm = m.logm(j);
        if (lm == -kInf) throw NonPositiveWeight("kappa: encountered log M = -inf");
        if (lm == kInf) throw DegenerateInfinite("kappa: encountered +inf weight");
        sum.add(std::pow(q, j) * lm);
        bool check_now = (j >= n_max) || j == cap || (j % 16 == 0 && j >= 32);
        if (!check_now) continue;
        double tail = detail::kappa_tail_bound(m, p, j);
        if (tail <= tol) {
            r.status = KappaStatus::finite;
            r.value = sum.value();
            r.truncation_index = j;
            r.tail_bound = tail;
            return r;
        }
    }
    r.status = KappaStatus::inconclusive;
    r.value = sum.value();
    r.truncation_index = cap;
    r.tail_bound = kInf;
    r.note = (m.horizon() < std::numeric_limits<int>::max())
                 ? "table horizon reached without tail certificate"
                 : "tail certificate not reached within extension cap";
    return r;
}

struct AssociatedN {
    double log_n = 0.0;
    double tail_bound = 0.0;
    int terms_used = 0;
};

// log N_{n,theta} = theta (1-p)^{-n} + sum_{j>=1} (1-p)^{j-1} p logM(n+j),
// truncated at K with a certified remainder carried over from the kappa tail
// machinery applied to the shifted sequence.
inline AssociatedN associated_N(const WeightSequence& m, double p, double theta, int n,
                                int K, double tol = 1e-10) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("associated_N: p must lie in (0,1)");
    if (theta < 0.0) throw ConfigError("associated_N: theta must be nonnegative");
    if (n < 0 || K < 1) throw ConfigError("associated_N: bad indices");
    double q = 1.0 - p;

    WeightSequence shifted = m.shifted(n);
    KappaResult probe = kappa(shifted, p, std::max(tol * q / p, 1e-300),
                              std::min(K, shifted.horizon()));
    if (probe.status == KappaStatus::diverged)
        throw DivergentTail("associated_N: kappa diverges for the shifted sequence");

    int terms = std::min(K, shifted.horizon() - 1);
    if (terms < 1) throw ConfigError("associated_N: table horizon too short");
    StableSum s;
    s.add(theta * std::pow(q, -n));
    for (int j = 1; j <= terms; ++j) s.add(std::pow(q, j - 1) * p * shifted.logm(j));
    double tail = detail::kappa_tail_bound(shifted, p, terms) * p / q;
    return {s.value(), tail, terms};
}

enum class QAVerdict : std::uint8_t { quasianalytic, non_quasianalytic };

struct DenjoyCarlemanReport {
    QAVerdict verdict;
    Confidence confidence;
    std::string note;
};

// Denjoy-Carleman dichotomy through sum M_n/M_{n+1}: closed-form for builtin
// families, windowed partial-sum heuristics for tables.
inline DenjoyCarlemanReport denjoy_carleman(const WeightSequence& m, int n_max = 200) {
    if (n_max < 8) throw ConfigError("denjoy_carleman: n_max too small");
    switch (m.family()) {
        case Family::constant:
            return {QAVerdict::quasianalytic, Confidence::analytic, "ratio terms identically 1"};
        case Family::factorial:
            return {QAVerdict::quasianalytic, Confidence::analytic,
                    "harmonic ratio sum diverges"};
        case Family::gevrey:
            if (m.param() <= 1.0)
                return {QAVerdict::quasianalytic, Confidence::analytic,
                        "sum (n+1)^{-sigma} diverges for sigma <= 1"};
            return {QAVerdict::non_quasianalytic, Confidence::analytic,
                    "sum (n+1)^{-sigma} converges for sigma > 1"};
        case Family::exp_char:
        case Family::minorant_char:
            return {QAVerdict::non_quasianalytic, Confidence::analytic,
                    "super-geometric growth makes the ratio sum converge"};
        case Family::sobolev_degenerate:
            return {QAVerdict::non_quasianalytic, Confidence::analytic,
                    "ratio terms vanish past the degeneracy order"};
        case Family::table:
            break;
    }
    int hi = std::min(n_max, m.horizon() - 1);
    if (hi < 8) throw InconclusiveVerdict("denjoy_carleman: table too short");
    int lo = hi / 2;
    double min_nu = kInf;
    bool ratio_summable = true;
    double prev_u = std::exp(m.logm(lo - 1) - m.logm(lo));
    for (int n = lo; n <= hi; ++n) {
        double u = std::exp(m.logm(n) - m.logm(n + 1));
        min_nu = std::min(min_nu, u * static_cast<double>(n));
        if (!(u <= 0.999 * prev_u) && !(u < 1e-12)) ratio_summable = false;
        prev_u = u;
    }
    if (min_nu >= 0.1)
        return {QAVerdict::quasianalytic, Confidence::heuristic,
                "window min of n*M_n/M_{n+1} stays above 0.1"};
    if (ratio_summable)
        return {QAVerdict::non_quasianalytic, Confidence::heuristic,
                "ratio terms decay geometrically across the window"};
    throw InconclusiveVerdict("denjoy_carleman: neither table heuristic fired");
}

struct PRegularReport {
    bool regular = false;
    int clause = 0;            // 1 or 2
    double liminf_scaled = 0;  // window estimate of liminf (1-p)^n log M_n
    double delta_proof = 0;    // window estimate of liminf log M_n / (n log n)
    double delta_def = 0;      // reciprocal convention: liminf n log n / log M_n
    bool delta_infinite = false;
    Confidence confidence = Confidence::heuristic;
    std::string note;
};

// p-regularity (only defined when kappa diverges): clause 1 asks
// liminf (1-p)^n logM_n > 0; clause 2 asks that quantity to vanish while
// logM_n / (n log n) stays above 1.  Two delta conventions circulate
// (ratio and its reciprocal); both estimates are reported and the note
// records which one the verdict used.
inline PRegularReport p_regular(const WeightSequence& m, double p, int n_max = 200) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("p_regular: p must lie in (0,1)");
    KappaResult k = kappa(m, p, 1e-10, n_max);
    if (k.status == KappaStatus::finite)
        throw NotApplicable("p_regular: kappa is finite");
    bool kappa_certified = (k.status == KappaStatus::diverged);
    double q = 1.0 - p;
    int hi = std::min(n_max, m.horizon());
    int lo = std::max(hi / 2, 2);

    PRegularReport r;
    r.liminf_scaled = kInf;
    r.delta_proof = kInf;
    for (int n = lo; n <= hi; ++n) {
        r.liminf_scaled = std::min(r.liminf_scaled, std::pow(q, n) * m.logm(n));
        double nd = static_cast<double>(n);
        r.delta_proof = std::min(r.delta_proof, m.logm(n) / (nd * std::log(nd)));
    }
    r.delta_def = (r.delta_proof > 0.0) ? 1.0 / r.delta_proof : kInf;

    bool analytic_family =
        m.family() == Family::exp_char || m.family() == Family::minorant_char;
    if (analytic_family) {
        r.confidence = Confidence::analytic;
        double Q = 1.0 - m.bound_p();
        if (m.family() == Family::exp_char) {
            // (1-p)^n logM_n = c_eff (q/Q)^n (+ vanishing scale term)
            r.clause = 1;
            r.regular = true;
            r.delta_infinite = true;
            r.note = (q == Q) ? "clause 1: scaled sequence is exactly constant"
                              : "clause 1: scaled sequence grows";
            return r;
        }
        // minorant: p == bound_p gives clause 2 with delta = +inf; p < bound_p
        // pushes the scaled sequence to +inf (clause 1).
        if (q > Q) {
            r.clause = 1;
            r.regular = true;
            r.delta_infinite = true;
            r.note = "clause 1: scaled minorant grows";
        } else {
            r.clause = 2;
            r.regular = true;
            r.delta_infinite = true;
            r.note = "clause 2: scaled sequence ~ c0/(n+1) -> 0, delta = +inf";
        }
        return r;
    }

    // Generic window tests (heuristic).
    double head = std::pow(q, lo) * m.logm(lo);
    double tail_v = std::pow(q, hi) * m.logm(hi);
    if (r.liminf_scaled > 1e-6) {
        r.clause = 1;
        r.regular = true;
        r.note = "clause 1: window min of (1-p)^n logM_n positive";
    } else if (tail_v <= 0.9 * std::max(head, 1e-300) && r.delta_proof > 1.0) {
        r.clause = 2;
        r.regular = true;
        r.note = "clause 2: scaled sequence decays and delta (ratio convention) > 1";
    } else {
        r.regular = false;
        r.note = "no clause certified on the window";
    }
    if (!kappa_certified) r.note += "; kappa divergence itself not certified";
    return r;
}

struct DecayRegularReport {
    bool regular = false;
    int clause = 0;         // 1: ratio >= eps^n with fitted eps; 2: convergent ratio sum
    double epsilon_fit = 0; // clause 1 witness
    double sum_partial = 0; // clause 2 partial sum
    Confidence confidence = Confidence::heuristic;
    std::string note;
};

// Decay regularity (only defined when kappa is finite).  Builtin families get
// closed-form verdicts; tables only attempt the clause-1 fit, requiring the
// per-n exponent to stabilize instead of sliding off to -inf.
inline DecayRegularReport decay_regular(const WeightSequence& m, double p, int n_max = 200) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("decay_regular: p must lie in (0,1)");
    KappaResult k = kappa(m, p, 1e-10, n_max);
    if (k.status == KappaStatus::diverged)
        throw NotApplicable("decay_regular: kappa diverges");

    DecayRegularReport r;
    switch (m.family()) {
        case Family::constant:
            r.regular = true;
            r.clause = 1;
            r.epsilon_fit = 1.0;
            r.confidence = Confidence::analytic;
            r.note = "ratios identically 1";
            return r;
        case Family::factorial:
        case Family::gevrey: {
            double sigma = m.param();
            if (sigma > 1.0) {
                r.regular = true;
                r.clause = 2;
                r.confidence = Confidence::analytic;
                StableSum s;
                for (int n = 0; n <= n_max; ++n) s.add(std::exp(m.logm(n) - m.logm(n + 1)));
                r.sum_partial = s.value();
                r.note = "sum (n+1)^{-sigma} converges";
                return r;
            }
            // ratio_n = (n+1+off)^{-sigma} >= eps^n with
            // eps = exp(min_n -sigma log(n+1+off)/n), minimized at n = 1.
            r.regular = true;
            r.clause = 1;
            r.epsilon_fit = std::exp(-sigma * std::log(2.0 + m.shift_offset()));
            r.confidence = Confidence::analytic;
            r.note = "polynomial ratio decay fits a geometric floor";
            return r;
        }
        case Family::exp_char:
        case Family::minorant_char: {
            // kappa finite forces p > bound_p here; the ratio terms decay
            // super-geometrically, so the sum converges.
            r.regular = true;
            r.clause = 2;
            r.confidence = Confidence::analytic;
            StableSum s;
            for (int n = 0; n <= std::min(n_max, 60); ++n)
                s.add(std::exp(m.logm(n) - m.logm(n + 1)));
            r.sum_partial = s.value();
            r.note = "super-geometric weight growth";
            return r;
        }
        case Family::sobolev_degenerate:
            throw DegenerateInfinite("decay_regular: degenerate sequence");
        case Family::table:
            break;
    }

    int hi = std::min(n_max, m.horizon() - 1);
    if (hi < 4) throw InconclusiveVerdict("decay_regular: table too short");
    double overall_min = kInf, late_min = kInf;
    for (int n = 1; n <= hi; ++n) {
        double s_n = (m.logm(n) - m.logm(n + 1)) / static_cast<double>(n);
        overall_min = std::min(overall_min, s_n);
        if (n >= hi / 2) late_min = std::min(late_min, s_n);
    }
    // the fitted exponent must stabilize: the late window should not dig
    // materially below the early range
    double early_min = kInf;
    for (int n = 1; n < std::max(hi / 2, 2); ++n)
        early_min = std::min(early_min, (m.logm(n) - m.logm(n + 1)) / static_cast<double>(n));
    if (late_min >= early_min - 0.1) {
        r.regular = true;
        r.clause = 1;
        r.epsilon_fit = std::exp(overall_min);
        r.note = "fitted geometric floor stable across the window";
    } else {
        r.regular = false;
        r.epsilon_fit = 0.0;
        r.note = "per-n exponent keeps decreasing; no geometric floor";
    }
    return r;
}

// p-regular minorant N_n = C1 e^{c0 (n+1)^{-1} (1-p)^{-n}} for sequences
// satisfying clause 1: c0 is the window floor of (1-p)^n logM_n and C1 the
// largest constant keeping N below M on the scanned range.
inline WeightSequence minorant(const WeightSequence& m, double p, int n_max = 200) {
    PRegularReport reg = p_regular(m, p, n_max);
    if (!reg.regular || reg.clause != 1)
        throw NotApplicable("minorant: p-regularity clause 1 does not hold");
    double q = 1.0 - p;
    int hi = std::min(n_max, m.horizon());
    double c0 = kInf;
    for (int n = std::max(hi / 2, 2); n <= hi; ++n)
        c0 = std::min(c0, std::pow(q, n) * m.logm(n));
    if (!(c0 > 0.0) || !std::isfinite(c0))
        throw NotApplicable("minorant: no positive finite floor c0");
    double log_c1 = kInf;
    for (int n = 0; n <= hi; ++n) {
        double target = c0 * std::pow(q, -n) / (static_cast<double>(n) + 1.0);
        log_c1 = std::min(log_c1, m.logm(n) - target);
    }
    if (!std::isfinite(log_c1)) throw ComputationError("minorant: C1 scan failed");
    WeightSequence out = WeightSequence::minorant_char(c0, log_c1, p);
    for (int n = 0; n <= hi; ++n)
        if (out.logm(n) > m.logm(n) + 1e-9)
            throw ComputationError("minorant: domination check failed");
    return out;
}

}  // namespace carleman
