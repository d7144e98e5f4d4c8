#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carleman/mollifier.hpp"
#include "carleman/numeric.hpp"
#include "carleman/piecewise.hpp"
#include "carleman/weights.hpp"

namespace carleman {

struct RhoNotFound : ComputationError {
    using ComputationError::ComputationError;
};

// Phase of the class attached to a weight sequence at (p, theta): either the
// quasinorm scale couples into classical smoothness, or the class splits from
// its own derivative scale, or degenerate weights truncate the scale at a
// finite order.
enum class Phase : std::uint8_t {
    coupled_smooth,
    disconnected,
    sobolev_degenerate,
    inconclusive,
};

inline const char* to_string(Phase ph) {
    switch (ph) {
        case Phase::coupled_smooth: return "coupled-smooth";
        case Phase::disconnected: return "disconnected";
        case Phase::sobolev_degenerate: return "sobolev-degenerate";
        default: return "inconclusive";
    }
}

// What can be said about quasianalyticity of the class itself.  At theta > 0
// with finite kappa the answer is always "no" (an invisible mollifier exists);
// at theta = 0 the question transfers to the associated sequence when the
// weight decay is regular enough, and that transferred verdict is reported as
// deferred rather than asserted for the original class.
enum class QAStatus : std::uint8_t { yes, no, deferred_to_associated, not_applicable };

inline const char* to_string(QAStatus s) {
    switch (s) {
        case QAStatus::yes: return "yes";
        case QAStatus::no: return "no";
        case QAStatus::deferred_to_associated: return "deferred-to-associated-class";
        default: return "not-applicable";
    }
}

struct ClassifyOptions {
    int n_max = 200;       // scan and truncation horizon for the weight functionals
    int prefix_len = 8;    // how many log N_{n,theta} values to report
    int tail_terms = 96;   // series truncation for each associated-sequence value
    int defer_scan = 240;  // table depth for the deferred associated-class verdict
};

struct RegimeReport {
    double p = 0.0;
    double theta = 0.0;
    KappaResult kappa;
    Phase phase = Phase::inconclusive;
    bool log_convex = false;
    std::optional<bool> p_regular;      // populated when kappa diverges
    std::optional<bool> decay_regular;  // populated when kappa is finite
    QAStatus quasianalytic = QAStatus::not_applicable;
    Confidence qa_confidence = Confidence::heuristic;
    std::optional<QAVerdict> deferred_verdict;  // verdict for the associated sequence
    std::vector<double> n_prefix;  // log N_{n,theta} for n = 0.., when defined
    std::string notes;
};

namespace detail {

inline std::string join_notes(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += "; ";
        out += s;
    }
    return out;
}

}  // namespace detail

// Regime classification.  kappa decides the phase, the regularity functionals
// decide how far the verdict extends, and the quasianalyticity field reports
// what is actually provable at (p, theta):
//
//   kappa finite, theta > 0  ->  "no": a compactly supported member exists
//   kappa finite, theta = 0  ->  deferred to the associated sequence when the
//                                decay of M is regular enough for equivalence
//   kappa divergent          ->  not posed: the phase already splits the class
//
// Unusual weights never raise from here; they land in inconclusive states with
// notes.  Only an invalid (p, theta) pair is a caller error.
inline RegimeReport classify(const WeightSequence& m, double p, double theta,
                             ClassifyOptions opts = {}) {
    if (!(p > 0.0) || !(p < 1.0)) throw ConfigError("classify: p must lie in (0,1)");
    if (!(theta >= 0.0)) throw ConfigError("classify: theta must be nonnegative");
    if (opts.n_max < 8 || opts.prefix_len < 0 || opts.tail_terms < 1 || opts.defer_scan < 16)
        throw ConfigError("classify: bad options");

    RegimeReport r;
    r.p = p;
    r.theta = theta;
    std::vector<std::string> notes;

    int scan_hi = std::min(opts.n_max, m.horizon());
    LogConvexity lc = is_log_convex(m, 0, scan_hi);
    r.log_convex = lc.ok;

    // Degenerate weights: a +inf tail caps the derivative scale at a finite
    // order, so the class is a finite-smoothness (Sobolev-type) space for
    // every p and theta, and it certainly contains bump functions.
    if (m.first_infinite() >= 0) {
        r.phase = Phase::sobolev_degenerate;
        r.kappa.status = KappaStatus::inconclusive;
        r.kappa.note = "kappa undefined for degenerate weights";
        r.quasianalytic = QAStatus::no;
        r.qa_confidence = Confidence::analytic;
        notes.push_back("degenerate weights constrain only finitely many orders");
        r.notes = detail::join_notes(notes);
        return r;
    }

    if (!lc.ok) {
        r.kappa.note = "kappa skipped: weights are not log-convex";
        notes.push_back("log-convexity fails at n = " + std::to_string(lc.first_violation));
        r.notes = detail::join_notes(notes);
        return r;
    }

    try {
        r.kappa = kappa(m, p, 1e-10, opts.n_max);
    } catch (const ComputationError& e) {
        notes.push_back(std::string("kappa failed: ") + e.what());
        r.notes = detail::join_notes(notes);
        return r;
    }

    if (r.kappa.status == KappaStatus::finite) {
        r.phase = Phase::coupled_smooth;

        try {
            DecayRegularReport dr = decay_regular(m, p, opts.n_max);
            r.decay_regular = dr.regular;
            if (!dr.regular) notes.push_back("decay regularity fails: " + dr.note);
        } catch (const ComputationError& e) {
            notes.push_back(std::string("decay regularity undecided: ") + e.what());
        }

        try {
            for (int n = 0; n < opts.prefix_len; ++n)
                r.n_prefix.push_back(associated_N(m, p, theta, n, opts.tail_terms).log_n);
        } catch (const std::exception& e) {
            r.n_prefix.clear();
            notes.push_back(std::string("associated sequence unavailable: ") + e.what());
        }

        if (theta > 0.0) {
            r.quasianalytic = QAStatus::no;
            r.qa_confidence = Confidence::analytic;
            notes.push_back("theta > 0 admits a compactly supported member");
        } else if (r.decay_regular.value_or(false)) {
            // theta = 0: quasianalyticity of the class is equivalent to that
            // of the associated sequence.  The transferred verdict comes from
            // a deep table of log N values and is never promoted past the
            // confidence the table heuristics earn.
            try {
                std::vector<double> log_n(static_cast<size_t>(opts.defer_scan) + 1);
                for (int n = 0; n <= opts.defer_scan; ++n)
                    log_n[static_cast<size_t>(n)] =
                        associated_N(m, p, 0.0, n, opts.tail_terms).log_n;
                WeightSequence assoc =
                    WeightSequence::table(std::move(log_n), TailRule::log_linear);
                // stop one entry short of the table edge: past it the
                // log-linear extension freezes the ratio at its last value
                DenjoyCarlemanReport dc = denjoy_carleman(assoc, opts.defer_scan - 1);
                r.quasianalytic = QAStatus::deferred_to_associated;
                r.deferred_verdict = dc.verdict;
                r.qa_confidence = dc.confidence;
                notes.push_back("associated-sequence verdict: " + dc.note);
            } catch (const std::exception& e) {
                r.quasianalytic = QAStatus::deferred_to_associated;
                r.qa_confidence = Confidence::heuristic;
                notes.push_back(std::string("associated-sequence verdict undecided: ") +
                                e.what());
            }
        } else {
            r.quasianalytic = QAStatus::not_applicable;
            notes.push_back(
                "theta = 0 without decay regularity: no transfer to the associated sequence");
        }
    } else if (r.kappa.status == KappaStatus::diverged) {
        try {
            PRegularReport pr = p_regular(m, p, opts.n_max);
            r.p_regular = pr.regular;
            if (!pr.regular) notes.push_back("p-regularity fails: " + pr.note);
        } catch (const ComputationError& e) {
            notes.push_back(std::string("p-regularity undecided: ") + e.what());
        }
        if (r.p_regular.value_or(false)) {
            r.phase = Phase::disconnected;
        } else {
            notes.push_back("kappa diverges but p-regularity is not established");
        }
        r.quasianalytic = QAStatus::not_applicable;
        r.qa_confidence = Confidence::analytic;
        notes.push_back("divergent kappa splits the class, so the question is not posed");
    } else {
        notes.push_back(r.kappa.note.empty() ? std::string("kappa inconclusive")
                                             : "kappa inconclusive: " + r.kappa.note);
    }

    r.notes = detail::join_notes(notes);
    return r;
}

// A single compactly supported function certifying that the theta'-class is
// not quasianalytic: the box widths are consecutive ratios of the associated
// sequence, so their running product collapses to 1/N_{k,theta'} exactly and
// every quasinorm bound is available in closed form.  The full schedule lives
// in log space (widths shrink double-exponentially and underflow long before
// the certificates stop being meaningful); only a representable prefix is
// convolved into an actual profile.
struct QAWitness {
    PiecewisePoly phi;              // iterated box over the representable prefix
    std::vector<double> log_width;  // log a_n, n = 1..max(K, window_hi)
    std::vector<double> log_assoc;  // log N_{k,theta'}, k = 0..max(K, window_hi)
    std::vector<double> widths;     // constructed prefix
    int scheduled = 0;              // requested truncation K
    int constructed_factors = 0;
    double rho = 0.0;          // certified contraction ratio of the width tail
    double support_len = 0.0;  // scheduled support of the K-fold construction
    double tail_l1 = 0.0;      // certified bound on the width sum past K
    double theta_prime = 0.0;
    std::vector<Certificate> certificates;
    TamenessWindow tameness;
    bool pass = true;
};

inline QAWitness quasianalyticity_witness(const WeightSequence& m, double p,
                                          double theta_prime, int K, int n_check,
                                          int window_lo = 10, int window_hi = 24) {
    if (!(p > 0.0) || !(p < 1.0))
        throw ConfigError("quasianalyticity_witness: p must lie in (0,1)");
    if (!(theta_prime > 0.0))
        throw ConfigError("quasianalyticity_witness: theta' must be positive");
    if (K < 2) throw ConfigError("quasianalyticity_witness: K must be >= 2");
    if (n_check < 0 || n_check + 2 > K)
        throw ConfigError("quasianalyticity_witness: norm window needs n_check + 2 <= K");
    if (window_lo < 1 || window_hi < window_lo)
        throw ConfigError("quasianalyticity_witness: bad diagnostic window");

    if (m.first_infinite() >= 0)
        throw NotApplicable("quasianalyticity_witness: weights are degenerate");
    int scan_hi = std::min(200, m.horizon());
    LogConvexity lc = is_log_convex(m, 0, scan_hi);
    if (!lc.ok) throw NotApplicable("quasianalyticity_witness: weights must be log-convex");

    KappaResult kap = kappa(m, p, 1e-10, 200);
    if (kap.status != KappaStatus::finite)
        throw NotApplicable("quasianalyticity_witness: kappa is not certified finite");

    // Bounded away from zero.  The scanned minimum is global for the builtin
    // families (all eventually monotone); a log-linear table tail with
    // negative slope keeps decreasing past any floor.
    double floor_log = kInf;
    for (int n = 0; n <= scan_hi; ++n) floor_log = std::min(floor_log, m.logm(n));
    if (scan_hi >= 1 && m.horizon() > scan_hi &&
        m.logm(scan_hi) < m.logm(scan_hi - 1) - 1e-15)
        floor_log = -kInf;
    if (!(floor_log > std::log(kWidthFloor)))
        throw NotApplicable("quasianalyticity_witness: weights are not bounded away from zero");

    QAWitness out;
    out.scheduled = K;
    out.theta_prime = theta_prime;
    double q = 1.0 - p;
    int k_sched = std::max(K, window_hi);

    out.log_assoc.resize(static_cast<size_t>(k_sched) + 1);
    double assoc_err = 0.0;
    for (int k = 0; k <= k_sched; ++k) {
        AssociatedN a = associated_N(m, p, theta_prime, k, 96);
        out.log_assoc[static_cast<size_t>(k)] = a.log_n;
        assoc_err = std::max(assoc_err, a.tail_bound);
    }

    // a_1 = 1/N_1 and a_n = N_{n-1}/N_n, so that a_1 ... a_k = 1/N_k exactly.
    out.log_width.resize(static_cast<size_t>(k_sched));
    out.log_width[0] = -out.log_assoc[1];
    for (int n = 2; n <= k_sched; ++n)
        out.log_width[static_cast<size_t>(n - 1)] =
            out.log_assoc[static_cast<size_t>(n - 1)] - out.log_assoc[static_cast<size_t>(n)];

    // Contraction of the width tail.  The first ratio a_2/a_1 = N_1^2/N_2 is
    // exempt (a_1 is the artificial leading width, not a sequence ratio); from
    // n >= 2 on, log-convexity forces a_{n+1}/a_n <= exp(-p^2 theta' q^{-n-1}).
    // The decay slack is certified in relative form because the theta' term of
    // log N_{n} grows like q^{-n} and its rounding would swamp an absolute
    // comparison at the deep end of the schedule.
    double worst_log_ratio = -kInf;
    double worst_decay_slack = -kInf;
    for (int n = 2; n < k_sched; ++n) {
        double lr = out.log_width[static_cast<size_t>(n)] -
                    out.log_width[static_cast<size_t>(n - 1)];
        double decay = p * p * theta_prime * std::pow(q, -(n + 1));
        worst_log_ratio = std::max(worst_log_ratio, lr);
        worst_decay_slack = std::max(worst_decay_slack, (lr + decay) / std::max(1.0, decay));
    }
    out.rho = std::exp(worst_log_ratio);
    if (!(worst_log_ratio < 0.0) || !(out.rho < 1.0))
        throw RhoNotFound(
            "quasianalyticity_witness: consecutive width ratios do not certify any rho < 1");

    StableSum prefix_sum;
    for (int n = 0; n < K; ++n) prefix_sum.add(std::exp(out.log_width[static_cast<size_t>(n)]));
    out.support_len = prefix_sum.value();
    out.tail_l1 = std::exp(out.log_width[static_cast<size_t>(K - 1)]) * out.rho / (1.0 - out.rho);

    // Representable prefix: stop at the arithmetic floor and at the breakpoint
    // resolution of the support, where narrower factors would coalesce on the
    // convolution grid.
    double res_floor = 10.0 * PiecewisePoly::dedup_tol(0.0, out.support_len);
    for (int n = 0; n < K && static_cast<int>(out.widths.size()) < detail::kMaxConstructedFactors;
         ++n) {
        if (out.log_width[static_cast<size_t>(n)] < std::log(kWidthFloor)) break;
        double w = std::exp(out.log_width[static_cast<size_t>(n)]);
        if (w < res_floor) break;
        out.widths.push_back(w);
    }
    if (out.widths.empty())
        throw UnderflowWidth("quasianalyticity_witness: no representable widths");

    // The deepest admissible factor can still sit so far below the support
    // scale that re-expanding convolution coefficients across the gap leaves
    // paired pseudo-jumps above the derivative noise floor at the integrated
    // orders.  Such a factor perturbs the profile by less than its own width
    // times the sup and none of the closed-form bounds depend on it, so shed
    // factors until the integrated orders differentiate cleanly.
    int quad_hi = std::min(3, n_check);
    for (;;) {
        out.phi = iterated_box(std::span<const double>(out.widths.data(), out.widths.size()));
        int smooth = static_cast<int>(out.widths.size()) - 1;
        bool clean = true;
        try {
            for (int n = 1; n <= std::min(quad_hi, smooth) && clean; ++n)
                clean = derivative(out.phi, n).singular.empty();
        } catch (const DistributionalDerivative&) {
            clean = false;
        }
        if (clean) break;
        out.widths.pop_back();
    }
    out.constructed_factors = static_cast<int>(out.widths.size());

    auto push = [&](Certificate c) {
        out.pass = out.pass && c.pass;
        out.certificates.push_back(std::move(c));
    };

    push({"rho", out.rho, 1.0, out.rho < 1.0, "plan-arithmetic"});
    double decay_tol = 4.0 * assoc_err + 1e-9;
    push({"ratio-decay", worst_decay_slack, 0.0, worst_decay_slack <= decay_tol,
          "plan-arithmetic"});

    double mass = out.phi.mass();
    push({"mass", std::abs(mass - 1.0), 1e-12, std::abs(mass - 1.0) <= 1e-12, "quadrature"});
    double span = out.phi.support_hi() - out.phi.support_lo();
    push({"support", span, out.support_len, span <= out.support_len * (1.0 + 1e-12),
          "plan-arithmetic"});

    // Quasinorm window.  For n >= 1 the closed form reads
    //   || Phi^(n) ||_p^p <= 2^n / (1 - rho) * a_{n+1}^{1-p} * N_{n,theta'}^p,
    // combining the atomic estimate 2^n (a_1..a_{n+1})^{-p} sum_{l>n} a_l with
    // the tail contraction (valid from the second width on) and the collapse
    // of the running product to 1/N_n.  Order zero keeps the explicit width
    // sum since the contraction does not cover the first ratio.  Low orders
    // are integrated on the constructed profile, high orders fall back to the
    // atomic estimate evaluated on the full log-space schedule.
    int smooth_orders = out.constructed_factors - 1;
    for (int n = 0; n <= n_check; ++n) {
        double log_bound =
            n == 0 ? p * out.log_assoc[1] + std::log(out.support_len + out.tail_l1)
                   : n * std::numbers::ln2 - std::log1p(-out.rho) +
                         (1.0 - p) * out.log_width[static_cast<size_t>(n)] +
                         p * out.log_assoc[static_cast<size_t>(n)];
        double tol = 1e-9 * std::max(1.0, std::abs(log_bound));
        std::string name = "quasinorm:" + std::to_string(n);
        if (n <= 3 && n <= smooth_orders) {
            Distributional d = derivative(out.phi, n);
            if (!d.singular.empty())
                throw ComputationError("quasianalyticity_witness: unexpected atoms at order " +
                                       std::to_string(n));
            double log_vp = std::log(lp_quasinorm(d.regular, p, 1e-10));
            push({name, log_vp, log_bound, log_vp <= log_bound + tol, "quadrature"});
        } else {
            double log_tail = detail::log_sum_exp(out.log_width, static_cast<size_t>(n),
                                                  out.log_width.size());
            double log_vp = n * std::numbers::ln2 +
                            p * out.log_assoc[static_cast<size_t>(n + 1)] + log_tail;
            push({name, log_vp, log_bound, log_vp <= log_bound + tol, "atomic-bound"});
        }
    }

    // Tameness diagnostic: the k-th window point pairs the certified sup bound
    // of the (k-1)-th derivative, log(2^{k-1} N_{k,theta'}), with the weight
    // q^k.  The theta' term passes through exactly and the remainder decays
    // like q^k log M, so the window recovers theta' once the transient has
    // left the top half.
    std::vector<double> log_sups;
    for (int k = window_lo; k <= window_hi; ++k)
        log_sups.push_back((k - 1) * std::numbers::ln2 + out.log_assoc[static_cast<size_t>(k)]);
    out.tameness = tameness_from_log_sups(log_sups, p, window_lo);

    double rec = std::abs(out.tameness.theta_hat - theta_prime);
    push({"theta-recovery", rec, 0.2 * theta_prime, rec <= 0.2 * theta_prime,
          "plan-arithmetic"});
    return out;
}

// Strict inclusion of the theta-class inside the theta'-class: the witness
// built at theta' keeps every diagnostic window value above theta, so it
// cannot belong to the smaller class.  window_min is the certified level,
// margin its distance from theta; estimator_gap tracks how tightly the window
// has converged onto theta' (it shrinks as the window is lengthened).
struct ThetaWitnessReport {
    QAWitness witness;
    double theta = 0.0;
    double theta_prime = 0.0;
    double theta_hat = 0.0;
    double window_min = 0.0;
    double margin = 0.0;
    double estimator_gap = 0.0;
    std::vector<Certificate> rows;
    bool pass = false;
};

inline ThetaWitnessReport theta_strictness_witness(const WeightSequence& m, double p,
                                                   double theta, double theta_prime,
                                                   int K = 14, int n_check = 6,
                                                   int window_lo = 10, int window_hi = 24) {
    if (!(theta >= 0.0) || !(theta < theta_prime))
        throw ConfigError("theta_strictness_witness: need 0 <= theta < theta'");

    int scan_hi = std::min(200, m.horizon());
    for (int n = 0; n + 1 <= scan_hi; ++n)
        if (m.logm(n + 1) < m.logm(n) - 1e-12)
            throw NotApplicable("theta_strictness_witness: weights must be nondecreasing");

    ThetaWitnessReport rep;
    rep.theta = theta;
    rep.theta_prime = theta_prime;
    rep.witness = quasianalyticity_witness(m, p, theta_prime, K, n_check, window_lo, window_hi);
    rep.theta_hat = rep.witness.tameness.theta_hat;

    double wmin = kInf;
    for (const TamenessPoint& pt : rep.witness.tameness.points)
        wmin = std::min(wmin, pt.value);
    rep.window_min = wmin;
    rep.margin = wmin - theta;
    rep.estimator_gap = std::abs(rep.theta_hat - theta_prime);

    bool gap = theta < wmin;
    rep.rows.push_back({"theta-gap", theta, wmin, gap, "plan-arithmetic"});
    rep.pass = gap && rep.witness.pass;
    return rep;
}

}  // namespace carleman
