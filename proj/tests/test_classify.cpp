#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "carleman/classify.hpp"

using namespace carleman;
using Catch::Matchers::WithinAbs;

namespace {

// independent partial-series oracle for log N_{n,theta}
double log_assoc_brute(const WeightSequence& m, double p, double theta, int n, int terms) {
    long double q = 1.0L - static_cast<long double>(p);
    long double s = static_cast<long double>(theta) * std::pow(q, -static_cast<long double>(n));
    for (int j = terms; j >= 1; --j)
        s += std::pow(q, j - 1) * static_cast<long double>(p) *
             static_cast<long double>(m.logm(n + j));
    return static_cast<double>(s);
}

const Certificate& row(const std::vector<Certificate>& rows, const std::string& name) {
    for (const auto& c : rows)
        if (c.name == name) return c;
    FAIL("missing certificate row: " << name);
    return rows.front();
}

}  // namespace

TEST_CASE("classifier matrix spans the decided phases") {
    for (double p : {0.3, 0.5, 0.8}) {
        CAPTURE(p);

        RegimeReport c = classify(WeightSequence::constant(3.0), p, 0.1);
        CHECK(c.phase == Phase::coupled_smooth);
        CHECK(c.kappa.status == KappaStatus::finite);
        CHECK(c.log_convex);
        REQUIRE(c.decay_regular.has_value());
        CHECK(*c.decay_regular);

        RegimeReport g15 = classify(WeightSequence::gevrey(1.5), p, 0.1);
        CHECK(g15.phase == Phase::coupled_smooth);
        RegimeReport g2 = classify(WeightSequence::gevrey(2.0), p, 0.1);
        CHECK(g2.phase == Phase::coupled_smooth);

        RegimeReport e = classify(WeightSequence::exp_char(1.0, p), p, 0.1);
        CHECK(e.phase == Phase::disconnected);
        CHECK(e.kappa.status == KappaStatus::diverged);
        REQUIRE(e.p_regular.has_value());
        CHECK(*e.p_regular);
        CHECK(e.quasianalytic == QAStatus::not_applicable);

        for (double theta : {0.0, 0.1}) {
            RegimeReport s = classify(WeightSequence::sobolev_degenerate(2), p, theta);
            CHECK(s.phase == Phase::sobolev_degenerate);
            CHECK(s.quasianalytic == QAStatus::no);
            CHECK(s.qa_confidence == Confidence::analytic);
        }
    }
}

TEST_CASE("positive theta with finite kappa rules out quasianalyticity") {
    RegimeReport r = classify(WeightSequence::gevrey(1.5), 0.5, 0.1);
    CHECK(r.phase == Phase::coupled_smooth);
    CHECK(r.quasianalytic == QAStatus::no);
    CHECK(r.qa_confidence == Confidence::analytic);
    CHECK_FALSE(r.p_regular.has_value());

    // the reported prefix matches the series oracle and grows with n
    REQUIRE(r.n_prefix.size() == 8);
    for (int n = 0; n < 8; ++n) {
        CAPTURE(n);
        double oracle = log_assoc_brute(WeightSequence::gevrey(1.5), 0.5, 0.1, n, 400);
        CHECK_THAT(r.n_prefix[static_cast<size_t>(n)], WithinAbs(oracle, 1e-8));
    }
    for (int n = 1; n < 8; ++n)
        CHECK(r.n_prefix[static_cast<size_t>(n)] > r.n_prefix[static_cast<size_t>(n - 1)]);
}

TEST_CASE("theta zero defers quasianalyticity to the associated sequence") {
    // gevrey sigma > 1: the associated ratio sum converges, and the deep table
    // heuristic sees the geometric decay
    RegimeReport g = classify(WeightSequence::gevrey(1.5), 0.5, 0.0);
    CHECK(g.phase == Phase::coupled_smooth);
    CHECK(g.quasianalytic == QAStatus::deferred_to_associated);
    REQUIRE(g.deferred_verdict.has_value());
    CHECK(*g.deferred_verdict == QAVerdict::non_quasianalytic);
    CHECK(g.qa_confidence == Confidence::heuristic);

    // factorial weights: associated ratios behave like 1/n, so the window
    // floor of n * N_n/N_{n+1} stays of order one
    RegimeReport f = classify(WeightSequence::factorial(), 0.5, 0.0);
    CHECK(f.quasianalytic == QAStatus::deferred_to_associated);
    REQUIRE(f.deferred_verdict.has_value());
    CHECK(*f.deferred_verdict == QAVerdict::quasianalytic);
    CHECK(f.qa_confidence == Confidence::heuristic);
}

TEST_CASE("classifier shift consistency") {
    // shifting the weights by one and rescaling theta by 1/(1-p) lands in the
    // same phase whenever kappa is decisive
    for (double p : {0.3, 0.5, 0.8}) {
        CAPTURE(p);
        double theta = 0.1;
        std::vector<WeightSequence> ms = {
            WeightSequence::constant(3.0), WeightSequence::gevrey(1.5),
            WeightSequence::gevrey(2.0), WeightSequence::exp_char(1.0, p),
            WeightSequence::sobolev_degenerate(2)};
        for (const auto& m : ms) {
            RegimeReport base = classify(m, p, theta);
            RegimeReport shifted = classify(m.shifted(1), p, theta / (1.0 - p));
            CHECK(shifted.phase == base.phase);
        }
    }
}

TEST_CASE("classifier lands in inconclusive states instead of throwing") {
    // concave table: log-convexity gate fails before kappa is attempted
    WeightSequence concave =
        WeightSequence::table({0.0, 1.0, 1.2, 1.3}, TailRule::none);
    RegimeReport r = classify(concave, 0.5, 0.0);
    CHECK(r.phase == Phase::inconclusive);
    CHECK_FALSE(r.log_convex);
    CHECK(r.quasianalytic == QAStatus::not_applicable);
    CHECK(r.notes.find("log-convexity fails") != std::string::npos);

    // log-convex table without a tail rule: kappa stops at the horizon
    std::vector<double> logfact(12);
    for (int n = 0; n < 12; ++n) logfact[static_cast<size_t>(n)] = std::lgamma(n + 1.0);
    RegimeReport s = classify(WeightSequence::table(logfact, TailRule::none), 0.5, 0.0);
    CHECK(s.phase == Phase::inconclusive);
    CHECK(s.kappa.status == KappaStatus::inconclusive);

    CHECK_THROWS_AS(classify(WeightSequence::gevrey(1.5), 0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(classify(WeightSequence::gevrey(1.5), 1.0, 0.1), ConfigError);
    CHECK_THROWS_AS(classify(WeightSequence::gevrey(1.5), 0.5, -0.1), ConfigError);
}

TEST_CASE("quasianalyticity witness certifies the gevrey schedule") {
    WeightSequence m = WeightSequence::gevrey(1.5);
    double p = 0.5, tp = 1.0;
    QAWitness w = quasianalyticity_witness(m, p, tp, 14, 6);

    CHECK(w.pass);
    for (const auto& c : w.certificates) {
        CAPTURE(c.name, c.measured, c.bound);
        CHECK(c.pass);
    }
    CHECK(w.rho < 1.0);
    CHECK(w.rho > 0.0);
    CHECK(w.constructed_factors >= 4);
    CHECK(w.constructed_factors <= 14);
    CHECK_THAT(w.phi.mass(), WithinAbs(1.0, 1e-12));
    CHECK(w.support_len < 0.5);

    // the width products telescope to the associated sequence exactly
    for (int k : {3, 7, 14}) {
        double acc = 0.0;
        for (int l = 0; l < k; ++l) acc += w.log_width[static_cast<size_t>(l)];
        CHECK_THAT(acc, WithinAbs(-w.log_assoc[static_cast<size_t>(k)], 1e-8));
    }

    // consecutive ratios contract at least as fast as the log-convexity bound
    double q = 1.0 - p;
    for (int n = 2; n < 14; ++n) {
        CAPTURE(n);
        double lr = w.log_width[static_cast<size_t>(n)] - w.log_width[static_cast<size_t>(n - 1)];
        double decay = p * p * tp * std::pow(q, -(n + 1));
        CHECK(lr <= -decay * (1.0 - 1e-9) + 1e-9);
    }

    // low orders integrate on the profile, deep orders use the schedule
    CHECK(row(w.certificates, "quasinorm:0").method == "quadrature");
    CHECK(row(w.certificates, "quasinorm:3").method == "quadrature");
    CHECK(row(w.certificates, "quasinorm:5").method == "atomic-bound");
    CHECK(row(w.certificates, "quasinorm:6").method == "atomic-bound");

    CHECK(w.tameness.theta_hat > 0.8);
    CHECK(w.tameness.theta_hat < 1.2);
    CHECK(row(w.certificates, "theta-recovery").pass);
}

TEST_CASE("witness tameness window recovers theta-prime across p") {
    struct Setup {
        double p;
        int lo, hi;
    };
    // slower geometric weights need deeper windows before the transient
    // leaves the top half
    for (Setup s : {Setup{0.3, 14, 30}, Setup{0.5, 10, 24}, Setup{0.8, 6, 16}}) {
        CAPTURE(s.p);
        QAWitness w =
            quasianalyticity_witness(WeightSequence::gevrey(1.5), s.p, 1.0, 14, 4, s.lo, s.hi);
        CHECK(w.pass);
        CHECK(std::abs(w.tameness.theta_hat - 1.0) < 0.2);
    }
}

TEST_CASE("witness preconditions and failure modes") {
    WeightSequence g = WeightSequence::gevrey(1.5);
    CHECK_THROWS_AS(quasianalyticity_witness(g, 0.5, 0.0, 14, 6), ConfigError);
    CHECK_THROWS_AS(quasianalyticity_witness(g, 0.5, -1.0, 14, 6), ConfigError);
    CHECK_THROWS_AS(quasianalyticity_witness(g, 0.5, 1.0, 1, 0), ConfigError);
    CHECK_THROWS_AS(quasianalyticity_witness(g, 0.5, 1.0, 14, 13), ConfigError);

    // divergent kappa and degenerate weights are out of scope
    CHECK_THROWS_AS(quasianalyticity_witness(WeightSequence::exp_char(1.0, 0.5), 0.5, 1.0, 14, 6),
                    NotApplicable);
    CHECK_THROWS_AS(quasianalyticity_witness(WeightSequence::sobolev_degenerate(2), 0.5, 1.0, 14, 6),
                    NotApplicable);

    // concave table fails the log-convexity precondition
    WeightSequence concave = WeightSequence::table({0.0, 1.0, 1.2, 1.3}, TailRule::log_linear);
    CHECK_THROWS_AS(quasianalyticity_witness(concave, 0.5, 1.0, 14, 6), NotApplicable);

    // weights sliding to zero along a log-linear tail are not bounded away
    WeightSequence slide = WeightSequence::table({0.0, -0.5}, TailRule::log_linear);
    CHECK_THROWS_AS(quasianalyticity_witness(slide, 0.5, 1.0, 14, 6), NotApplicable);
}

TEST_CASE("rho is refused when the width ratios do not contract") {
    // log-convex within the checking tolerance, but with a genuinely concave
    // wobble of order 1e-13; at a tiny theta' the wobble outweighs the
    // contraction factor and the second ratio exceeds one
    WeightSequence tricky = WeightSequence::table(
        {0.0, 0.0, 5e-13, 6e-13, 6e-13, 6e-13}, TailRule::log_linear);
    CHECK(is_log_convex(tricky, 0, 5).ok);
    CHECK_THROWS_AS(quasianalyticity_witness(tricky, 0.5, 1e-15, 6, 1), RhoNotFound);
}

TEST_CASE("theta strictness witness separates nested classes") {
    WeightSequence m = WeightSequence::gevrey(1.5);
    ThetaWitnessReport rep = theta_strictness_witness(m, 0.5, 0.0, 1.0);
    CHECK(rep.pass);
    CHECK(rep.theta_hat > 0.8);
    CHECK(rep.theta_hat < 1.2);
    CHECK(rep.margin > 0.9);
    CHECK(rep.window_min > 0.99);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].name == "theta-gap");
    CHECK(rep.rows[0].pass);

    // a halfway theta keeps a positive margin of about theta' - theta
    ThetaWitnessReport half = theta_strictness_witness(m, 0.5, 0.5, 1.0);
    CHECK(half.pass);
    CHECK_THAT(half.margin, WithinAbs(0.5, 0.05));

    // lengthening the diagnostic window tightens the estimate of theta'
    ThetaWitnessReport short_win = theta_strictness_witness(m, 0.5, 0.0, 1.0, 14, 6, 10, 16);
    ThetaWitnessReport long_win = theta_strictness_witness(m, 0.5, 0.0, 1.0, 14, 6, 10, 24);
    CHECK(long_win.estimator_gap < short_win.estimator_gap);

    // weights well below one approach the window limit from below and still
    // separate the classes
    ThetaWitnessReport low = theta_strictness_witness(
        WeightSequence::constant(std::exp(-10.0)), 0.5, 0.0, 1.0);
    CHECK(low.pass);
    CHECK(low.margin > 0.9);

    CHECK_THROWS_AS(theta_strictness_witness(m, 0.5, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(theta_strictness_witness(m, 0.5, 1.5, 1.0), ConfigError);
    WeightSequence slide = WeightSequence::table({0.0, -0.5}, TailRule::log_linear);
    CHECK_THROWS_AS(theta_strictness_witness(slide, 0.5, 0.0, 1.0), NotApplicable);
}
