#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "carleman/bootstrap.hpp"
#include "carleman/mollifier.hpp"

using namespace carleman;

namespace {

Polynomial random_poly(std::mt19937& rng, int degree) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::vector<double> c(static_cast<size_t>(degree) + 1);
    for (double& v : c) v = coeff(rng);
    if (c.back() == 0.0) c.back() = 0.5;
    return Polynomial(std::move(c));
}

PiecewisePoly random_chain(std::mt19937& rng) {
    std::uniform_int_distribution<int> count(2, 6);
    std::uniform_real_distribution<double> width(0.05, 1.0);
    std::vector<double> w(static_cast<size_t>(count(rng)));
    for (double& v : w) v = width(rng);
    return iterated_box(w);
}

// greedy iteration of the one-step bound: log sup f <= (1-p) log sup f' + log ||f'||_p^p,
// recursing on f' down to depth n
double greedy_log_bound(const PiecewisePoly& f, double p, int n) {
    Distributional d = derivative(f, 1);
    REQUIRE(d.singular.empty());
    double tail = (n == 1) ? std::log(sup_norm(d.regular))
                           : greedy_log_bound(d.regular, p, n - 1);
    return (1.0 - p) * tail + std::log(lp_quasinorm(d.regular, p));
}

}  // namespace

TEST_CASE("hermite ladder matches the closed forms") {
    Polynomial one({1.0});
    Polynomial l1 = hermite_ladder(one);
    REQUIRE(l1.coeffs().size() == 2);
    CHECK(l1.coeffs()[0] == 0.0);
    CHECK(l1.coeffs()[1] == -2.0);

    Polynomial x({0.0, 1.0});
    Polynomial lx = hermite_ladder(x);
    REQUIRE(lx.coeffs().size() == 3);
    CHECK(lx.coeffs()[0] == 1.0);
    CHECK(lx.coeffs()[1] == 0.0);
    CHECK(lx.coeffs()[2] == -2.0);

    CHECK(hermite_ladder(Polynomial()).is_zero());

    // |(Lq)_j| <= (d+2) max|q_i|
    std::mt19937 rng(20260814);
    std::uniform_int_distribution<int> deg(0, 10);
    for (int trial = 0; trial < 30; ++trial) {
        Polynomial q = random_poly(rng, deg(rng));
        double d = static_cast<double>(q.coeffs().size()) - 1.0;
        double cap = (d + 2.0) * q.max_abs_coeff();
        for (double c : hermite_ladder(q).coeffs()) CHECK(std::abs(c) <= cap * (1.0 + 1e-15));
    }
}

TEST_CASE("hermite derivative sup against calculus oracles") {
    HermiteFunction f(Polynomial({1.0}));

    auto r0 = hermite_derivative_sup(f, 0);
    CHECK_THAT(r0.measured, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(r0.bound, Catch::Matchers::WithinRel(2.0, 1e-12));

    // f'(x) = -2x e^{-x^2} peaks at x = 1/sqrt(2)
    auto r1 = hermite_derivative_sup(f, 1);
    CHECK_THAT(r1.measured,
               Catch::Matchers::WithinRel(std::sqrt(2.0) * std::exp(-0.5), 1e-10));
    CHECK_THAT(r1.bound,
               Catch::Matchers::WithinRel(6.0 * std::sqrt(0.5) * std::exp(-0.5), 1e-12));

    std::mt19937 rng(7);
    std::uniform_int_distribution<int> deg(0, 8);
    for (int trial = 0; trial < 10; ++trial) {
        HermiteFunction g(random_poly(rng, deg(rng)));
        for (int n = 0; n <= 10; n += 5) {
            auto r = hermite_derivative_sup(g, n);
            CHECK(r.measured <= r.bound * (1.0 + 1e-12));
        }
    }

    CHECK_THROWS_AS(hermite_derivative_sup(f, 41), ConfigError);
    CHECK_THROWS_AS(hermite_derivative_sup(f, -1), ConfigError);
}

TEST_CASE("hermite tameness diagnostic decays to zero from above") {
    std::mt19937 rng(99);
    std::vector<Polynomial> qs = {Polynomial({1.0}), Polynomial({0.0, 1.0}),
                                  random_poly(rng, 10)};
    const double p = 0.5;
    for (const Polynomial& q : qs) {
        HermiteFunction g(q);
        std::vector<double> v;
        for (int n = 0; n <= 20; ++n) {
            if (n >= 2) v.push_back(std::pow(1.0 - p, n) * std::log(hermite_sup(g)));
            g = g.derivative();
        }
        // v holds n = 2..20; the diagnostic ends positive and shrinking
        size_t last = v.size() - 1;
        CHECK(v[last] > 0.0);
        CHECK(v[last - 1] > 0.0);
        CHECK(v[last - 2] > 0.0);
        CHECK(v[last] < 0.01);
        CHECK(v[last] < v[last - 4]);
    }
}

TEST_CASE("hermite quasinorm matches the gaussian integral") {
    HermiteFunction f(Polynomial({1.0}));
    for (double p : {0.3, 0.5, 0.8}) {
        double pi = 3.14159265358979323846;
        CHECK_THAT(hermite_lp(f, p), Catch::Matchers::WithinRel(std::sqrt(pi / p), 1e-9));
    }
    CHECK(hermite_lp(HermiteFunction(), 0.5) == 0.0);
    CHECK_THROWS_AS(hermite_lp(f, 0.0), ConfigError);
    CHECK_THROWS_AS(hermite_lp(f, 1.5), ConfigError);
}

TEST_CASE("hermite derivative quasinorms grow at the expected gevrey rate") {
    HermiteFunction f(Polynomial({1.0}));
    GrowthFit fit = hermite_lp_growth(f, 0.5, 0, 12);
    REQUIRE(fit.log_norms.size() == 13);
    // the (n!)^{3/2} envelope is an upper estimate; the measured exponent
    // sits near 1/2 plus the geometric factor folded into a short window
    CHECK(fit.sigma > 0.4);
    CHECK(fit.sigma <= 1.6);
    CHECK(fit.log_norms.back() > fit.log_norms.front());
    CHECK_THROWS_AS(hermite_lp_growth(f, 0.5, 5, 2), ConfigError);
}

TEST_CASE("bootstrap step bound with exact norms on the triangle") {
    PiecewisePoly hat = iterated_box({1.0, 1.0});
    for (double p : {0.3, 0.5, 0.8}) {
        StepSlack s = bootstrap_step_check(hat, p);
        CHECK_THAT(s.lhs, Catch::Matchers::WithinAbs(1.0, 1e-12));
        // ||f'||_inf = 1 and int |f'|^p = 2 regardless of p
        CHECK_THAT(s.rhs, Catch::Matchers::WithinRel(2.0, 1e-9));
        CHECK(s.pass);
    }
}

TEST_CASE("bootstrap step bound on vanishing models") {
    StepSlack a = bootstrap_step_check(PiecewisePoly(), 0.5);
    CHECK(a.pass);
    CHECK(a.slack == 0.0);
    StepSlack b = bootstrap_step_check(HermiteFunction(), 0.5);
    CHECK(b.pass);
    CHECK(b.slack == 0.0);
}

TEST_CASE("bootstrap step sweep over random box splines") {
    std::mt19937 rng(20260814);
    for (int trial = 0; trial < 20; ++trial) {
        PiecewisePoly f = random_chain(rng);
        for (double p : {0.3, 0.5, 0.8}) {
            StepSlack s = bootstrap_step_check(f, p);
            CHECK(s.pass);
            CHECK(s.slack >= 0.0);
        }
    }
}

TEST_CASE("bootstrap step bound on the hermite class") {
    HermiteFunction f(Polynomial({1.0}));
    for (double p : {0.3, 0.5, 0.8}) {
        StepSlack s = bootstrap_step_check(f, p);
        CHECK_THAT(s.lhs, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK(s.pass);
    }
}

TEST_CASE("bootstrap chain bound at higher orders") {
    PiecewisePoly f = iterated_box({0.9, 0.75, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2});
    ChainSlack c3 = bootstrap_chain_check(f, 0.5, 3);
    CHECK(c3.pass);

    // order 1 is literally the one-step inequality
    ChainSlack c1 = bootstrap_chain_check(f, 0.5, 1);
    StepSlack s = bootstrap_step_check(f, 0.5);
    CHECK_THAT(c1.log_rhs, Catch::Matchers::WithinAbs(std::log(s.rhs), 1e-12));
    CHECK_THAT(c1.log_lhs, Catch::Matchers::WithinAbs(std::log(s.lhs), 1e-12));

    ChainSlack h5 = bootstrap_chain_check(HermiteFunction(Polynomial({1.0})), 0.5, 5);
    CHECK(h5.pass);

    // a hat is C^0: order 2 lands on the atomic part
    CHECK_THROWS_AS(bootstrap_chain_check(iterated_box({1.0, 1.0}), 0.5, 2),
                    DistributionalDerivative);
    CHECK_THROWS_AS(bootstrap_chain_check(f, 0.5, 0), ConfigError);
}

TEST_CASE("chain bound coincides with greedy step iteration") {
    PiecewisePoly f = iterated_box({0.9, 0.7, 0.5, 0.3, 0.2});
    for (double p : {0.3, 0.5}) {
        for (int n : {1, 2, 3}) {
            ChainSlack c = bootstrap_chain_check(f, p, n);
            double greedy = greedy_log_bound(f, p, n);
            CHECK_THAT(c.log_rhs, Catch::Matchers::WithinAbs(greedy, 1e-9));
            CHECK(c.log_rhs <= greedy + 1e-9);
        }
    }
}

TEST_CASE("sup control bound closed forms") {
    WeightSequence ones = WeightSequence::constant(1.0);
    for (int k = 0; k <= 4; ++k) {
        SupControlBound b = sup_control_bound(ones, 0.5, 0.0, k);
        CHECK_THAT(b.log_rhs, Catch::Matchers::WithinAbs(0.0, 1e-10));
        CHECK(b.log_rhs_lower <= b.log_rhs);
    }
    // theta (1-p)^{-k} = 1 * 2^2
    SupControlBound b = sup_control_bound(ones, 0.5, 1.0, 2);
    CHECK_THAT(b.log_rhs, Catch::Matchers::WithinAbs(4.0, 1e-10));

    SupControlBound g = sup_control_bound(WeightSequence::gevrey(1.5), 0.5, 0.0, 3);
    CHECK(std::isfinite(g.log_rhs));
    CHECK(g.log_rhs > 0.0);

    CHECK_THROWS_AS(sup_control_bound(WeightSequence::exp_char(1.0, 0.5), 0.5, 0.0, 1),
                    DivergentKappa);
    CHECK_THROWS_AS(sup_control_bound(WeightSequence::sobolev_degenerate(2), 0.5, 0.0, 1),
                    DivergentKappa);
    CHECK_THROWS_AS(sup_control_bound(ones, 0.5, -1.0, 1), ConfigError);
    CHECK_THROWS_AS(sup_control_bound(ones, 1.0, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(sup_control_bound(ones, 0.5, 0.0, -1), ConfigError);
}

TEST_CASE("sup control bound respects the shift identity") {
    // re-deriving at k+1 equals deriving at k for the shifted sequence with
    // theta / (1-p)
    for (double p : {0.3, 0.5}) {
        for (const WeightSequence& m :
             {WeightSequence::gevrey(1.5), WeightSequence::constant(2.0)}) {
            for (int k = 0; k <= 4; ++k) {
                double lhs = sup_control_bound(m, p, 0.7, k + 1).log_rhs;
                double rhs =
                    sup_control_bound(m.shifted(1), p, 0.7 / (1.0 - p), k).log_rhs;
                CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-8));
            }
        }
    }
}

TEST_CASE("sup control verification on the hermite class") {
    HermiteFunction f(Polynomial({1.0}));
    WeightSequence m = WeightSequence::gevrey(1.5);
    for (double theta : {0.0, 1.0}) {
        for (int k = 0; k <= 2; ++k) {
            SupControlReport r = verify_sup_control(f, m, 0.5, theta, k, 12);
            CHECK(r.pass);
            CHECK(r.slack > 0.0);
            CHECK(std::isfinite(r.log_window_norm));
        }
    }
    SupControlReport z = verify_sup_control(HermiteFunction(), m, 0.5, 0.0, 1);
    CHECK(z.pass);
    CHECK(z.slack == kInf);
    CHECK_THROWS_AS(verify_sup_control(f, m, 0.5, 0.0, 3, 2), ConfigError);
}

TEST_CASE("sup control verification on compactly supported models") {
    // degenerate weights force an infinite control constant; the check still
    // reports honestly rather than rejecting the class
    InvisibleMollifier moll = build_invisible_sobolev(2, 0.3, 0.1);
    SupControlReport deg = verify_sup_control(
        moll.phi, WeightSequence::sobolev_degenerate(2), 0.3, 0.0, 1, 2);
    CHECK(deg.pass);
    CHECK(deg.log_bound == kInf);
    CHECK(std::isfinite(deg.log_window_norm));

    PiecewisePoly f = iterated_box({0.8, 0.6, 0.4, 0.3, 0.25, 0.2});
    SupControlReport r = verify_sup_control(f, WeightSequence::gevrey(2.0), 0.5, 1.0, 1, 4);
    CHECK(r.pass);
    CHECK(std::isfinite(r.log_bound));
}
