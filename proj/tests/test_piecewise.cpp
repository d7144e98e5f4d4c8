#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "carleman/piecewise.hpp"

using namespace carleman;

namespace {

// Triangle function: H_1 * H_1, peak value 1 at x = 1, support [0, 2].
PiecewisePoly triangle() { return iterated_box({1.0, 1.0}); }

double triangle_exact(double x) {
    if (x <= 0.0 || x >= 2.0) return 0.0;
    return x <= 1.0 ? x : 2.0 - x;
}

}  // namespace

TEST_CASE("box function basics") {
    PiecewisePoly h = box(0.25);
    CHECK(h.support_lo() == 0.0);
    CHECK(h.support_hi() == 0.25);
    CHECK(h(0.1) == Catch::Approx(4.0));
    CHECK(h(-0.1) == 0.0);
    CHECK(h(0.3) == 0.0);
    CHECK(h.mass() == Catch::Approx(1.0));
    CHECK(sup_norm(h) == Catch::Approx(4.0));
    CHECK_THROWS_AS(box(0.0), NonPositiveWidth);
    CHECK_THROWS_AS(box(-1.0), NonPositiveWidth);
}

TEST_CASE("triangle from two box convolutions") {
    PiecewisePoly t = triangle();
    CHECK(t.support_lo() == Catch::Approx(0.0).margin(1e-15));
    CHECK(t.support_hi() == Catch::Approx(2.0).margin(1e-12));
    for (int i = 0; i <= 40; ++i) {
        double x = -0.2 + 0.06 * i;
        CHECK(t(x) == Catch::Approx(triangle_exact(x)).margin(1e-12));
    }
    CHECK(t.mass() == Catch::Approx(1.0).margin(1e-14));
    CHECK(sup_norm(t) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("quadratic b-spline from three box convolutions") {
    PiecewisePoly b = iterated_box({1.0, 1.0, 1.0});
    CHECK(b.support_hi() == Catch::Approx(3.0).margin(1e-12));
    CHECK(b(1.5) == Catch::Approx(0.75).margin(1e-13));
    CHECK(sup_norm(b) == Catch::Approx(0.75).margin(1e-13));
    CHECK(b.mass() == Catch::Approx(1.0).margin(1e-14));
    // continuity at the interior knots
    for (double x : {1.0, 2.0}) {
        CHECK(b(x - 1e-9) == Catch::Approx(b(x + 1e-9)).margin(1e-8));
    }
}

TEST_CASE("mass is preserved under repeated convolution") {
    PiecewisePoly f = iterated_box({0.5, 0.3, 0.2, 0.7, 0.11});
    CHECK(f.mass() == Catch::Approx(1.0).margin(1e-13));
    CHECK(f.support_hi() == Catch::Approx(1.81).margin(1e-12));
}

TEST_CASE("first derivative of the triangle is a step, no atoms") {
    Distributional d = derivative(triangle(), 1);
    CHECK(d.singular.empty());
    CHECK(d.regular(0.5) == Catch::Approx(1.0).margin(1e-12));
    CHECK(d.regular(1.5) == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("second derivative of the triangle is purely atomic") {
    Distributional d = derivative(triangle(), 2);
    REQUIRE(d.singular.atoms.size() == 3);
    CHECK(d.singular.atoms[0].first == Catch::Approx(0.0).margin(1e-12));
    CHECK(d.singular.atoms[0].second == Catch::Approx(1.0).margin(1e-9));
    CHECK(d.singular.atoms[1].first == Catch::Approx(1.0).margin(1e-12));
    CHECK(d.singular.atoms[1].second == Catch::Approx(-2.0).margin(1e-9));
    CHECK(d.singular.atoms[2].first == Catch::Approx(2.0).margin(1e-12));
    CHECK(d.singular.atoms[2].second == Catch::Approx(1.0).margin(1e-9));
    CHECK(sup_norm(d.regular) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("differentiating past a jump is rejected") {
    CHECK_THROWS_AS(derivative(box(1.0), 2), DistributionalDerivative);
    CHECK_THROWS_AS(derivative(triangle(), 3), DistributionalDerivative);
}

TEST_CASE("derivative atoms match the closed-form subset-sum expansion") {
    std::vector<double> widths{1.0, 0.5, 0.25};
    PiecewisePoly f = iterated_box(widths);
    Distributional d = derivative(f, 3);
    AtomicMeasure expect = box_chain_derivative_atoms(widths);
    REQUIRE(d.singular.atoms.size() == expect.atoms.size());
    REQUIRE(expect.atoms.size() == 8);
    for (size_t i = 0; i < expect.atoms.size(); ++i) {
        CHECK(d.singular.atoms[i].first ==
              Catch::Approx(expect.atoms[i].first).margin(1e-11));
        CHECK(d.singular.atoms[i].second ==
              Catch::Approx(expect.atoms[i].second).epsilon(1e-9));
    }
    // masses all have magnitude 1/(a1 a2 a3) = 8
    for (const auto& [loc, mass] : expect.atoms) CHECK(std::abs(mass) == Catch::Approx(8.0));
}

TEST_CASE("lp quasinorm closed forms") {
    // integral of (1/a)^p over [0,a] is a^{1-p}
    CHECK(lp_quasinorm(box(0.25), 0.5) == Catch::Approx(0.5).epsilon(1e-9));
    CHECK(lp_quasinorm(box(0.1), 0.3) == Catch::Approx(std::pow(0.1, 0.7)).epsilon(1e-9));
    // integral of |triangle|^{1/2} = 2 * (2/3) = 4/3
    CHECK(lp_quasinorm(triangle(), 0.5) == Catch::Approx(4.0 / 3.0).epsilon(1e-9));
    // p = 1 on a nonnegative function is just the mass
    CHECK(lp_quasinorm(triangle(), 1.0) == Catch::Approx(1.0).epsilon(1e-10));
    CHECK(lp_quasinorm(PiecewisePoly::zero(), 0.5) == 0.0);
    CHECK_THROWS_AS(lp_quasinorm(triangle(), 0.0), ConfigError);
    CHECK_THROWS_AS(lp_quasinorm(triangle(), 1.5), ConfigError);
}

TEST_CASE("lp quasinorm handles sign changes") {
    // f = T(x) - T(x - 1): changes sign at x = 1.5 inside a piece
    PiecewisePoly f = triangle() - triangle().shifted(1.0);
    double got = lp_quasinorm(f, 0.5, 1e-11);
    // Riemann oracle
    double h = 1e-5;
    StableSum s;
    for (double x = f.support_lo() + h / 2; x < f.support_hi(); x += h)
        s.add(h * std::sqrt(std::abs(f(x))));
    CHECK(got == Catch::Approx(s.value()).epsilon(2e-4));
}

TEST_CASE("lp atomic sum") {
    AtomicMeasure mu = AtomicMeasure::from_unsorted({{0.0, 4.0}, {1.0, -4.0}});
    CHECK(lp_atomic(mu, 0.5) == Catch::Approx(4.0));
}

TEST_CASE("atom coalescing and mass drop") {
    AtomicMeasure mu =
        AtomicMeasure::from_unsorted({{1.0, 2.0}, {1.0 + 1e-16, 3.0}, {2.0, 1e-310}});
    REQUIRE(mu.atoms.size() == 1);
    CHECK(mu.atoms[0].second == Catch::Approx(5.0));
}

TEST_CASE("convolution against an atomic measure is an exact shifted sum") {
    AtomicMeasure mu = AtomicMeasure::from_unsorted({{0.0, -1.0}, {0.5, 1.0}});
    PiecewisePoly g = convolve_atomic(mu, triangle());
    for (int i = 0; i <= 100; ++i) {
        double x = -0.3 + 0.03 * i;
        double want = triangle_exact(x - 0.5) - triangle_exact(x);
        CHECK(g(x) == Catch::Approx(want).margin(1e-11));
    }
}

TEST_CASE("algebra: sum, difference, scaling, shifting") {
    PiecewisePoly t = triangle();
    PiecewisePoly s = t + t.shifted(0.5);
    for (double x : {0.1, 0.7, 1.2, 1.9, 2.3})
        CHECK(s(x) == Catch::Approx(triangle_exact(x) + triangle_exact(x - 0.5)).margin(1e-12));
    CHECK(s.mass() == Catch::Approx(2.0).margin(1e-13));
    CHECK(t.scaled(3.0).mass() == Catch::Approx(3.0).margin(1e-13));
    CHECK((t - t).mass() == Catch::Approx(0.0).margin(1e-13));
    PiecewisePoly moved = t.shifted(-4.0);
    CHECK(moved.support_lo() == Catch::Approx(-4.0));
    CHECK(moved(-3.0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("range over a window includes the implicit zero extension") {
    PiecewisePoly t = triangle();
    auto [mn1, mx1] = range_on(t, 0.5, 2.0);
    CHECK(mn1 == Catch::Approx(0.0).margin(1e-12));
    CHECK(mx1 == Catch::Approx(1.0).margin(1e-12));
    auto [mn2, mx2] = range_on(t, 5.0, 6.0);
    CHECK(mn2 == 0.0);
    CHECK(mx2 == 0.0);
    auto [mn3, mx3] = range_on(t - t.shifted(0.5), 0.0, 3.0);
    CHECK(mn3 < 0.0);
    CHECK(mx3 > 0.0);
}

TEST_CASE("construction validation") {
    CHECK_THROWS_AS(PiecewisePoly::from_pieces({0.0, 0.0}, {Polynomial::constant(1.0)}),
                    ConfigError);
    CHECK_THROWS_AS(PiecewisePoly::from_pieces({0.0}, {}), ConfigError);
    // zero pieces at the ends are trimmed away
    PiecewisePoly f = PiecewisePoly::from_pieces(
        {0.0, 1.0, 2.0, 3.0},
        {Polynomial{}, Polynomial::constant(2.0), Polynomial{}});
    CHECK(f.support_lo() == 1.0);
    CHECK(f.support_hi() == 2.0);
    CHECK(f.piece_count() == 1);
}

TEST_CASE("grid oracle agrees with exact convolution") {
    PiecewisePoly t = triangle();
    double a = 0.7;
    PiecewisePoly exact = convolve_box(t, a);

    SECTION("direct discrete convolution, coarse") {
        double h = 1e-3;
        SampledFunction oracle = grid_oracle_convolve(sample(t, h), sample(box(a), h));
        double worst = 0.0;
        for (size_t i = 0; i < oracle.values.size(); ++i)
            worst = std::max(worst, std::abs(oracle.values[i] - exact(oracle.x_at(i))));
        CHECK(worst < 5e-3);
    }

    SECTION("sliding trapezoid window, tight") {
        double h = 1e-3;
        SampledFunction oracle = grid_convolve_box(sample(t, h), a);
        double worst = 0.0;
        for (size_t i = 0; i < oracle.values.size(); ++i)
            worst = std::max(worst, std::abs(oracle.values[i] - exact(oracle.x_at(i))));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("chains of grid box convolutions track the exact chain") {
    std::vector<double> widths{0.6, 0.45, 0.3};
    PiecewisePoly exact = iterated_box(widths);
    double h = 5e-4;
    SampledFunction g = grid_box_chain(widths, h);
    double worst = 0.0;
    for (size_t i = 0; i < g.values.size(); ++i)
        worst = std::max(worst, std::abs(g.values[i] - exact(g.x_at(i))));
    CHECK(worst < 1e-5);

    // narrow widths stress the jump handling at the start of the chain
    std::vector<double> narrow{0.05, 0.9, 0.07, 0.31};
    PiecewisePoly exact2 = iterated_box(narrow);
    SampledFunction g2 = grid_box_chain(narrow, 1e-4);
    double worst2 = 0.0;
    for (size_t i = 0; i < g2.values.size(); ++i)
        worst2 = std::max(worst2, std::abs(g2.values[i] - exact2(g2.x_at(i))));
    CHECK(worst2 < 1e-4);
}

TEST_CASE("discrete convolution commutes") {
    double h = 2e-3;
    SampledFunction fg = grid_oracle_convolve(sample(triangle(), h), sample(box(0.4), h));
    SampledFunction gf = grid_oracle_convolve(sample(box(0.4), h), sample(triangle(), h));
    REQUIRE(fg.values.size() == gf.values.size());
    double worst = 0.0;
    for (size_t i = 0; i < fg.values.size(); ++i)
        worst = std::max(worst, std::abs(fg.values[i] - gf.values[i]));
    CHECK(worst < 1e-12);
    CHECK(fg.x0 == gf.x0);
}

TEST_CASE("support endpoints after convolution") {
    PiecewisePoly f = convolve_box(box(0.25), 0.5);
    CHECK(f.support_lo() == Catch::Approx(0.0).margin(1e-15));
    CHECK(f.support_hi() == Catch::Approx(0.75).margin(1e-13));
    // trapezoid plateau value between 0.25 and 0.5 is 1/0.5 = 2
    CHECK(f(0.375) == Catch::Approx(2.0).margin(1e-12));
}
