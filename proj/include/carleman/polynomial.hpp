#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "carleman/numeric.hpp"

namespace carleman {

inline constexpr int kDegreeCap = 64;

struct DegreeCapExceeded : ComputationError {
    using ComputationError::ComputationError;
};

// Dense univariate polynomial in a local variable t.  Pieces of a piecewise
// function each carry one of these with t measured from the piece's left
// breakpoint, which keeps coefficients well scaled even when breakpoints sit
// far from the origin.
class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial constant(double v) {
        return v == 0.0 ? Polynomial() : Polynomial(std::vector<double>{v});
    }

    bool is_zero() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    const std::vector<double>& coeffs() const { return c_; }
    double coeff(int i) const {
        return (i >= 0 && i < static_cast<int>(c_.size())) ? c_[static_cast<size_t>(i)] : 0.0;
    }

    double operator()(double t) const {
        double acc = 0.0;
        for (size_t i = c_.size(); i-- > 0;) acc = acc * t + c_[i];
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<double> d(c_.size() - 1);
        for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
        return Polynomial(std::move(d));
    }

    // Antiderivative with value 0 at t = 0.
    Polynomial antiderivative() const {
        check_degree(degree() + 1);
        if (c_.empty()) return {};
        std::vector<double> a(c_.size() + 1, 0.0);
        for (size_t i = 0; i < c_.size(); ++i) a[i + 1] = c_[i] / static_cast<double>(i + 1);
        return Polynomial(std::move(a));
    }

    // p(t + h), Shaw-Traub style repeated synthetic division.
    Polynomial taylor_shift(double h) const {
        if (c_.empty() || h == 0.0) return *this;
        std::vector<double> a = c_;
        size_t n = a.size();
        for (size_t i = 0; i + 1 < n; ++i)
            for (size_t j = n - 1; j-- > i;) a[j] += h * a[j + 1];
        return Polynomial(std::move(a));
    }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
        return Polynomial(std::move(r));
    }
    Polynomial operator-(const Polynomial& o) const { return *this + o.scaled(-1.0); }

    Polynomial scaled(double s) const {
        if (s == 0.0) return {};
        std::vector<double> r = c_;
        for (double& v : r) v *= s;
        return Polynomial(std::move(r));
    }

    Polynomial operator*(const Polynomial& o) const {
        if (c_.empty() || o.c_.empty()) return {};
        check_degree(degree() + o.degree());
        std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
        for (size_t i = 0; i < c_.size(); ++i)
            for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
        return Polynomial(std::move(r));
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

  private:
    static void check_degree(int d) {
        if (d > kDegreeCap) throw DegreeCapExceeded("polynomial degree cap (64) exceeded");
    }
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
        if (static_cast<int>(c_.size()) - 1 > kDegreeCap)
            throw DegreeCapExceeded("polynomial degree cap (64) exceeded");
    }

    std::vector<double> c_;
};

namespace detail {

// One root in a bracket with a guaranteed sign change.  Bisection keeps the
// bracket certified; Newton accelerates once it stays inside.
inline double polish_root(const Polynomial& q, const Polynomial& dq, double a, double b,
                          double fa) {
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        double fx = q(x);
        if (fx == 0.0) return x;
        if ((fx > 0) == (fa > 0)) {
            a = x;
        } else {
            b = x;
        }
        double width = b - a;
        if (width <= 1e-15 * std::max({std::abs(a), std::abs(b), 1e-30})) break;
        double d = dq(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (a + b);
        x = (xn > a && xn < b) ? xn : 0.5 * (a + b);
    }
    return x;
}

}  // namespace detail

// All real roots of q in [lo, hi], found by recursing on the derivative so
// that q is monotone between consecutive candidates.  Touch points where q
// attains 0 without a sign change are reported too (they sit among the
// critical points).  No eigenvalue machinery involved.
inline std::vector<double> real_roots_in(const Polynomial& q, double lo, double hi) {
    std::vector<double> roots;
    if (q.is_zero() || q.degree() == 0 || !(lo < hi)) return roots;
    if (q.degree() == 1) {
        double r = -q.coeff(0) / q.coeff(1);
        if (r >= lo && r <= hi) roots.push_back(r);
        return roots;
    }
    Polynomial dq = q.derivative();
    std::vector<double> nodes = real_roots_in(dq, lo, hi);
    nodes.insert(nodes.begin(), lo);
    nodes.push_back(hi);
    std::sort(nodes.begin(), nodes.end());

    double span = hi - lo;
    double val_scale = std::max(q.max_abs_coeff(), 1e-300);
    double zero_tol = 1e-14 * val_scale * std::max(1.0, span);

    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
        double a = nodes[i], b = nodes[i + 1];
        if (!(a < b)) continue;
        double fa = q(a), fb = q(b);
        if (std::abs(fa) <= zero_tol && (roots.empty() || roots.back() < a - 1e-15 * span))
            roots.push_back(a);
        if (sgn(fa) * sgn(fb) < 0) {
            double r = detail::polish_root(q, dq, a, b, fa);
            if (roots.empty() || r > roots.back() + 1e-15 * std::max(1.0, span))
                roots.push_back(r);
        }
    }
    double fb = q(hi);
    if (std::abs(fb) <= zero_tol && (roots.empty() || roots.back() < hi - 1e-15 * span))
        roots.push_back(hi);
    return roots;
}

}  // namespace carleman
