#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace carleman {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest width we accept before declaring underflow in a schedule.
inline constexpr double kWidthFloor = 1e-300;

// Configuration problems: bad arguments, malformed inputs, violated preconditions.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical machinery gave up (depth caps, degree caps, divergent tails, ...).
struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A machine-checked certificate did not hold.  The message names the violated
// quantity and carries both sides of the failed comparison.
struct CertificateFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Neumaier-compensated accumulator.  Cheap enough to use everywhere a sum of
// more than a handful of terms feeds a certificate.
class StableSum {
  public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    void add(const StableSum& o) {
        add(o.sum_);
        add(o.comp_);
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline bool nearly_equal(double a, double b, double rel, double abs_floor = 0.0) {
    double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= std::max(rel * scale, abs_floor);
}

// sgn with sgn(0) = 0.
inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace carleman
