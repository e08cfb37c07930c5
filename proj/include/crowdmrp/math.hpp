#pragma once

#include <cmath>
#include <numbers>

namespace crowdmrp {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(logistic(x)) without overflow.
inline double log_logistic(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double normal_logpdf(double x, double sd) {
    const double z = x / sd;
    return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

// Half-normal(0, sd) on x > 0.
inline double half_normal_logpdf(double x, double sd) {
    return std::numbers::ln2 + normal_logpdf(x, sd);
}

}  // namespace crowdmrp
