#pragma once

#include <cmath>
#include <numbers>

namespace jobswitch {

/// Standard normal distribution function via the complementary error function.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal density.
inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

}  // namespace jobswitch
