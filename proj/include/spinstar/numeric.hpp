// numeric.hpp: small numerically stable scalar helpers

#pragma once

#include <cmath>
#include <complex>

namespace spinstar {

/// sin(x)/x, continuous at 0.
inline double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// (1 - cos(w t)) / w^2, continuous at w = 0 where it equals t^2/2.
inline double one_minus_cos_over_sq(double w, double t) {
    const double s = 0.5 * t * sinc(0.5 * w * t);
    return 2.0 * s * s;
}

/// (1 - e^{i w t} + i w t) / w^2, continuous at w = 0 where it equals t^2/2.
/// This is the double integral of e^{i w tau} over 0 <= tau <= t' <= t.
inline std::complex<double> exp_double_integral(double w, double t) {
    const double z = w * t;
    if (std::abs(z) < 0.05) {
        // t^2 * sum_{n>=2} -(i)^n z^(n-2) / n!
        const std::complex<double> iz{0.0, z};
        std::complex<double> term{0.5, 0.0};
        std::complex<double> sum{0.0, 0.0};
        for (int n = 2; n < 14; ++n) {
            sum += term;
            term *= iz / static_cast<double>(n + 1);
        }
        return sum * (t * t);
    }
    const std::complex<double> e = std::polar(1.0, z);
    return (1.0 - e + std::complex<double>{0.0, z}) / (w * w);
}

} // namespace spinstar
