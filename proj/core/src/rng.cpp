#include "sls/rng.hpp"

#include <cmath>

namespace sls {

double CounterRng::gaussian() noexcept {
    // Box-Muller; u1 nudged away from 0 so the log stays finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double CounterRng::gamma(double shape) noexcept {
    // Marsaglia & Tsang (2000). Rejection loop; deterministic given the
    // counter sequence.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double CounterRng::student_t(double df) noexcept {
    const double z = gaussian();
    const double chi2 = 2.0 * gamma(0.5 * df);  // chi-square with df dof
    return z / std::sqrt(chi2 / df);
}

}  // namespace sls
