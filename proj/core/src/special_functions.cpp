#include "sls/special_functions.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "sls/errors.hpp"

namespace sls {

namespace {

// Lower incomplete gamma by power series, x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by Lentz continued fraction, x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("regularized_gamma_p requires a > 0");
    if (x < 0.0) throw ConfigError("regularized_gamma_p requires x >= 0");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_contfrac(a, x);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double chi2_cdf(int dof, double x) {
    if (dof < 1) throw ConfigError("chi2_cdf requires dof >= 1");
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) {
        throw ConfigError("normal_quantile requires prob in (0, 1)");
    }
    // Wichura (1988), algorithm AS 241, PPND16.
    const double q = prob - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? prob : 1.0 - prob;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

double chi2_quantile(int dof, double prob) {
    if (dof < 1) throw ConfigError("chi2_quantile requires dof >= 1");
    if (!(prob > 0.0 && prob < 1.0)) {
        throw ConfigError("chi2_quantile requires prob in (0, 1)");
    }

    static std::mutex cache_mutex;
    static std::map<std::pair<int, double>, double> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({dof, prob});
        if (it != cache.end()) return it->second;
    }

    // Wilson-Hilferty starting point.
    const double k = static_cast<double>(dof);
    const double z = normal_quantile(prob);
    const double wh = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    double x = (wh > 0.0) ? k * wh * wh * wh : 0.5;

    // Expand a bracket [lo, hi] around the root.
    double lo = 0.0;
    double hi = std::max(x * 2.0, k + 10.0);
    while (chi2_cdf(dof, hi) < prob) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);

    // Newton with bisection fallback; the chi2 pdf is the derivative.
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi2_cdf(dof, x) - prob;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        if (hi - lo < 1e-10 * (1.0 + hi)) break;
        const double log_pdf =
            (0.5 * k - 1.0) * std::log(x) - 0.5 * x - std::lgamma(0.5 * k) -
            0.5 * k * std::log(2.0);
        const double pdf = std::exp(log_pdf);
        double next = (pdf > 0.0) ? x - f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 1e-12 * (1.0 + x)) {
            x = next;
            break;
        }
        x = next;
    }

    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(std::make_pair(dof, prob), x);
    return x;
}

}  // namespace sls
