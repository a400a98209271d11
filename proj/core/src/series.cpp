#include "sls/series.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "sls/errors.hpp"
#include "sls/linalg.hpp"

namespace sls {

LagWindow::LagWindow(int order) : order_(order) {
    if (order < 1) throw ConfigError("lag window order must be >= 1");
    buf_.assign(static_cast<std::size_t>(order), 0.0);
}

std::optional<LagVector> LagWindow::push(double value, std::int64_t position) {
    if (!std::isfinite(value)) {
        throw DataError("non-finite sample at position " + std::to_string(position));
    }
    std::optional<LagVector> out;
    if (count_ >= order_) {
        LagVector z;
        z.entries.resize(order_);
        // Most recent lag first: buf slot (head_ - 1 + order_) % order_ holds X_{t-1}.
        for (int k = 0; k < order_; ++k) {
            const int slot = (head_ + order_ - 1 - k) % order_;
            z.entries(k) = buf_[static_cast<std::size_t>(slot)];
        }
        z.position = position;
        out = std::move(z);
    }
    buf_[static_cast<std::size_t>(head_)] = value;
    head_ = (head_ + 1) % order_;
    ++count_;
    return out;
}

void LagWindow::seed(const std::vector<double>& history) {
    for (double v : history) {
        if (!std::isfinite(v)) throw DataError("non-finite value in lag window history");
        buf_[static_cast<std::size_t>(head_)] = v;
        head_ = (head_ + 1) % order_;
        ++count_;
    }
}

void LagWindow::copy_ordered(std::vector<double>& out) const {
    out.clear();
    const int have = static_cast<int>(std::min<std::int64_t>(count_, order_));
    for (int k = have; k >= 1; --k) {
        const int slot = (head_ + order_ - k) % order_;
        out.push_back(buf_[static_cast<std::size_t>(slot)]);
    }
}

std::size_t LagWindow::resident_bytes() const noexcept {
    return sizeof(*this) + buf_.capacity() * sizeof(double);
}

double innovation_sigma(const Innovation& innovation) {
    if (const auto* g = std::get_if<GaussianInnovation>(&innovation)) return g->sigma;
    const auto& t = std::get<StudentTInnovation>(innovation);
    return t.scale;
}

void ArProcessSpec::validate() const {
    if (coeffs.size() < 1) throw ConfigError("AR order must be >= 1");
    if (burn_in < 0) throw ConfigError("burn_in must be non-negative");
    if (const auto* g = std::get_if<GaussianInnovation>(&innovation)) {
        if (!(g->sigma > 0.0)) throw ConfigError("gaussian sigma must be > 0");
    } else {
        const auto& t = std::get<StudentTInnovation>(innovation);
        if (!(t.df > 2.0)) throw ConfigError("student_t df must be > 2 (finite variance)");
        if (!(t.scale > 0.0)) throw ConfigError("student_t scale must be > 0");
    }
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        if (!std::isfinite(coeffs(i))) throw ConfigError("AR coefficients must be finite");
    }
}

StabilityClass classify_stability(const Eigen::VectorXd& coeffs) {
    constexpr double tol = 1e-6;
    StabilityClass out;
    out.max_root_modulus = max_root_modulus(coeffs);
    if (out.max_root_modulus < 1.0 - tol) {
        out.tag = Stability::stable;
    } else if (out.max_root_modulus <= 1.0 + tol) {
        out.tag = Stability::unit_root;
    } else {
        out.tag = Stability::explosive;
    }
    return out;
}

std::int64_t default_burn_in(const Eigen::VectorXd& coeffs) {
    return classify_stability(coeffs).tag == Stability::stable ? 500 : 0;
}

ArStreamGenerator::ArStreamGenerator(const ArProcessSpec& spec)
    : spec_(spec), rng_(spec.seed) {
    spec_.validate();
    state_.assign(static_cast<std::size_t>(spec_.order()), 0.0);
    for (std::int64_t i = 0; i < spec_.burn_in; ++i) step();
}

double ArStreamGenerator::step() {
    double eps;
    if (const auto* g = std::get_if<GaussianInnovation>(&spec_.innovation)) {
        eps = g->sigma * rng_.gaussian();
    } else {
        const auto& t = std::get<StudentTInnovation>(spec_.innovation);
        eps = t.scale * rng_.student_t(t.df) / std::sqrt(t.df / (t.df - 2.0));
    }
    double x = eps;
    for (Eigen::Index j = 0; j < spec_.coeffs.size(); ++j) {
        x += spec_.coeffs(j) * state_[static_cast<std::size_t>(j)];
    }
    if (!std::isfinite(x)) {
        throw DataError("AR recursion diverged to a non-finite value after " +
                        std::to_string(produced_) + " samples");
    }
    for (std::size_t j = state_.size() - 1; j >= 1; --j) state_[j] = state_[j - 1];
    state_[0] = x;
    return x;
}

double ArStreamGenerator::next() {
    ++produced_;
    return step();
}

std::vector<double> simulate_ar(const ArProcessSpec& spec, std::int64_t n) {
    if (n < 1) throw ConfigError("simulate_ar requires n >= 1");
    ArStreamGenerator gen(spec);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out.push_back(gen.next());
    return out;
}

}  // namespace sls
