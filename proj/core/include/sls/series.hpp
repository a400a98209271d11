#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sls/rng.hpp"

namespace sls {

/// One observation of the stream. `index` is the position assigned by the
/// source; consecutive samples differ by exactly 1.
struct Sample {
    std::int64_t index = 0;
    double value = 0.0;
};

/// The regressor z_t = [X_{t-1}, ..., X_{t-p}], most recent lag first.
/// `position` is the 1-based stream position t of the sample it regresses.
struct LagVector {
    Eigen::VectorXd entries;
    std::int64_t position = 0;
};

/// Ring buffer over the last p values of a stream. O(p) memory regardless
/// of how many samples pass through.
class LagWindow {
public:
    explicit LagWindow(int order);

    /// Feed the sample at 1-based position t. Once p earlier samples have
    /// been seen, returns the lag vector regressing this sample; during
    /// warm-up returns nullopt. Rejects non-finite values (DataError).
    std::optional<LagVector> push(double value, std::int64_t position);

    /// Pre-fill with history so the next push has a full lag vector.
    /// `history` is in stream order; only its last p values are kept.
    void seed(const std::vector<double>& history);

    int order() const noexcept { return order_; }
    bool warm() const noexcept { return count_ >= order_; }

    /// Copy out the current window contents, oldest value first.
    void copy_ordered(std::vector<double>& out) const;

    /// Bytes resident in this window (fixed once constructed).
    std::size_t resident_bytes() const noexcept;

private:
    int order_;
    std::int64_t count_ = 0;  // values absorbed so far
    int head_ = 0;            // slot of the oldest value once full
    std::vector<double> buf_;
};

/// Innovation distributions for the AR simulator. Student-t draws are
/// standardized by sqrt(df / (df - 2)) so the variance equals scale^2.
struct GaussianInnovation {
    double sigma = 1.0;
};
struct StudentTInnovation {
    double df = 4.0;
    double scale = 1.0;
};
using Innovation = std::variant<GaussianInnovation, StudentTInnovation>;

/// Innovation standard deviation implied by the distribution tag.
double innovation_sigma(const Innovation& innovation);

struct ArProcessSpec {
    Eigen::VectorXd coeffs;     // beta_1, ..., beta_p
    Innovation innovation = GaussianInnovation{};
    std::int64_t burn_in = 0;
    std::uint64_t seed = 0;

    int order() const noexcept { return static_cast<int>(coeffs.size()); }

    /// Throws ConfigError on p < 1, sigma <= 0, scale <= 0 or df <= 2.
    void validate() const;
};

enum class Stability { stable, unit_root, explosive };

struct StabilityClass {
    Stability tag = Stability::stable;
    double max_root_modulus = 0.0;
};

/// Root-modulus classification of the characteristic polynomial
/// z^p - beta_1 z^{p-1} - ... - beta_p against the unit circle,
/// tolerance 1e-6.
StabilityClass classify_stability(const Eigen::VectorXd& coeffs);

/// 500 for stable coefficient vectors, 0 for unit-root or explosive ones
/// (where a stationarity transient does not exist to discard).
std::int64_t default_burn_in(const Eigen::VectorXd& coeffs);

/// On-demand AR(p) sample generator: recursion from zero initial state,
/// burn-in discarded before the first next(). One sample per call, O(p)
/// memory. simulate_ar is this generator drained into a vector, so the
/// two are identical draw for draw.
class ArStreamGenerator {
public:
    explicit ArStreamGenerator(const ArProcessSpec& spec);

    /// Next sample value. Throws DataError if the recursion leaves the
    /// finite range (explosive configurations run too long).
    double next();

    std::int64_t produced() const noexcept { return produced_; }

private:
    double step();

    ArProcessSpec spec_;
    CounterRng rng_;
    std::vector<double> state_;  // last p values, state_[0] most recent
    std::int64_t produced_ = 0;
};

/// X_1, ..., X_n from the AR(p) recursion. Deterministic given
/// (spec, seed, n).
std::vector<double> simulate_ar(const ArProcessSpec& spec, std::int64_t n);

}  // namespace sls
