#pragma once

#include <cstdint>

namespace sls {

/// SplitMix64 finalizer. Bijective on 64-bit words; passes BigCrush when
/// driven by a counter, which is how every generator here uses it.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of a word.
constexpr double to_unit(std::uint64_t word) noexcept {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

/// Derive an independent substream seed from a master seed and a role tag.
/// Simulation, sampling and any other consumers of one logical seed must
/// use distinct tags so their draw sequences never alias.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
    return mix64(master ^ mix64(tag));
}

inline constexpr std::uint64_t kSeedTagSimulate = 0x73696d756c617465ULL;  // "simulate"
inline constexpr std::uint64_t kSeedTagSampler  = 0x73616d706c657220ULL;  // "sampler "

/// The uniform variate attached to stream position `index` for a given
/// seed. Pure function of (seed, index): replaying a recorded stream
/// reproduces every Bernoulli decision bit for bit, and parallel
/// replicates with distinct seeds are independent.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t index) noexcept {
    return to_unit(mix64(seed + 0x9e3779b97f4a7c15ULL * index));
}

/// Sequential counter-based generator. State is a single 64-bit counter;
/// identical seeds give identical sequences on every platform.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

    std::uint64_t next_u64() noexcept { return mix64(state_++); }

    /// Uniform in [0, 1).
    double uniform() noexcept { return to_unit(next_u64()); }

    /// Standard normal via Box-Muller. Two uniforms per draw, no cached
    /// spare, so the draw count per sample is fixed.
    double gaussian() noexcept;

    /// Gamma(shape, 1) for shape >= 1, Marsaglia-Tsang squeeze method.
    double gamma(double shape) noexcept;

    /// Student-t with df degrees of freedom (df > 2), unit t-scale.
    double student_t(double df) noexcept;

private:
    std::uint64_t state_;
};

}  // namespace sls
