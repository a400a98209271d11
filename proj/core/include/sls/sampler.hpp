#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sls/pilot.hpp"
#include "sls/rng.hpp"
#include "sls/series.hpp"

namespace sls {

enum class SamplingMethod { leverage, uniform, fixed_length };

const char* to_string(SamplingMethod m) noexcept;

struct SamplerConfig {
    double threshold_c = 0.0;          // information threshold c
    std::uint64_t seed = 0;
    std::int64_t max_block_len = 1'000'000;  // safeguard against non-terminating expansion
    double leverage_scale = 1.0;       // start-rate tuning; relative probabilities unchanged
    double uniform_q = 0.0;            // start probability of the uniform rule
};

/// One consecutive block [X_l, ..., X_tau]. `values` carries the p
/// pre-start lags as well, so the block is self-contained for estimation.
struct SlsBlock {
    std::int64_t start = 0;  // l, 1-based stream position
    std::int64_t stop = 0;   // tau_c
    std::vector<double> values;  // X_{l-p}, ..., X_{tau_c}
    double acc_info = 0.0;       // sum of ||z_i||^2 over i = l..tau_c
    SamplingMethod method = SamplingMethod::leverage;

    std::int64_t length() const noexcept { return stop - start + 1; }
};

enum class EventKind { none, block_started, block_completed, safeguard_abort };

struct SamplerEvent {
    EventKind kind = EventKind::none;
    double leverage_score = 0.0;  // streaming leverage of the sample just seen
    std::int64_t start = 0;       // set for block_started
    std::optional<SlsBlock> block;  // set for block_completed
};

enum class SamplerPhase { seeking_start, expanding };

/// zT Omega z in O(p^2). Throws ConfigError on a dimension mismatch.
double streaming_leverage(const Eigen::VectorXd& z, const Eigen::MatrixXd& precision);

/// Bernoulli trial with success probability min(h, 1).
bool bernoulli_start(double h, CounterRng& rng);

/// The trial the sampler actually runs: the uniform variate is keyed by
/// (seed, position), so decisions replay exactly.
bool bernoulli_start_at(double h, std::uint64_t seed, std::int64_t position);

/// Online block selector: per-sample leverage scoring, Bernoulli start
/// trials while seeking, sequential expansion until the accumulated
/// information reaches c. Single-consumer; resident state is O(p^2) plus
/// the active block buffer.
class SequentialSampler {
public:
    SequentialSampler(const PilotModel& pilot, const SamplerConfig& cfg,
                      SamplingMethod method = SamplingMethod::leverage);

    /// Seed the lag window with a stream prefix (only the last p values
    /// are kept); the next step() consumes position prefix_len + 1.
    void prime(std::span<const double> prefix);

    /// Consume the next sample. At most one block event per call.
    SamplerEvent step(double x);

    SamplerPhase phase() const noexcept { return phase_; }
    double acc_info() const noexcept { return acc_info_; }
    std::int64_t next_position() const noexcept { return next_position_; }
    int order() const noexcept { return order_; }

    /// Bytes of sampler state excluding the active block buffer; fixed at
    /// construction.
    std::size_t resident_state_bytes() const noexcept;
    std::size_t block_buffer_bytes() const noexcept;

private:
    void reset_to_seeking() noexcept;

    int order_;
    double threshold_c_;
    std::uint64_t seed_;
    std::int64_t max_block_len_;
    double leverage_scale_;
    double uniform_q_;
    SamplingMethod method_;
    Eigen::MatrixXd precision_;

    LagWindow lag_;
    std::int64_t next_position_ = 1;
    SamplerPhase phase_ = SamplerPhase::seeking_start;
    std::int64_t block_start_ = 0;
    double acc_info_ = 0.0;
    std::vector<double> block_values_;
};

struct BlockCollection {
    std::vector<SlsBlock> blocks;
    std::int64_t aborts = 0;
};

/// Batch replay: run a fresh sampler over `stream`, sampling from
/// position first_position (samples before it only warm the machine and
/// never start blocks). Equals the step-by-step online run with the same
/// seed, block for block.
BlockCollection collect_blocks(std::span<const double> stream, const PilotModel& pilot,
                               const SamplerConfig& cfg, SamplingMethod method,
                               std::int64_t first_position,
                               std::size_t max_blocks = 0);

/// Deterministic baseline: the block [X_{n0+1}, ..., X_{n0+len}] with its
/// p pre-start lags. acc_info is reported but not constrained by any c.
SlsBlock fixed_length_block(std::span<const double> stream, std::int64_t n0,
                            std::int64_t len, int p);

}  // namespace sls
