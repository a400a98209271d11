#include "sls/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sls/errors.hpp"

namespace sls {

const char* to_string(SamplingMethod m) noexcept {
    switch (m) {
        case SamplingMethod::leverage: return "leverage";
        case SamplingMethod::uniform: return "uniform";
        case SamplingMethod::fixed_length: return "fixed_length";
    }
    return "unknown";
}

double streaming_leverage(const Eigen::VectorXd& z, const Eigen::MatrixXd& precision) {
    if (z.size() != precision.rows() || precision.rows() != precision.cols()) {
        throw ConfigError("streaming_leverage: dimension mismatch (z has " +
                          std::to_string(z.size()) + " entries, precision is " +
                          std::to_string(precision.rows()) + "x" +
                          std::to_string(precision.cols()) + ")");
    }
    return z.dot(precision * z);
}

bool bernoulli_start(double h, CounterRng& rng) {
    return rng.uniform() < std::min(h, 1.0);
}

bool bernoulli_start_at(double h, std::uint64_t seed, std::int64_t position) {
    return keyed_uniform(seed, static_cast<std::uint64_t>(position)) < std::min(h, 1.0);
}

SequentialSampler::SequentialSampler(const PilotModel& pilot, const SamplerConfig& cfg,
                                     SamplingMethod method)
    : order_(pilot.order),
      threshold_c_(cfg.threshold_c),
      seed_(cfg.seed),
      max_block_len_(cfg.max_block_len),
      leverage_scale_(cfg.leverage_scale),
      uniform_q_(cfg.uniform_q),
      method_(method),
      precision_(pilot.precision),
      lag_(pilot.order) {
    if (!(threshold_c_ > 0.0)) throw ConfigError("information threshold c must be > 0");
    if (max_block_len_ < pilot.order + 1) {
        throw ConfigError("max_block_len must be >= order + 1");
    }
    if (!(leverage_scale_ > 0.0)) throw ConfigError("leverage_scale must be > 0");
    if (method_ == SamplingMethod::fixed_length) {
        throw ConfigError("fixed_length is not a sequential sampling rule; "
                          "use fixed_length_block");
    }
    if (method_ == SamplingMethod::uniform && !(uniform_q_ >= 0.0 && uniform_q_ <= 1.0)) {
        throw ConfigError("uniform_q must lie in [0, 1]");
    }
}

void SequentialSampler::prime(std::span<const double> prefix) {
    const std::size_t keep = std::min<std::size_t>(prefix.size(),
                                                   static_cast<std::size_t>(order_));
    std::vector<double> tail(prefix.end() - static_cast<std::ptrdiff_t>(keep), prefix.end());
    lag_.seed(tail);
    next_position_ = static_cast<std::int64_t>(prefix.size()) + 1;
}

void SequentialSampler::reset_to_seeking() noexcept {
    phase_ = SamplerPhase::seeking_start;
    block_start_ = 0;
    acc_info_ = 0.0;
    block_values_.clear();
    block_values_.shrink_to_fit();
}

SamplerEvent SequentialSampler::step(double x) {
    const std::int64_t t = next_position_++;
    auto maybe_z = lag_.push(x, t);
    if (!maybe_z) {
        return SamplerEvent{EventKind::none, 0.0, 0, std::nullopt};
    }
    const Eigen::VectorXd& z = maybe_z->entries;
    const double h = streaming_leverage(z, precision_);
    const double info = z.squaredNorm();

    SamplerEvent ev;
    ev.leverage_score = h;

    if (phase_ == SamplerPhase::seeking_start) {
        const double prob = (method_ == SamplingMethod::leverage)
                                ? leverage_scale_ * h
                                : uniform_q_;
        if (!bernoulli_start_at(prob, seed_, t)) return ev;

        // Start: X_l contributes its own ||z_l||^2 in this same step.
        block_start_ = t;
        acc_info_ = info;
        block_values_.clear();
        for (int k = order_ - 1; k >= 0; --k) block_values_.push_back(z(k));
        block_values_.push_back(x);

        if (acc_info_ >= threshold_c_) {
            SlsBlock block{t, t, std::move(block_values_), acc_info_, method_};
            block_values_ = {};
            reset_to_seeking();
            ev.kind = EventKind::block_completed;
            ev.block = std::move(block);
            return ev;
        }
        phase_ = SamplerPhase::expanding;
        ev.kind = EventKind::block_started;
        ev.start = t;
        return ev;
    }

    // Expanding: accumulate; no new start trials run inside a block.
    acc_info_ += info;
    block_values_.push_back(x);
    if (acc_info_ >= threshold_c_) {
        SlsBlock block{block_start_, t, std::move(block_values_), acc_info_, method_};
        block_values_ = {};
        reset_to_seeking();
        ev.kind = EventKind::block_completed;
        ev.block = std::move(block);
        return ev;
    }
    if (t - block_start_ + 1 >= max_block_len_) {
        ev.kind = EventKind::safeguard_abort;
        ev.start = block_start_;
        reset_to_seeking();
        return ev;
    }
    return ev;
}

std::size_t SequentialSampler::resident_state_bytes() const noexcept {
    return sizeof(*this) + lag_.resident_bytes() - sizeof(LagWindow) +
           static_cast<std::size_t>(precision_.size()) * sizeof(double);
}

std::size_t SequentialSampler::block_buffer_bytes() const noexcept {
    return block_values_.capacity() * sizeof(double);
}

BlockCollection collect_blocks(std::span<const double> stream, const PilotModel& pilot,
                               const SamplerConfig& cfg, SamplingMethod method,
                               std::int64_t first_position, std::size_t max_blocks) {
    if (first_position < 1) throw ConfigError("first_position must be >= 1");
    SequentialSampler sampler(pilot, cfg, method);
    const auto prefix_len = static_cast<std::size_t>(first_position - 1);
    if (prefix_len > stream.size()) {
        throw DataError("collect_blocks: first_position beyond the stream");
    }
    sampler.prime(stream.subspan(0, prefix_len));

    BlockCollection out;
    for (std::size_t i = prefix_len; i < stream.size(); ++i) {
        SamplerEvent ev = sampler.step(stream[i]);
        if (ev.kind == EventKind::block_completed) {
            out.blocks.push_back(std::move(*ev.block));
            if (max_blocks > 0 && out.blocks.size() >= max_blocks) break;
        } else if (ev.kind == EventKind::safeguard_abort) {
            ++out.aborts;
        }
    }
    return out;
}

SlsBlock fixed_length_block(std::span<const double> stream, std::int64_t n0,
                            std::int64_t len, int p) {
    if (len < 1) throw ConfigError("fixed_length_block requires len >= 1");
    if (p < 1) throw ConfigError("fixed_length_block requires p >= 1");
    if (n0 < p) {
        throw DataError("fixed_length_block: n0 must leave p lags before the block");
    }
    if (stream.size() < static_cast<std::size_t>(n0 + len)) {
        throw DataError("fixed_length_block: stream of " + std::to_string(stream.size()) +
                        " samples too short for n0 + len = " + std::to_string(n0 + len));
    }

    SlsBlock block;
    block.start = n0 + 1;
    block.stop = n0 + len;
    block.method = SamplingMethod::fixed_length;
    block.values.assign(stream.begin() + (n0 - p), stream.begin() + (n0 + len));

    Eigen::VectorXd z(p);
    double acc = 0.0;
    for (std::int64_t row = 0; row < len; ++row) {
        const std::int64_t x_idx = p + row;  // index of X_{n0+1+row} inside values
        for (int k = 0; k < p; ++k) z(k) = block.values[static_cast<std::size_t>(x_idx - 1 - k)];
        acc += z.squaredNorm();
    }
    block.acc_info = acc;
    return block;
}

}  // namespace sls
