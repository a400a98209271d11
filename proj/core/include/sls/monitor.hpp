#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sls/estimation.hpp"
#include "sls/pilot.hpp"
#include "sls/sampler.hpp"

namespace sls {

struct MonitorVerdict {
    std::int64_t start = 0;  // block positions, 1-based
    std::int64_t stop = 0;
    double chi2 = 0.0;       // chi2_SLS against the pilot estimates
    double threshold = 0.0;  // chi2 quantile at 1 - alpha, pilot order dof
    bool alarm = false;
    Eigen::VectorXd beta_hat;
    bool degenerate = false;  // rank-deficient block; alarm suppressed
};

/// Restart loop over the sampler: each completed block is scored with
/// chi2_SLS = (beta_hat - beta0)^T Gamma^T Gamma (beta_hat - beta0) / sigma0^2
/// against the pilot model. One verdict per block, in completion order.
class Monitor {
public:
    Monitor(const PilotModel& pilot, const SamplerConfig& cfg, double alpha);

    /// Seed the lag window from a stream prefix (normally the pilot data).
    void prime(std::span<const double> prefix);

    /// Consume one sample; a verdict appears when a block completes.
    std::optional<MonitorVerdict> step(double x);

    std::int64_t aborts() const noexcept { return aborts_; }
    double threshold() const noexcept { return threshold_; }
    std::size_t resident_state_bytes() const noexcept;

private:
    PilotModel pilot_;
    SequentialSampler sampler_;
    double threshold_;
    std::int64_t aborts_ = 0;
};

/// Run the monitor over a recorded stream whose first pilot.n0 samples
/// were the pilot data; sampling begins at position pilot.n0 + 1.
std::vector<MonitorVerdict> monitor_stream(std::span<const double> stream,
                                           const PilotModel& pilot,
                                           const SamplerConfig& cfg, double alpha);

struct LeveragePoint {
    std::int64_t position = 0;  // 1-based; runs p+1 .. N
    double score = 0.0;
};

/// Per-sample streaming leverage over a recorded stream: the same h the
/// sampler computes, with no sampling decisions attached.
std::vector<LeveragePoint> leverage_trace(std::span<const double> stream,
                                          const PilotModel& pilot);

}  // namespace sls
