#include "sls/monitor.hpp"

#include "sls/errors.hpp"
#include "sls/special_functions.hpp"

namespace sls {

Monitor::Monitor(const PilotModel& pilot, const SamplerConfig& cfg, double alpha)
    : pilot_(pilot),
      sampler_(pilot, cfg, SamplingMethod::leverage),
      threshold_(0.0) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("monitor alpha must lie in (0, 1)");
    }
    threshold_ = chi2_quantile(pilot.order, 1.0 - alpha);
}

void Monitor::prime(std::span<const double> prefix) {
    sampler_.prime(prefix);
}

std::optional<MonitorVerdict> Monitor::step(double x) {
    SamplerEvent ev = sampler_.step(x);
    if (ev.kind == EventKind::safeguard_abort) {
        ++aborts_;
        return std::nullopt;
    }
    if (ev.kind != EventKind::block_completed) return std::nullopt;

    const BlockEstimate est = block_ls(*ev.block, pilot_.order);
    MonitorVerdict v;
    v.start = ev.block->start;
    v.stop = ev.block->stop;
    v.beta_hat = est.beta_hat;
    v.degenerate = est.degenerate;
    v.chi2 = pivot_chi2(est, pilot_.beta0, pilot_.sigma0_sq);
    v.threshold = threshold_;
    // Degenerate blocks are reported but never alarm: a flat or clipped
    // segment is a sensor condition, not a seismic one.
    v.alarm = !v.degenerate && v.chi2 > threshold_;
    return v;
}

std::size_t Monitor::resident_state_bytes() const noexcept {
    return sampler_.resident_state_bytes() + sizeof(*this) - sizeof(SequentialSampler) +
           static_cast<std::size_t>(pilot_.precision.size() + pilot_.beta0.size()) *
               sizeof(double);
}

std::vector<MonitorVerdict> monitor_stream(std::span<const double> stream,
                                           const PilotModel& pilot,
                                           const SamplerConfig& cfg, double alpha) {
    const auto n0 = static_cast<std::size_t>(pilot.n0);
    if (stream.size() <= n0) {
        throw DataError("monitor_stream: stream does not extend past the pilot");
    }
    Monitor monitor(pilot, cfg, alpha);
    monitor.prime(stream.subspan(0, n0));
    std::vector<MonitorVerdict> verdicts;
    for (std::size_t i = n0; i < stream.size(); ++i) {
        if (auto v = monitor.step(stream[i])) verdicts.push_back(std::move(*v));
    }
    return verdicts;
}

std::vector<LeveragePoint> leverage_trace(std::span<const double> stream,
                                          const PilotModel& pilot) {
    const int p = pilot.order;
    std::vector<LeveragePoint> trace;
    if (stream.size() <= static_cast<std::size_t>(p)) return trace;
    trace.reserve(stream.size() - static_cast<std::size_t>(p));
    Eigen::VectorXd z(p);
    for (std::size_t t = static_cast<std::size_t>(p); t < stream.size(); ++t) {
        for (int k = 0; k < p; ++k) z(k) = stream[t - 1 - static_cast<std::size_t>(k)];
        trace.push_back(LeveragePoint{static_cast<std::int64_t>(t) + 1,
                                      streaming_leverage(z, pilot.precision)});
    }
    return trace;
}

}  // namespace sls
