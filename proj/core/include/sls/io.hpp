#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sls/estimation.hpp"
#include "sls/monitor.hpp"
#include "sls/pilot.hpp"
#include "sls/sampler.hpp"
#include "sls/series.hpp"

namespace sls {

enum class StreamFormat { csv, raw_f32le, raw_f64le };

StreamFormat parse_stream_format(const std::string& name);

/// Guess a format from a file extension (.csv, .f32, anything else raw
/// 64-bit floats).
StreamFormat format_from_path(const std::string& path);

struct StreamSource {
    StreamFormat format = StreamFormat::csv;
    std::string path;  // "-" reads stdin
    std::optional<double> sample_rate_hz;  // metadata only
    std::string channel;
};

/// Pull-based reader over a sample file. Constant memory; malformed
/// input throws DataError with the offending line or byte offset.
/// Non-finite values are dropped and counted; emitted indices are the
/// 0-based ordinals of the accepted samples.
class StreamReader {
public:
    explicit StreamReader(const StreamSource& source);
    ~StreamReader();

    StreamReader(StreamReader&&) noexcept;
    StreamReader& operator=(StreamReader&&) noexcept;

    std::optional<Sample> next();

    std::int64_t rejected_count() const noexcept { return rejected_; }

private:
    std::optional<double> next_value();
    std::optional<double> next_csv_value();
    std::optional<double> next_raw_value();

    StreamSource source_;
    std::unique_ptr<std::istream> owned_;
    std::istream* in_ = nullptr;
    std::int64_t line_ = 0;
    std::int64_t emitted_ = 0;
    std::int64_t rejected_ = 0;
    std::int64_t last_file_index_ = -1;
    int csv_columns_ = 0;  // 0 = not yet detected
    bool header_checked_ = false;
};

/// Drain a source into memory. `rejected` (optional) receives the count
/// of dropped non-finite values.
std::vector<double> read_all(const StreamSource& source, std::int64_t* rejected = nullptr);

void write_stream_csv(const std::string& path, const std::vector<double>& values);
void write_stream_raw_f64le(const std::string& path, const std::vector<double>& values);
void write_stream_raw_f32le(const std::string& path, const std::vector<double>& values);

/// FNV-1a 64 over a canonical configuration string, hex-encoded. Every
/// report record embeds it so output can be traced back to the exact
/// invocation.
std::string config_hash(const std::string& canonical_config);

inline constexpr const char* kReportSchema = "sls/1";

struct ReportMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// JSONL record builders. One line per record, no trailing newline;
/// numbers round-trip at full 64-bit precision.
std::string pilot_record(const PilotModel& model, const ReportMeta& meta);
std::string block_record(const SlsBlock& block, const BlockEstimate* estimate,
                         const ReportMeta& meta);
std::string abort_record(std::int64_t start, std::int64_t position, const ReportMeta& meta);
std::string verdict_record(const MonitorVerdict& verdict, const ReportMeta& meta,
                           std::optional<double> sample_rate_hz = std::nullopt);
std::string leverage_record(const LeveragePoint& point, const ReportMeta& meta);

}  // namespace sls
