#include "sls/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sls/errors.hpp"

namespace sls {

using nlohmann::json;

StreamFormat parse_stream_format(const std::string& name) {
    if (name == "csv") return StreamFormat::csv;
    if (name == "raw_f32le") return StreamFormat::raw_f32le;
    if (name == "raw_f64le") return StreamFormat::raw_f64le;
    throw ConfigError("unknown stream format '" + name + "'");
}

StreamFormat format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = (dot == std::string::npos) ? "" : path.substr(dot);
    if (ext == ".csv" || ext == ".txt") return StreamFormat::csv;
    if (ext == ".f32") return StreamFormat::raw_f32le;
    return StreamFormat::raw_f64le;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& field, double& out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

StreamReader::StreamReader(const StreamSource& source) : source_(source) {
    if (source.path == "-" || source.path.empty()) {
        in_ = &std::cin;
    } else {
        auto mode = std::ios::in;
        if (source.format != StreamFormat::csv) mode |= std::ios::binary;
        auto file = std::make_unique<std::ifstream>(source.path, mode);
        if (!file->is_open()) {
            throw DataError("cannot open input '" + source.path + "'");
        }
        owned_ = std::move(file);
        in_ = owned_.get();
    }
}

StreamReader::~StreamReader() = default;
StreamReader::StreamReader(StreamReader&&) noexcept = default;
StreamReader& StreamReader::operator=(StreamReader&&) noexcept = default;

std::optional<double> StreamReader::next_csv_value() {
    std::string raw;
    while (std::getline(*in_, raw)) {
        ++line_;
        const std::string stripped = trim(raw);
        if (stripped.empty()) continue;

        auto fields = split_csv(stripped);
        if (!header_checked_) {
            header_checked_ = true;
            double probe;
            if (!parse_double(fields.back(), probe)) {
                // Header row names the columns.
                const std::string h = lower(stripped);
                if (h == "value") {
                    csv_columns_ = 1;
                } else if (h == "index,value") {
                    csv_columns_ = 2;
                } else {
                    throw DataError("line " + std::to_string(line_) +
                                    ": unrecognized csv header '" + stripped + "'");
                }
                continue;
            }
            csv_columns_ = static_cast<int>(fields.size());
            if (csv_columns_ > 2) {
                throw DataError("line " + std::to_string(line_) +
                                ": expected 'value' or 'index,value' rows");
            }
        }

        if (static_cast<int>(fields.size()) != csv_columns_) {
            throw DataError("line " + std::to_string(line_) + ": expected " +
                            std::to_string(csv_columns_) + " field(s), found " +
                            std::to_string(fields.size()));
        }
        double value;
        if (!parse_double(fields.back(), value)) {
            throw DataError("line " + std::to_string(line_) + ": malformed value '" +
                            trim(fields.back()) + "'");
        }
        if (csv_columns_ == 2) {
            double idx;
            if (!parse_double(fields.front(), idx)) {
                throw DataError("line " + std::to_string(line_) + ": malformed index '" +
                                trim(fields.front()) + "'");
            }
            const auto file_index = static_cast<std::int64_t>(idx);
            if (file_index <= last_file_index_) {
                throw DataError("line " + std::to_string(line_) +
                                ": index column not strictly increasing");
            }
            last_file_index_ = file_index;
        }
        return value;
    }
    return std::nullopt;
}

std::optional<double> StreamReader::next_raw_value() {
    const std::size_t width = (source_.format == StreamFormat::raw_f32le) ? 4 : 8;
    unsigned char bytes[8];
    in_->read(reinterpret_cast<char*>(bytes), static_cast<std::streamsize>(width));
    const auto got = static_cast<std::size_t>(in_->gcount());
    if (got == 0) return std::nullopt;
    if (got != width) {
        throw DataError("truncated raw stream: trailing " + std::to_string(got) +
                        " byte(s) at record " + std::to_string(line_));
    }
    ++line_;
    if (width == 4) {
        std::uint32_t w = 0;
        for (std::size_t i = 0; i < 4; ++i) w |= std::uint32_t(bytes[i]) << (8 * i);
        return static_cast<double>(std::bit_cast<float>(w));
    }
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < 8; ++i) w |= std::uint64_t(bytes[i]) << (8 * i);
    return std::bit_cast<double>(w);
}

std::optional<double> StreamReader::next_value() {
    return source_.format == StreamFormat::csv ? next_csv_value() : next_raw_value();
}

std::optional<Sample> StreamReader::next() {
    for (;;) {
        auto value = next_value();
        if (!value) return std::nullopt;
        if (!std::isfinite(*value)) {
            ++rejected_;
            continue;
        }
        return Sample{emitted_++, *value};
    }
}

std::vector<double> read_all(const StreamSource& source, std::int64_t* rejected) {
    StreamReader reader(source);
    std::vector<double> out;
    while (auto s = reader.next()) out.push_back(s->value);
    if (rejected) *rejected = reader.rejected_count();
    return out;
}

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream file(path, binary ? std::ios::out | std::ios::binary : std::ios::out);
    if (!file.is_open()) throw DataError("cannot open output '" + path + "'");
    return file;
}

}  // namespace

void write_stream_csv(const std::string& path, const std::vector<double>& values) {
    auto file = open_out(path, false);
    char buf[64];
    for (double v : values) {
        const int n = std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        file.write(buf, n);
    }
}

void write_stream_raw_f64le(const std::string& path, const std::vector<double>& values) {
    auto file = open_out(path, true);
    for (double v : values) {
        const auto w = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(w >> (8 * i));
        file.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

void write_stream_raw_f32le(const std::string& path, const std::vector<double>& values) {
    auto file = open_out(path, true);
    for (double v : values) {
        const auto w = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        unsigned char bytes[4];
        for (std::size_t i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(w >> (8 * i));
        file.write(reinterpret_cast<const char*>(bytes), 4);
    }
}

std::string config_hash(const std::string& canonical_config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_config) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

json base_record(const char* kind, const ReportMeta& meta) {
    json j;
    j["schema"] = kReportSchema;
    j["kind"] = kind;
    j["config_hash"] = meta.config_hash;
    j["seed"] = meta.seed;
    return j;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string pilot_record(const PilotModel& model, const ReportMeta& meta) {
    json j = base_record("pilot", meta);
    j["order"] = model.order;
    j["beta0"] = vector_to_json(model.beta0);
    j["sigma0_sq"] = model.sigma0_sq;
    j["n0"] = model.n0;
    j["precision"] = matrix_to_json(model.precision);
    return j.dump();
}

std::string block_record(const SlsBlock& block, const BlockEstimate* estimate,
                         const ReportMeta& meta) {
    json j = base_record("block", meta);
    j["status"] = "completed";
    j["method"] = to_string(block.method);
    j["start"] = block.start;
    j["stop"] = block.stop;
    j["length"] = block.length();
    j["acc_info"] = block.acc_info;
    if (estimate) {
        j["estimate"] = {
            {"beta_hat", vector_to_json(estimate->beta_hat)},
            {"sigma_hat_sq", estimate->sigma_hat_sq},
            {"degenerate", estimate->degenerate},
        };
    }
    return j.dump();
}

std::string abort_record(std::int64_t start, std::int64_t position, const ReportMeta& meta) {
    json j = base_record("block", meta);
    j["status"] = "aborted";
    j["start"] = start;
    j["position"] = position;
    return j.dump();
}

std::string verdict_record(const MonitorVerdict& verdict, const ReportMeta& meta,
                           std::optional<double> sample_rate_hz) {
    json j = base_record("verdict", meta);
    j["start"] = verdict.start;
    j["stop"] = verdict.stop;
    j["chi2"] = verdict.chi2;
    j["threshold"] = verdict.threshold;
    j["alarm"] = verdict.alarm;
    j["degenerate"] = verdict.degenerate;
    j["beta_hat"] = vector_to_json(verdict.beta_hat);
    if (sample_rate_hz && *sample_rate_hz > 0.0) {
        j["t_start_s"] = static_cast<double>(verdict.start - 1) / *sample_rate_hz;
        j["t_stop_s"] = static_cast<double>(verdict.stop - 1) / *sample_rate_hz;
    }
    return j.dump();
}

std::string leverage_record(const LeveragePoint& point, const ReportMeta& meta) {
    json j = base_record("leverage_point", meta);
    j["position"] = point.position;
    j["score"] = point.score;
    return j.dump();
}

}  // namespace sls
