// sls: streaming sequential leveraging sampler for AR(p) series.
//
// Subcommands: simulate, pilot, sample, monitor, bench, quantile.
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 sampler safeguard abort.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sls/errors.hpp"
#include "sls/estimation.hpp"
#include "sls/harness.hpp"
#include "sls/io.hpp"
#include "sls/monitor.hpp"
#include "sls/pilot.hpp"
#include "sls/sampler.hpp"
#include "sls/series.hpp"
#include "sls/special_functions.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitAbort = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SLS_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw sls::ConfigError("SLS_SEED is not a valid unsigned integer");
        }
    }
    return 0;
}

sls::Innovation parse_innovation_flag(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);

    auto num = [&](std::size_t i, double fallback) {
        if (parts.size() <= i || parts[i].empty()) return fallback;
        try {
            return std::stod(parts[i]);
        } catch (...) {
            throw sls::ConfigError("bad innovation parameter '" + parts[i] + "'");
        }
    };
    if (parts[0] == "gaussian") {
        return sls::GaussianInnovation{num(1, 1.0)};
    }
    if (parts[0] == "student_t" || parts[0] == "t") {
        return sls::StudentTInnovation{num(1, 4.0), num(2, 1.0)};
    }
    throw sls::ConfigError("unknown innovation '" + parts[0] +
                           "' (use gaussian:SIGMA or student_t:DF:SCALE)");
}

struct OutputSink {
    std::unique_ptr<std::ofstream> file;
    std::ostream* out = &std::cout;

    explicit OutputSink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file = std::make_unique<std::ofstream>(path);
            if (!file->is_open()) throw sls::DataError("cannot open output '" + path + "'");
            out = file.get();
        }
    }
    void line(const std::string& s) { (*out) << s << '\n'; }
};

// Pilot configuration shared by pilot/sample/monitor: built from the
// stream head (--n0, with --pmax or --order) or loaded from a pilot
// record file (--pilot).
struct PilotOptions {
    std::int64_t n0 = 0;
    int p_max = 6;
    int fixed_order = 0;  // 0 = select by BIC
    std::string pilot_file;
    bool ml_variance = false;
};

void add_pilot_options(CLI::App* cmd, PilotOptions& opt) {
    cmd->add_option("--n0", opt.n0, "pilot size taken from the stream head");
    cmd->add_option("--pmax", opt.p_max, "largest candidate order for BIC");
    cmd->add_option("--order", opt.fixed_order,
                    "fix the AR order instead of selecting it by BIC");
    cmd->add_option("--pilot", opt.pilot_file, "load a pilot record (JSONL) instead");
    cmd->add_flag("--ml-variance", opt.ml_variance,
                  "divide residual sums by n instead of n - p");
}

sls::PilotModel pilot_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw sls::DataError("cannot open pilot file '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw sls::DataError("pilot file '" + path + "': " + std::string(e.what()));
        }
        if (j.value("kind", "") != "pilot") continue;
        sls::PilotModel m;
        m.order = j.at("order").get<int>();
        m.sigma0_sq = j.at("sigma0_sq").get<double>();
        m.n0 = j.at("n0").get<std::int64_t>();
        const auto& beta = j.at("beta0");
        m.beta0.resize(static_cast<Eigen::Index>(beta.size()));
        for (std::size_t i = 0; i < beta.size(); ++i) {
            m.beta0(static_cast<Eigen::Index>(i)) = beta[i].get<double>();
        }
        const auto& prec = j.at("precision");
        m.precision.resize(m.order, m.order);
        for (int r = 0; r < m.order; ++r) {
            for (int c = 0; c < m.order; ++c) m.precision(r, c) = prec[r][c].get<double>();
        }
        return m;
    }
    throw sls::DataError("no pilot record found in '" + path + "'");
}

sls::VarianceConvention convention(const PilotOptions& opt) {
    return opt.ml_variance ? sls::VarianceConvention::maximum_likelihood
                           : sls::VarianceConvention::unbiased;
}

std::vector<double> read_pilot_data(sls::StreamReader& reader, std::int64_t n0) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(n0));
    while (data.size() < static_cast<std::size_t>(n0)) {
        auto s = reader.next();
        if (!s) {
            throw sls::DataError("stream ended after " + std::to_string(data.size()) +
                                 " samples, pilot needs " + std::to_string(n0));
        }
        data.push_back(s->value);
    }
    return data;
}

struct ResolvedPilot {
    sls::PilotModel model;
    std::vector<double> data;  // empty when loaded from a file
};

// Leaves the reader positioned at the first post-pilot sample.
ResolvedPilot resolve_pilot(sls::StreamReader& reader, const PilotOptions& opt) {
    if (!opt.pilot_file.empty()) {
        return {pilot_from_file(opt.pilot_file), {}};
    }
    if (opt.n0 <= 0) {
        throw sls::ConfigError("missing pilot: pass --n0 (with optional --pmax/--order) "
                               "or --pilot FILE");
    }
    auto data = read_pilot_data(reader, opt.n0);
    auto model = (opt.fixed_order > 0)
                     ? sls::build_pilot_fixed_order(data, opt.fixed_order, convention(opt))
                     : sls::build_pilot(data, opt.p_max, convention(opt));
    return {std::move(model), std::move(data)};
}

sls::StreamSource make_source(const std::string& path, const std::string& format) {
    sls::StreamSource src;
    src.path = path;
    src.format = format.empty() ? sls::format_from_path(path)
                                : sls::parse_stream_format(format);
    return src;
}

std::string hash_of(const json& config) { return sls::config_hash(config.dump()); }

int run(int argc, char** argv) {
    CLI::App app{"Sequential leveraging sampling for streaming AR(p) series"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate an AR(p) stream file");
    std::vector<double> sim_beta;
    std::string sim_innovation = "gaussian:1.0";
    std::int64_t sim_n = 0;
    std::uint64_t sim_seed = default_seed();
    std::int64_t sim_burn_in = -1;
    std::string sim_out;
    std::string sim_format;
    sim->add_option("--beta", sim_beta, "AR coefficients, most recent lag first")
        ->required()
        ->delimiter(',');
    sim->add_option("--innovation", sim_innovation, "gaussian:SIGMA or student_t:DF:SCALE");
    sim->add_option("--n", sim_n, "number of samples")->required();
    sim->add_option("--seed", sim_seed, "generator seed");
    sim->add_option("--burn-in", sim_burn_in,
                    "samples to discard (default: 500 if stable, else 0)");
    sim->add_option("--out", sim_out, "output file")->required();
    sim->add_option("--format", sim_format,
                    "csv | raw_f64le | raw_f32le (default from extension)");

    auto* pil = app.add_subcommand(
        "pilot", "estimate order, coefficients and precision from the stream head");
    std::string pil_in, pil_format, pil_out;
    PilotOptions pil_opt;
    pil->add_option("--in", pil_in, "input stream ('-' for stdin)")->required();
    pil->add_option("--format", pil_format, "input format (default from extension)");
    pil->add_option("--out", pil_out, "output JSONL file (default stdout)");
    add_pilot_options(pil, pil_opt);

    auto* smp = app.add_subcommand("sample", "emit blocks from the restart loop");
    std::string smp_in, smp_format, smp_out, smp_method = "leverage";
    PilotOptions smp_opt;
    double smp_c = 0.0;
    std::uint64_t smp_seed = default_seed();
    double smp_q = -1.0;
    double smp_scale = 1.0;
    std::int64_t smp_max_len = 1'000'000;
    std::int64_t smp_max_blocks = 0;
    smp->add_option("--in", smp_in, "input stream ('-' for stdin)")->required();
    smp->add_option("--format", smp_format, "input format (default from extension)");
    smp->add_option("--c", smp_c, "information threshold")->required();
    smp->add_option("--method", smp_method, "leverage | uniform")
        ->check(CLI::IsMember({"leverage", "uniform"}));
    smp->add_option("--seed", smp_seed, "sampler seed");
    smp->add_option("--q", smp_q,
                    "uniform start probability (default: pilot mean capped leverage)");
    smp->add_option("--leverage-scale", smp_scale, "start-rate multiplier");
    smp->add_option("--max-block-len", smp_max_len, "safeguard block length");
    smp->add_option("--max-blocks", smp_max_blocks, "stop after this many blocks");
    smp->add_option("--out", smp_out, "output JSONL file (default stdout)");
    add_pilot_options(smp, smp_opt);

    auto* mon = app.add_subcommand("monitor", "score blocks against the pilot model");
    std::string mon_in, mon_format, mon_out;
    PilotOptions mon_opt;
    double mon_c = 0.0;
    double mon_alpha = 1e-3;
    std::uint64_t mon_seed = default_seed();
    double mon_scale = 1.0;
    std::int64_t mon_max_len = 1'000'000;
    bool mon_trace = false;
    double mon_rate = 0.0;
    mon->add_option("--in", mon_in, "input stream ('-' for stdin)")->required();
    mon->add_option("--format", mon_format, "input format (default from extension)");
    mon->add_option("--c", mon_c, "information threshold")->required();
    mon->add_option("--alpha", mon_alpha, "alarm level (default 1e-3)");
    mon->add_option("--seed", mon_seed, "sampler seed");
    mon->add_option("--leverage-scale", mon_scale, "start-rate multiplier");
    mon->add_option("--max-block-len", mon_max_len, "safeguard block length");
    mon->add_flag("--trace", mon_trace, "also emit per-sample leverage_point records");
    mon->add_option("--rate", mon_rate, "sample rate in Hz (adds t_start_s/t_stop_s)");
    mon->add_option("--out", mon_out, "output JSONL file (default stdout)");
    add_pilot_options(mon, mon_opt);

    auto* ben = app.add_subcommand("bench", "run a simulation grid");
    std::string ben_config, ben_out;
    int ben_jobs = 1;
    ben->add_option("--config", ben_config, "grid config JSON")->required();
    ben->add_option("--out", ben_out, "output directory")->required();
    ben->add_option("--jobs", ben_jobs, "parallel replicate workers");

    auto* qnt = app.add_subcommand("quantile", "print a chi2 or normal quantile");
    std::string qnt_dist;
    int qnt_dof = 1;
    double qnt_p = 0.0;
    qnt->add_option("--dist", qnt_dist, "chi2 | normal")
        ->required()
        ->check(CLI::IsMember({"chi2", "normal"}));
    qnt->add_option("--dof", qnt_dof, "degrees of freedom (chi2)");
    qnt->add_option("--p", qnt_p, "probability in (0,1)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        throw sls::ConfigError(e.what());
    }

    if (sim->parsed()) {
        sls::ArProcessSpec spec;
        spec.coeffs.resize(static_cast<Eigen::Index>(sim_beta.size()));
        for (std::size_t i = 0; i < sim_beta.size(); ++i) {
            spec.coeffs(static_cast<Eigen::Index>(i)) = sim_beta[i];
        }
        spec.innovation = parse_innovation_flag(sim_innovation);
        spec.seed = sim_seed;
        spec.burn_in = (sim_burn_in >= 0) ? sim_burn_in : sls::default_burn_in(spec.coeffs);
        spec.validate();

        const auto values = sls::simulate_ar(spec, sim_n);
        const sls::StreamFormat fmt = sim_format.empty()
                                          ? sls::format_from_path(sim_out)
                                          : sls::parse_stream_format(sim_format);
        switch (fmt) {
            case sls::StreamFormat::csv: sls::write_stream_csv(sim_out, values); break;
            case sls::StreamFormat::raw_f64le:
                sls::write_stream_raw_f64le(sim_out, values);
                break;
            case sls::StreamFormat::raw_f32le:
                sls::write_stream_raw_f32le(sim_out, values);
                break;
        }
        return kExitOk;
    }

    if (pil->parsed()) {
        sls::StreamReader reader(make_source(pil_in, pil_format));
        if (pil_opt.n0 <= 0 && pil_opt.pilot_file.empty()) {
            throw sls::ConfigError("pilot requires --n0");
        }
        auto resolved = resolve_pilot(reader, pil_opt);

        json cfg{{"cmd", "pilot"},
                 {"in", pil_in},
                 {"n0", pil_opt.n0},
                 {"pmax", pil_opt.p_max},
                 {"order", pil_opt.fixed_order},
                 {"ml_variance", pil_opt.ml_variance}};
        sls::ReportMeta meta{hash_of(cfg), 0};
        OutputSink sink(pil_out);
        sink.line(sls::pilot_record(resolved.model, meta));
        return kExitOk;
    }

    if (smp->parsed()) {
        sls::StreamReader reader(make_source(smp_in, smp_format));
        auto resolved = resolve_pilot(reader, smp_opt);
        const sls::PilotModel& pilot = resolved.model;

        sls::SamplerConfig cfg;
        cfg.threshold_c = smp_c;
        cfg.seed = smp_seed;
        cfg.max_block_len = smp_max_len;
        cfg.leverage_scale = smp_scale;
        const auto method = (smp_method == "leverage") ? sls::SamplingMethod::leverage
                                                       : sls::SamplingMethod::uniform;
        if (method == sls::SamplingMethod::uniform) {
            if (smp_q >= 0.0) {
                cfg.uniform_q = smp_q;
            } else if (!resolved.data.empty()) {
                cfg.uniform_q = sls::mean_capped_leverage(resolved.data, pilot);
            } else {
                throw sls::ConfigError("uniform method with --pilot FILE needs --q");
            }
        }

        json jcfg{{"cmd", "sample"},
                  {"in", smp_in},
                  {"c", smp_c},
                  {"method", smp_method},
                  {"seed", smp_seed},
                  {"n0", smp_opt.n0},
                  {"pmax", smp_opt.p_max},
                  {"order", smp_opt.fixed_order},
                  {"q", cfg.uniform_q},
                  {"leverage_scale", smp_scale},
                  {"max_block_len", smp_max_len}};
        sls::ReportMeta meta{hash_of(jcfg), smp_seed};

        sls::SequentialSampler sampler(pilot, cfg, method);
        sampler.prime(resolved.data);

        OutputSink sink(smp_out);
        std::int64_t aborts = 0;
        std::int64_t blocks = 0;
        while (auto s = reader.next()) {
            auto ev = sampler.step(s->value);
            if (ev.kind == sls::EventKind::block_completed) {
                const auto est = sls::block_ls(*ev.block, pilot.order, convention(smp_opt));
                sink.line(sls::block_record(*ev.block, &est, meta));
                if (smp_max_blocks > 0 && ++blocks >= smp_max_blocks) break;
            } else if (ev.kind == sls::EventKind::safeguard_abort) {
                ++aborts;
                sink.line(sls::abort_record(ev.start, sampler.next_position() - 1, meta));
            }
        }
        return aborts > 0 ? kExitAbort : kExitOk;
    }

    if (mon->parsed()) {
        sls::StreamReader reader(make_source(mon_in, mon_format));
        auto resolved = resolve_pilot(reader, mon_opt);
        const sls::PilotModel& pilot = resolved.model;

        sls::SamplerConfig cfg;
        cfg.threshold_c = mon_c;
        cfg.seed = mon_seed;
        cfg.max_block_len = mon_max_len;
        cfg.leverage_scale = mon_scale;

        json jcfg{{"cmd", "monitor"},
                  {"in", mon_in},
                  {"c", mon_c},
                  {"alpha", mon_alpha},
                  {"seed", mon_seed},
                  {"n0", mon_opt.n0},
                  {"pmax", mon_opt.p_max},
                  {"order", mon_opt.fixed_order},
                  {"leverage_scale", mon_scale},
                  {"trace", mon_trace}};
        sls::ReportMeta meta{hash_of(jcfg), mon_seed};

        sls::Monitor monitor(pilot, cfg, mon_alpha);
        monitor.prime(resolved.data);

        // The trace replays the sampler's leverage computation from its
        // own O(p) window, with identical values at every position.
        sls::LagWindow trace_window(pilot.order);
        std::int64_t position = static_cast<std::int64_t>(resolved.data.size());
        if (!resolved.data.empty()) trace_window.seed(resolved.data);

        const std::optional<double> rate =
            mon_rate > 0.0 ? std::optional<double>(mon_rate) : std::nullopt;
        OutputSink sink(mon_out);
        while (auto s = reader.next()) {
            ++position;
            if (mon_trace) {
                if (auto z = trace_window.push(s->value, position)) {
                    sink.line(sls::leverage_record(
                        sls::LeveragePoint{position, sls::streaming_leverage(
                                                         z->entries, pilot.precision)},
                        meta));
                }
            }
            if (auto v = monitor.step(s->value)) {
                sink.line(sls::verdict_record(*v, meta, rate));
            }
        }
        return monitor.aborts() > 0 ? kExitAbort : kExitOk;
    }

    if (ben->parsed()) {
        const auto cells = sls::load_grid_config(ben_config);
        std::ifstream cfg_file(ben_config);
        const std::string cfg_text((std::istreambuf_iterator<char>(cfg_file)),
                                   std::istreambuf_iterator<char>());
        const auto report = sls::run_grid(cells, ben_jobs);
        sls::write_report(report, ben_out, sls::config_hash(cfg_text), 0);
        return kExitOk;
    }

    if (qnt->parsed()) {
        const double value = (qnt_dist == "chi2") ? sls::chi2_quantile(qnt_dof, qnt_p)
                                                  : sls::normal_quantile(qnt_p);
        std::printf("%.17g\n", value);
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sls::ConfigError& e) {
        std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
        return kExitConfig;
    } catch (const sls::DataError& e) {
        std::cerr << json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return kExitConfig;
    }
}
