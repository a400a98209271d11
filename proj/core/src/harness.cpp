#include "sls/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "sls/errors.hpp"
#include "sls/estimation.hpp"
#include "sls/io.hpp"
#include "sls/special_functions.hpp"

namespace sls {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kChunk = 1 << 14;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::int64_t effective_cap(const ExperimentCell& cell) {
    if (cell.stream_cap > 0) return cell.stream_cap;
    return std::max<std::int64_t>(static_cast<std::int64_t>(50.0 * cell.threshold_c),
                                  1'000'000);
}

// ||beta_hat - beta_true||^2 with the shorter vector zero-padded, so a
// BIC order mismatch counts the missing or spurious lags as error.
void padded_errors(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                   ReplicateRecord& rec) {
    const Eigen::Index q = std::max(beta_hat.size(), beta_true.size());
    rec.coord_errors.assign(static_cast<std::size_t>(q), 0.0);
    double mse = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
        const double a = (i < beta_hat.size()) ? beta_hat(i) : 0.0;
        const double b = (i < beta_true.size()) ? beta_true(i) : 0.0;
        rec.coord_errors[static_cast<std::size_t>(i)] = a - b;
        mse += (a - b) * (a - b);
    }
    rec.mse = mse;
}

struct SequentialOutcome {
    std::optional<SlsBlock> block;
    std::int64_t aborts = 0;
    double seconds = 0.0;
};

// Feed a sequential sampler from the generator snapshot until the first
// block completes or the cap is hit. Generation happens outside the
// timed sections: the stream is the simulated sensor, not the method.
SequentialOutcome run_sequential(ArStreamGenerator gen, const PilotModel& pilot,
                                 const SamplerConfig& cfg, SamplingMethod method,
                                 std::span<const double> pilot_data, std::int64_t cap) {
    SequentialSampler sampler(pilot, cfg, method);
    sampler.prime(pilot_data);

    SequentialOutcome out;
    std::vector<double> chunk;
    chunk.reserve(kChunk);
    std::int64_t consumed = 0;
    while (consumed < cap) {
        chunk.clear();
        const std::int64_t want =
            std::min<std::int64_t>(static_cast<std::int64_t>(kChunk), cap - consumed);
        for (std::int64_t i = 0; i < want; ++i) chunk.push_back(gen.next());

        const auto t0 = Clock::now();
        for (double x : chunk) {
            ++consumed;
            SamplerEvent ev = sampler.step(x);
            if (ev.kind == EventKind::block_completed) {
                out.block = std::move(*ev.block);
                break;
            }
            if (ev.kind == EventKind::safeguard_abort) ++out.aborts;
        }
        out.seconds += seconds_since(t0);
        if (out.block) break;
    }
    return out;
}

ReplicateRecord run_one(const ExperimentCell& cell, SamplingMethod method,
                        std::int64_t replicate, const PilotModel& pilot,
                        const std::vector<double>& pilot_data, double uniform_q,
                        const ArStreamGenerator& gen_at_n0) {
    ReplicateRecord rec;
    rec.cell = cell.name;
    rec.method = method;
    rec.replicate = replicate;
    rec.master_seed = cell.seed_base + static_cast<std::uint64_t>(replicate);
    rec.order = pilot.order;

    SlsBlock block;
    if (method == SamplingMethod::fixed_length) {
        std::vector<double> stream(pilot_data);
        stream.reserve(pilot_data.size() + static_cast<std::size_t>(cell.fixed_len));
        ArStreamGenerator gen = gen_at_n0;
        for (std::int64_t i = 0; i < cell.fixed_len; ++i) stream.push_back(gen.next());
        const auto t0 = Clock::now();
        block = fixed_length_block(stream, cell.n0, cell.fixed_len, pilot.order);
        rec.sample_seconds = seconds_since(t0);
    } else {
        SamplerConfig cfg;
        cfg.threshold_c = cell.threshold_c;
        cfg.seed = derive_seed(rec.master_seed, kSeedTagSampler);
        cfg.max_block_len = cell.max_block_len;
        cfg.leverage_scale = cell.leverage_scale;
        cfg.uniform_q = uniform_q;
        auto outcome = run_sequential(gen_at_n0, pilot, cfg, method, pilot_data,
                                      effective_cap(cell));
        rec.aborts = outcome.aborts;
        rec.sample_seconds = outcome.seconds;
        if (!outcome.block) {
            rec.failure = "no_block_within_cap";
            return rec;
        }
        block = std::move(*outcome.block);
    }

    const auto t0 = Clock::now();
    const BlockEstimate est = block_ls(block, pilot.order);
    rec.estimate_seconds = seconds_since(t0);

    rec.success = true;
    rec.start = block.start;
    rec.stop = block.stop;
    rec.block_len = block.length();
    rec.acc_info = block.acc_info;
    padded_errors(est.beta_hat, cell.process.coeffs, rec);
    return rec;
}

std::vector<ReplicateRecord> run_replicate(const ExperimentCell& cell,
                                           std::int64_t replicate) {
    const std::uint64_t master = cell.seed_base + static_cast<std::uint64_t>(replicate);
    ArProcessSpec sim = cell.process;
    sim.seed = derive_seed(master, kSeedTagSimulate);

    std::vector<ReplicateRecord> rows;
    try {
        ArStreamGenerator gen(sim);
        std::vector<double> pilot_data;
        pilot_data.reserve(static_cast<std::size_t>(cell.n0));
        for (std::int64_t i = 0; i < cell.n0; ++i) pilot_data.push_back(gen.next());

        const PilotModel pilot =
            cell.fixed_order ? build_pilot_fixed_order(pilot_data, *cell.fixed_order)
                             : build_pilot(pilot_data, cell.p_max);
        const double q =
            cell.uniform_q ? *cell.uniform_q : mean_capped_leverage(pilot_data, pilot);

        for (SamplingMethod m : cell.methods) {
            rows.push_back(run_one(cell, m, replicate, pilot, pilot_data, q, gen));
        }
    } catch (const std::exception& e) {
        // Pilot or generation failure: every requested method records it.
        rows.clear();
        for (SamplingMethod m : cell.methods) {
            ReplicateRecord rec;
            rec.cell = cell.name;
            rec.method = m;
            rec.replicate = replicate;
            rec.master_seed = master;
            rec.failure = e.what();
            rows.push_back(std::move(rec));
        }
    }
    return rows;
}

}  // namespace

ExperimentReport run_grid(const std::vector<ExperimentCell>& cells, int jobs) {
    if (jobs < 1) throw ConfigError("run_grid requires jobs >= 1");
    ExperimentReport report;
    for (const auto& cell : cells) {
        if (cell.n_rep < 1) throw ConfigError("cell '" + cell.name + "': n_rep must be >= 1");
        if (!(cell.threshold_c > 0.0)) {
            throw ConfigError("cell '" + cell.name + "': threshold c must be > 0");
        }
        std::vector<std::vector<ReplicateRecord>> slots(
            static_cast<std::size_t>(cell.n_rep));
        if (jobs == 1) {
            for (std::int64_t r = 0; r < cell.n_rep; ++r) {
                slots[static_cast<std::size_t>(r)] = run_replicate(cell, r);
            }
        } else {
            std::atomic<std::int64_t> next{0};
            auto worker = [&] {
                for (;;) {
                    const std::int64_t r = next.fetch_add(1);
                    if (r >= cell.n_rep) return;
                    slots[static_cast<std::size_t>(r)] = run_replicate(cell, r);
                }
            };
            std::vector<std::thread> pool;
            const int n_threads = static_cast<int>(
                std::min<std::int64_t>(jobs, cell.n_rep));
            pool.reserve(static_cast<std::size_t>(n_threads));
            for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (auto& slot : slots) {
            for (auto& rec : slot) report.rows.push_back(std::move(rec));
        }
    }
    return report;
}

namespace {

Innovation parse_innovation(const json& j) {
    if (j.is_null()) return GaussianInnovation{1.0};
    const std::string kind = j.value("kind", "gaussian");
    if (kind == "gaussian") {
        return GaussianInnovation{j.value("sigma", 1.0)};
    }
    if (kind == "student_t") {
        return StudentTInnovation{j.value("df", 4.0), j.value("scale", 1.0)};
    }
    throw ConfigError("unknown innovation kind '" + kind + "'");
}

SamplingMethod parse_method(const std::string& name) {
    if (name == "leverage") return SamplingMethod::leverage;
    if (name == "uniform") return SamplingMethod::uniform;
    if (name == "fixed_length") return SamplingMethod::fixed_length;
    throw ConfigError("unknown sampling method '" + name + "'");
}

}  // namespace

std::vector<ExperimentCell> load_grid_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw DataError("cannot open grid config '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw DataError("grid config '" + path + "': " + e.what());
    }
    if (!root.contains("cells") || !root["cells"].is_array()) {
        throw ConfigError("grid config must contain a 'cells' array");
    }

    std::vector<ExperimentCell> cells;
    for (const auto& jc : root["cells"]) {
        ExperimentCell cell;
        cell.name = jc.value("name", "cell" + std::to_string(cells.size()));
        if (!jc.contains("beta")) throw ConfigError("cell '" + cell.name + "': missing beta");
        const auto& beta = jc["beta"];
        cell.process.coeffs.resize(static_cast<Eigen::Index>(beta.size()));
        for (std::size_t i = 0; i < beta.size(); ++i) {
            cell.process.coeffs(static_cast<Eigen::Index>(i)) = beta[i].get<double>();
        }
        cell.process.innovation =
            parse_innovation(jc.contains("innovation") ? jc["innovation"] : json());
        cell.process.burn_in = jc.contains("burn_in")
                                   ? jc["burn_in"].get<std::int64_t>()
                                   : default_burn_in(cell.process.coeffs);
        if (!jc.contains("c")) throw ConfigError("cell '" + cell.name + "': missing c");
        cell.threshold_c = jc["c"].get<double>();
        cell.n0 = jc.value("n0", std::int64_t{200});
        cell.n_rep = jc.value("n_rep", std::int64_t{100});
        cell.stream_cap = jc.value("stream_cap", std::int64_t{0});
        cell.seed_base = jc.value("seed_base", std::uint64_t{1});
        cell.p_max = jc.value("p_max", 6);
        if (jc.contains("fixed_order") && !jc["fixed_order"].is_null()) {
            cell.fixed_order = jc["fixed_order"].get<int>();
        }
        cell.fixed_len = jc.value("fixed_len", std::int64_t{200});
        cell.max_block_len = jc.value("max_block_len", std::int64_t{1'000'000});
        cell.leverage_scale = jc.value("leverage_scale", 1.0);
        if (jc.contains("uniform_q") && !jc["uniform_q"].is_null()) {
            cell.uniform_q = jc["uniform_q"].get<double>();
        }
        if (jc.contains("methods")) {
            cell.methods.clear();
            for (const auto& m : jc["methods"]) cell.methods.push_back(parse_method(m.get<std::string>()));
        }
        cell.process.validate();
        cells.push_back(std::move(cell));
    }
    return cells;
}

namespace {

std::string join_errors(const std::vector<double>& v) {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(';');
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        out += buf;
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Failure strings can carry exception text; keep the CSV parseable.
std::string csv_safe(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n') ch = ';';
    }
    return s;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::string& out_dir,
                  const std::string& config_hash_hex, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Deterministic outputs: report.csv, report.jsonl, summary.json.
    std::ofstream csv(fs::path(out_dir) / "report.csv");
    if (!csv.is_open()) throw DataError("cannot write report.csv in '" + out_dir + "'");
    csv << "cell,method,replicate,master_seed,success,failure,order,start,stop,"
           "block_len,acc_info,mse,coord_errors,aborts\n";
    std::ofstream jsonl(fs::path(out_dir) / "report.jsonl");
    for (const auto& r : report.rows) {
        csv << r.cell << ',' << to_string(r.method) << ',' << r.replicate << ','
            << r.master_seed << ',' << (r.success ? 1 : 0) << ',' << csv_safe(r.failure)
            << ',' << r.order << ',' << r.start << ',' << r.stop << ',' << r.block_len
            << ',' << fmt(r.acc_info) << ',' << fmt(r.mse) << ','
            << join_errors(r.coord_errors) << ',' << r.aborts << '\n';

        json j;
        j["schema"] = kReportSchema;
        j["kind"] = "experiment_row";
        j["config_hash"] = config_hash_hex;
        j["seed"] = seed;
        j["cell"] = r.cell;
        j["method"] = to_string(r.method);
        j["replicate"] = r.replicate;
        j["master_seed"] = r.master_seed;
        j["success"] = r.success;
        if (!r.failure.empty()) j["failure"] = r.failure;
        j["order"] = r.order;
        j["start"] = r.start;
        j["stop"] = r.stop;
        j["block_len"] = r.block_len;
        j["acc_info"] = r.acc_info;
        j["mse"] = r.mse;
        j["coord_errors"] = r.coord_errors;
        j["aborts"] = r.aborts;
        jsonl << j.dump() << '\n';
    }

    // Wall-clock measurements go to their own file: they vary run to run
    // and would break byte-level reproducibility of the report.
    std::ofstream times(fs::path(out_dir) / "timings.csv");
    times << "cell,method,replicate,sample_seconds,estimate_seconds\n";
    for (const auto& r : report.rows) {
        times << r.cell << ',' << to_string(r.method) << ',' << r.replicate << ','
              << fmt(r.sample_seconds) << ',' << fmt(r.estimate_seconds) << '\n';
    }

    // Per cell-method aggregates.
    std::map<std::pair<std::string, std::string>, std::vector<const ReplicateRecord*>> groups;
    for (const auto& r : report.rows) {
        groups[{r.cell, to_string(r.method)}].push_back(&r);
    }
    json summary;
    summary["schema"] = kReportSchema;
    summary["kind"] = "experiment_summary";
    summary["config_hash"] = config_hash_hex;
    summary["seed"] = seed;
    json cells = json::array();
    for (const auto& [key, rows] : groups) {
        std::vector<double> mse, len, acc;
        std::int64_t failures = 0;
        for (const auto* r : rows) {
            if (!r->success) {
                ++failures;
                continue;
            }
            mse.push_back(r->mse);
            len.push_back(static_cast<double>(r->block_len));
            acc.push_back(r->acc_info);
        }
        json g;
        g["cell"] = key.first;
        g["method"] = key.second;
        g["n_success"] = rows.size() - static_cast<std::size_t>(failures);
        g["n_failure"] = failures;
        if (!mse.empty()) {
            g["mse_median"] = median(mse);
            g["mse_mean"] = mean(mse);
            g["block_len_median"] = median(len);
            g["block_len_mean"] = mean(len);
            g["acc_info_mean"] = mean(acc);
        }
        cells.push_back(std::move(g));
    }
    summary["groups"] = std::move(cells);
    std::ofstream sj(fs::path(out_dir) / "summary.json");
    sj << summary.dump(2) << '\n';
}

NormalityResult normality_experiment(const ArProcessSpec& process, double c,
                                     std::int64_t n_rep, std::int64_t n0,
                                     std::uint64_t seed_base) {
    process.validate();
    if (!(c > 0.0)) throw ConfigError("normality_experiment requires c > 0");
    const int p = process.order();
    const double sigma = innovation_sigma(process.innovation);

    NormalityResult out;
    out.coord_samples.assign(static_cast<std::size_t>(p), {});
    const std::int64_t cap =
        std::max<std::int64_t>(static_cast<std::int64_t>(50.0 * c), 1'000'000);

    for (std::int64_t r = 0; r < n_rep; ++r) {
        const std::uint64_t master = seed_base + static_cast<std::uint64_t>(r);
        ArProcessSpec sim = process;
        sim.seed = derive_seed(master, kSeedTagSimulate);
        ArStreamGenerator gen(sim);
        std::vector<double> pilot_data;
        pilot_data.reserve(static_cast<std::size_t>(n0));
        for (std::int64_t i = 0; i < n0; ++i) pilot_data.push_back(gen.next());

        try {
            const PilotModel pilot = build_pilot_fixed_order(pilot_data, p);
            SamplerConfig cfg;
            cfg.threshold_c = c;
            cfg.seed = derive_seed(master, kSeedTagSampler);
            auto outcome = run_sequential(gen, pilot, cfg, SamplingMethod::leverage,
                                          pilot_data, cap);
            if (!outcome.block) {
                ++out.failures;
                continue;
            }
            const BlockEstimate est = block_ls(*outcome.block, p);
            const Eigen::VectorXd v = normalized_error(est, process.coeffs);
            for (int k = 0; k < p; ++k) {
                out.coord_samples[static_cast<std::size_t>(k)].push_back(v(k) / sigma);
            }
            out.pivot_samples.push_back(pivot_chi2(est, process.coeffs, sigma * sigma));
        } catch (const DataError&) {
            ++out.failures;
        }
    }

    for (const auto& coord : out.coord_samples) {
        out.coord_ks.push_back(ks_test(coord, [](double x) { return normal_cdf(x); }));
    }
    out.pivot_ks = ks_test(out.pivot_samples,
                           [p](double x) { return chi2_cdf(p, x); });
    return out;
}

EfficiencyResult efficiency_experiment(const ArProcessSpec& process, double c,
                                       std::int64_t n_rep, std::int64_t n0,
                                       std::uint64_t seed_base) {
    process.validate();
    if (process.order() != 1) {
        throw ConfigError("efficiency_experiment is defined for scalar AR(1) specs");
    }
    const double beta = process.coeffs(0);
    if (classify_stability(process.coeffs).tag != Stability::stable) {
        throw ConfigError("efficiency_experiment requires a stable spec");
    }

    EfficiencyResult out;
    double sum_acc = 0.0, sum_len = 0.0;
    const std::int64_t cap =
        std::max<std::int64_t>(static_cast<std::int64_t>(50.0 * c), 1'000'000);
    for (std::int64_t r = 0; r < n_rep; ++r) {
        const std::uint64_t master = seed_base + static_cast<std::uint64_t>(r);
        ArProcessSpec sim = process;
        sim.seed = derive_seed(master, kSeedTagSimulate);
        ArStreamGenerator gen(sim);
        std::vector<double> pilot_data;
        for (std::int64_t i = 0; i < n0; ++i) pilot_data.push_back(gen.next());
        const PilotModel pilot = build_pilot_fixed_order(pilot_data, 1);
        SamplerConfig cfg;
        cfg.threshold_c = c;
        cfg.seed = derive_seed(master, kSeedTagSampler);
        auto outcome =
            run_sequential(gen, pilot, cfg, SamplingMethod::leverage, pilot_data, cap);
        if (!outcome.block) continue;
        const SlsBlock& b = *outcome.block;
        sum_acc += b.acc_info / c;
        sum_len += static_cast<double>(b.length()) / c;
        ++out.n_blocks;

        double max_z_sq = 0.0;
        for (std::size_t i = 1; i < b.values.size(); ++i) {
            max_z_sq = std::max(max_z_sq, b.values[i - 1] * b.values[i - 1]);
        }
        if (!(b.acc_info >= c && b.acc_info <= c + max_z_sq + 1e-9 * c)) {
            out.overshoot_ok = false;
        }
    }
    if (out.n_blocks > 0) {
        out.mean_acc_over_c = sum_acc / static_cast<double>(out.n_blocks);
        out.mean_len_over_c = sum_len / static_cast<double>(out.n_blocks);
        out.mean_len_scaled = out.mean_len_over_c / (1.0 - beta * beta);
    }
    return out;
}

PilotSensitivityResult pilot_sensitivity(const ArProcessSpec& process, double c,
                                         const std::vector<std::int64_t>& n0_grid,
                                         std::int64_t n_rep, std::uint64_t seed_base,
                                         int p_max) {
    process.validate();
    PilotSensitivityResult out;
    out.n0_grid = n0_grid;
    const std::int64_t cap =
        std::max<std::int64_t>(static_cast<std::int64_t>(50.0 * c), 1'000'000);

    for (std::int64_t n0 : n0_grid) {
        std::vector<double> mses;
        for (std::int64_t r = 0; r < n_rep; ++r) {
            const std::uint64_t master = seed_base + static_cast<std::uint64_t>(r);
            ArProcessSpec sim = process;
            sim.seed = derive_seed(master, kSeedTagSimulate);
            ArStreamGenerator gen(sim);
            std::vector<double> pilot_data;
            for (std::int64_t i = 0; i < n0; ++i) pilot_data.push_back(gen.next());
            const PilotModel pilot = build_pilot(pilot_data, p_max);
            SamplerConfig cfg;
            cfg.threshold_c = c;
            cfg.seed = derive_seed(master, kSeedTagSampler);
            auto outcome = run_sequential(gen, pilot, cfg, SamplingMethod::leverage,
                                          pilot_data, cap);
            if (!outcome.block) continue;
            const BlockEstimate est = block_ls(*outcome.block, pilot.order);
            ReplicateRecord scratch;
            padded_errors(est.beta_hat, process.coeffs, scratch);
            mses.push_back(scratch.mse);
        }
        out.mse.push_back(std::move(mses));
    }
    return out;
}

}  // namespace sls
