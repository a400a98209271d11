#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sls/pilot.hpp"
#include "sls/sampler.hpp"
#include "sls/series.hpp"
#include "sls/stats.hpp"

namespace sls {

/// One cell of a simulation grid: a process, an information threshold and
/// the sampling methods to race on it.
struct ExperimentCell {
    std::string name;
    ArProcessSpec process;  // per-replicate seeds are derived, spec.seed is ignored
    std::vector<SamplingMethod> methods{SamplingMethod::leverage, SamplingMethod::uniform,
                                        SamplingMethod::fixed_length};
    double threshold_c = 0.0;
    std::int64_t n0 = 200;
    std::int64_t n_rep = 100;
    std::int64_t stream_cap = 0;  // post-pilot samples; 0 = max(50c, 1e6)
    std::uint64_t seed_base = 1;
    int p_max = 6;                      // BIC grid
    std::optional<int> fixed_order;     // bypass BIC when the order is known
    std::int64_t fixed_len = 200;       // Fixed.Length baseline block size
    std::int64_t max_block_len = 1'000'000;
    double leverage_scale = 1.0;
    std::optional<double> uniform_q;    // default: pilot mean capped leverage
};

/// One replicate-method outcome. Wall-clock fields are measurement
/// artifacts and are kept out of the deterministic report files.
struct ReplicateRecord {
    std::string cell;
    SamplingMethod method = SamplingMethod::leverage;
    std::int64_t replicate = 0;
    std::uint64_t master_seed = 0;
    bool success = false;
    std::string failure;  // empty when success
    int order = 0;
    std::int64_t start = 0;
    std::int64_t stop = 0;
    std::int64_t block_len = 0;
    double acc_info = 0.0;
    double mse = 0.0;  // ||beta_hat - beta_true||^2, dimensions zero-padded
    std::vector<double> coord_errors;
    std::int64_t aborts = 0;
    double sample_seconds = 0.0;    // sampling + expansion, generation excluded
    double estimate_seconds = 0.0;  // block least squares
};

struct ExperimentReport {
    std::vector<ReplicateRecord> rows;
};

/// Run every replicate of every cell. Replicates are independently
/// seeded (seed_base + r) and individually replayable; rows arrive in
/// (cell, replicate, method) order regardless of `jobs`.
ExperimentReport run_grid(const std::vector<ExperimentCell>& cells, int jobs = 1);

/// Parse a declarative JSON grid config.
std::vector<ExperimentCell> load_grid_config(const std::string& path);

/// Write report.csv / report.jsonl / summary.json (deterministic) and
/// timings.csv (wall-clock measurements) into out_dir.
void write_report(const ExperimentReport& report, const std::string& out_dir,
                  const std::string& config_hash_hex, std::uint64_t seed);

struct NormalityResult {
    std::vector<std::vector<double>> coord_samples;  // normalized errors / sigma
    std::vector<double> pivot_samples;
    std::vector<KsResult> coord_ks;  // against N(0, 1)
    KsResult pivot_ks;               // against chi-square with p dof
    std::int64_t failures = 0;
};

/// Distributional check of the normalized block estimator: collects
/// Gamma^{1/2}(beta_hat - beta)/sigma coordinates and the chi-square
/// pivot across replicates. Fits at the true order.
NormalityResult normality_experiment(const ArProcessSpec& process, double c,
                                     std::int64_t n_rep, std::int64_t n0,
                                     std::uint64_t seed_base);

struct EfficiencyResult {
    double mean_acc_over_c = 0.0;
    double mean_len_over_c = 0.0;   // converges to 1 - beta^2
    double mean_len_scaled = 0.0;   // mean_len_over_c / (1 - beta^2), converges to 1
    std::int64_t n_blocks = 0;
    bool overshoot_ok = true;  // c <= acc_info <= c + max ||z||^2 on every block
};

/// Stable scalar specs only: block-size and information asymptotics.
EfficiencyResult efficiency_experiment(const ArProcessSpec& process, double c,
                                       std::int64_t n_rep, std::int64_t n0,
                                       std::uint64_t seed_base);

struct PilotSensitivityResult {
    std::vector<std::int64_t> n0_grid;
    std::vector<std::vector<double>> mse;  // [n0 index][replicate]
};

/// Re-run the same replicates varying only n0; seeds are shared across
/// n0 values so each comparison is paired on an identical stream.
PilotSensitivityResult pilot_sensitivity(const ArProcessSpec& process, double c,
                                         const std::vector<std::int64_t>& n0_grid,
                                         std::int64_t n_rep, std::uint64_t seed_base,
                                         int p_max = 6);

}  // namespace sls
