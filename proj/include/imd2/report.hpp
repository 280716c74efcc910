#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imd2/chain.hpp"
#include "imd2/metrics.hpp"
#include "imd2/train.hpp"

namespace imd2 {

/// The iteration counts of the comparison table.
inline const std::vector<std::size_t> kDefaultCheckpoints{1000, 2000, 5000, 10000, 20000};

struct CheckpointResult {
    std::size_t iter = 0;
    double nmse_db = 0.0;
    double suppression_db = 0.0;
};

/// Summary of one training run. Timing is kept out of to_json() so reports
/// are byte-identical across runs; see timing_json().
struct RunReport {
    ModelSpec model;
    OptimConfig optimizer;
    std::size_t param_count = 0;
    std::vector<CheckpointResult> checkpoints;
    NmseReport final_nmse;
    double final_nmse_tx_db = 0.0; ///< Tx-power denominator, for comparison
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::string status;
    std::string message;
    std::string config_hash;
    double wall_time_s = 0.0;

    nlohmann::json to_json() const;
    nlohmann::json timing_json() const;
};

/// Suppression at each checkpoint is taken from the latest history record at
/// or before it, so a run that converged early carries its final value forward.
/// Checkpoints past the last iteration of a run that did not converge are left out.
RunReport make_run_report(const ModelSpec& spec, const OptimConfig& optim, const TrainResult& result,
                          const Dataset& data, std::span<const std::size_t> checkpoints);

struct BenchRow {
    std::string model_label;
    std::string optimizer_label;
    ModelSpec model;
    OptimConfig optimizer;
};

struct SuiteConfig {
    std::uint64_t seed = 1;
    std::vector<std::size_t> checkpoints = kDefaultCheckpoints;
    OfdmConfig ofdm;
    ChainConfig chain;
    std::optional<std::filesystem::path> dataset; ///< used instead of synthesis when set
    std::vector<BenchRow> rows;

    /// polynomial x {LS, Adam, L-BFGS(100)} and NN x {LS, Adam, L-BFGS(100)}.
    static SuiteConfig default_suite();
    /// Applies `seed` to the suite, the OFDM and chain generators and every row.
    void reseed(std::uint64_t seed);
    nlohmann::json to_json() const;
};

/// Accepts {seed, checkpoints, ofdm, chain, dataset, models:{label: spec},
/// optimizers:{label: config}, pairs:[[model_label, optimizer_label], ...]}.
/// Missing parts fall back to default_suite().
SuiteConfig suite_from_json(const nlohmann::json& j);

struct BenchCell {
    enum class Kind { value, not_applicable, failed };
    Kind kind = Kind::value;
    double suppression_db = 0.0;
};

struct BenchRowResult {
    BenchRow row;
    std::vector<BenchCell> cells; ///< one per checkpoint
    std::size_t param_count = 0;
    std::size_t iterations = 0;
    std::string message;
    double wall_time_s = 0.0;
};

struct BenchResult {
    SuiteConfig suite;
    std::size_t samples = 0;
    std::vector<BenchRowResult> rows;

    nlohmann::json to_json() const;
    nlohmann::json timing_json() const;
    std::string table() const;
};

/// Dataset described by the suite: loaded from `suite.dataset` or synthesized.
Dataset suite_dataset(const SuiteConfig& suite);

/// Runs every row on `data`. Rows run on up to `threads` OpenMP threads; each
/// cell's numbers do not depend on the thread count.
BenchResult run_bench(const SuiteConfig& suite, const Dataset& data, unsigned threads);

} // namespace imd2
