#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/fedsim.hpp"

namespace otafl::harness {

/// x dBm -> 10^(x/10) mW.
double dbm_to_mw(double dbm);

/// Flat key/section config text: `[section]` headers, `key = value` lines,
/// `#` comments. Unknown keys are rejected by validate().
struct ExperimentConfig {
    channel::SampleConfig channel;
    fedsim::SyntheticConfig data;
    fedsim::TrainConfig train;
    std::vector<fedsim::Method> methods = {
        fedsim::Method::kPddFa, fedsim::Method::kSelectAll, fedsim::Method::kMrt,
        fedsim::Method::kRfa, fedsim::Method::kAps};
    int n_users = 20;
    int realizations = 16;
    std::uint64_t master_seed = 0;
    double p_a_dbm = 0.0;
    double sigma_n2_dbm = -20.0;
    std::string dataset = "synthetic";  // synthetic | mnist
    std::string mnist_dir;
};

ExperimentConfig default_config();
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
/// Throws std::invalid_argument describing the first violated invariant.
void validate_config(const ExperimentConfig& cfg);

struct ResultRow {
    std::string method;
    int realization = 0;
    int round = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    int selected_count = 0;
    double r_value = 0.0;
    double max_gain = 0.0;

    bool operator==(const ResultRow&) const = default;
};

struct CellStatus {
    std::string method;
    int realization = 0;
    bool ok = true;
    std::string error;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<CellStatus> cells;
    std::vector<std::pair<std::string, std::vector<pdd::TraceRecord>>> traces;
};

/// Runs every method x realization cell; a failing cell is recorded and the
/// run continues. Deterministic for a fixed config.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);

/// Writes results.csv, summary.json and per-cell PDD iteration traces.
void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir);

std::string summary_json(const ExperimentResult& result, const ExperimentConfig& cfg);

}  // namespace otafl::harness
