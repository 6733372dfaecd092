#pragma once

#include <chainsleuth/eval.hpp>
#include <chainsleuth/ingest.hpp>
#include <chainsleuth/ml.hpp>
#include <chainsleuth/schema.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chainsleuth {

// Lower-case hex SHA-256 of a file's bytes; throws missing_file.
std::string sha256_file(const std::filesystem::path &file);
std::string sha256_hex(std::string_view bytes);

// Ordered key/value configuration recorded in a manifest.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

// Writes manifest.json into `dir`: command, config, seed, the hash of every
// input file, and the hash of every other regular file already in `dir`.
// No timestamps or host details, so equal runs give equal manifests.
void write_manifest(const std::filesystem::path &dir, std::string_view command, const ConfigEntries &config,
                    std::uint64_t seed, const std::vector<std::filesystem::path> &inputs);

struct PipelineConfig {
    std::uint64_t seed = 0;
    SplitSpec split;
    ForestConfig forest;
    LogisticConfig logistic;
    bool scale = true;
    // Members of the ensemble row; names from {"LR", "RF"}.
    std::vector<std::string> ensemble{"LR", "RF"};
    EnsembleRule rule = EnsembleRule::conjunction;
    ImportanceConfig importance;
    RefinePolicy refine = CumulativeImportance{0.95};
    std::vector<std::string> trend_features{"fees", "size", "total_BTC", "total_txs", "lifetime_in_blocks",
                                            "fees_total"};
    bool include_wallets = true;

    ConfigEntries entries() const;
};

struct ModelResult {
    std::string dataset; // "tx" or "wallets"
    std::string model;   // "LR", "RF", "LR+RF", ...
    std::string features; // "all" or "refined"
    ConfusionCounts counts;
    MetricsReport metrics;
};

struct DatasetResult {
    std::string dataset;
    std::vector<ModelResult> models;
    ImportanceReport importance;
    std::vector<std::string> refined_features;
    CaseBreakdown cases;
    // RF on the full feature set, per test row.
    std::vector<std::string> test_ids;
    std::vector<ClassLabel> test_truth;
    std::vector<ClassLabel> rf_predicted;
    std::vector<double> rf_score;
};

struct EvaluationSummary {
    std::vector<DatasetResult> datasets;

    const ModelResult &find(std::string_view dataset, std::string_view model, std::string_view features) const;
};

// Temporal split, zero imputation and (optionally) min-max scaling fitted on
// the training rows. Throws config_invalid when either side is empty.
std::pair<FeatureMatrix, FeatureMatrix> prepare_split(const FeatureMatrix &m, const PipelineConfig &cfg);

// Splits, scales, trains LR and RF (plus the ensemble), computes importance,
// retrains on refined features and categorizes illicit test rows.
DatasetResult evaluate_dataset(std::string_view name, const FeatureMatrix &m, const PipelineConfig &cfg);

// Full report directory: metrics.csv, refinement.csv, importance.csv,
// cases_by_timestep.csv, predictions_<dataset>.csv, distribution_tx.csv,
// distribution_wallets.csv and trend_<feature>.csv. The manifest is written
// by the caller.
EvaluationSummary evaluation_run(const DatasetBundle &bundle, const PipelineConfig &cfg,
                                 const std::filesystem::path &out_dir);

// Individual report writers.
void write_metrics_csv(std::ostream &out, std::span<const DatasetResult> results);
void write_refinement_csv(std::ostream &out, std::span<const DatasetResult> results, const RefinePolicy &policy);
void write_importance_csv(std::ostream &out, std::span<const DatasetResult> results);
void write_cases_csv(std::ostream &out, std::span<const DatasetResult> results);
void write_distribution_csv(std::ostream &out, std::span<const StepCounts> counts);

} // namespace chainsleuth
