#pragma once

#include <chainsleuth/report.hpp>
#include <chainsleuth/synth.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace chainsleuth {

struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path output;
    // extract: optional "txId,class" file for the raw transactions
    std::optional<std::filesystem::path> labels;
    std::uint64_t seed = 0;
    int estimators = 50;
    std::string train_steps = "1-34";
    std::string test_steps = "35-49";
    std::string ensemble = "LR+RF";
    std::string rule = "conjunction";
    std::string refine_policy = "cumulative:0.95";
    // graphs: "edgelist" or "graphml"
    std::string format = "edgelist";
    // train: "rf" or "lr"; "tx" or "wallets"
    std::string model = "rf";
    std::string dataset = "tx";
    bool scale = true;
    bool wallets = true;
    int permutation_repeats = 5;
    bool drop_column = true;
    std::int64_t blocks_per_step = 100;
    ChainConfig chain;

    // Throws config_invalid on malformed values.
    PipelineConfig pipeline() const;
};

// Each command writes its outputs and a manifest into cfg.output and throws
// chainsleuth::error on invalid input.
void cmd_ingest(const RunConfig &cfg);
void cmd_extract(const RunConfig &cfg);
void cmd_graphs(const RunConfig &cfg);
void cmd_train(const RunConfig &cfg);
void cmd_evaluate(const RunConfig &cfg);
void cmd_cases(const RunConfig &cfg);
void cmd_refine(const RunConfig &cfg);
void cmd_synth(const RunConfig &cfg);

// "txId,class" table with a header.
std::unordered_map<std::string, ClassLabel> read_tx_labels(const std::filesystem::path &file);

} // namespace chainsleuth
