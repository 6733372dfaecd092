#pragma once

#include <chainsleuth/core.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace chainsleuth {

// Illicit is the positive class.
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts &) const = default;
};

// Rows whose truth is Unknown are skipped. Throws id_mismatch on length mismatch.
ConfusionCounts confusion(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth);

struct MetricsReport {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    // TP / (TP + (FP + FN) / 2) over the illicit class counts.
    double micro_f1 = 0;
    // Same formula with counts pooled over both classes, i.e. accuracy.
    double pooled_micro_f1 = 0;
    double mcc = 0;
};

// Degenerate ratios (0/0) are reported as 0.
MetricsReport metrics(const ConfusionCounts &c);

// Per illicit test row: which models classified it correctly.
struct CaseBreakdown {
    enum class Category { easy, hard, average };

    std::vector<std::string> models;
    std::vector<std::string> row_ids;
    std::vector<int> row_steps;
    std::vector<Category> categories;
    // Correct-model subset per row, as a bitmask over `models`.
    std::vector<std::uint32_t> correct_sets;

    std::int64_t count(Category c) const;
    // step -> (label -> count); labels are "EASY", "HARD" or the
    // comma-joined correct subset of an AVERAGE row.
    std::map<int, std::map<std::string, std::int64_t>> by_step() const;
    std::string subset_label(std::uint32_t mask) const;
};

struct ModelPredictions {
    std::string name;
    std::vector<ClassLabel> predicted;
};

// Throws model_count_too_small for fewer than two models and id_mismatch on
// misaligned inputs.
CaseBreakdown categorize_cases(std::span<const ModelPredictions> models, std::span<const std::string> ids,
                               std::span<const int> steps, std::span<const ClassLabel> truth);

} // namespace chainsleuth
