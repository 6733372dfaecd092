#pragma once

#include <chainsleuth/matrix.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace chainsleuth {

// ---------------------------------------------------------------- scaling

struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> range; // 0 for constant columns
    bool clamp = false;

    double apply(std::size_t col, double v) const;
    void transform(FeatureMatrix &m) const;
};

// Fits on the given rows only; constant columns map to 0.
MinMaxScaler fit_min_max(const FeatureMatrix &m, std::span<const std::size_t> fit_rows, bool clamp = false);
std::pair<FeatureMatrix, MinMaxScaler> scale_min_max(const FeatureMatrix &m, std::span<const std::size_t> fit_rows,
                                                     bool clamp = false);

// ---------------------------------------------------------------- splits

struct StepRange {
    int first = 1;
    int last = 1;
    bool contains(int s) const noexcept { return s >= first && s <= last; }
    // "1-34" or "7"
    static StepRange parse(std::string_view text);
};

struct SplitSpec {
    StepRange train{1, 34};
    StepRange test{35, 49};
    bool exclude_unknown = true;

    // Throws config_invalid unless train and test are ordered, disjoint and non-empty.
    void validate() const;
};

std::pair<FeatureMatrix, FeatureMatrix> temporal_split(const FeatureMatrix &m, const SplitSpec &spec);

// ---------------------------------------------------------------- models

enum class ModelKind { LogisticRegression, RandomForest };

struct LogisticConfig {
    int max_iterations = 1000;
    // Penalty weight on 0.5*||w||^2 relative to the summed log-loss (inverse of C).
    double l2_strength = 1.0;
    double tolerance = 1e-6;
};

struct ForestConfig {
    int estimators = 50;
    // 0 selects floor(sqrt(feature count)).
    int max_features = 0;
    bool bootstrap = true;
    int min_samples_leaf = 1;
    // 0 means unlimited.
    int max_depth = 0;
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1; // -1 marks a leaf
    double threshold = 0;      // go left when x <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double illicit_fraction = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode &leaf_for(std::span<const double> row) const;
    bool votes_illicit(std::span<const double> row) const { return leaf_for(row).illicit_fraction >= 0.5; }
};

struct TrainedModel {
    ModelKind kind = ModelKind::RandomForest;
    std::vector<std::string> feature_names;
    std::uint64_t seed = 0;
    LogisticConfig logistic;
    ForestConfig forest;

    // logistic regression
    std::vector<double> weights;
    double intercept = 0;
    std::vector<double> loss_history;

    // random forest
    std::vector<DecisionTree> trees;
    std::vector<double> impurity_importance;

    // Probability (LR) or vote share (RF) for the illicit class.
    double illicit_score(std::span<const double> row) const;
    ClassLabel predict(std::span<const double> row) const;
    // Throws feature_mismatch when the columns differ from the training set.
    std::vector<ClassLabel> predict(const FeatureMatrix &m) const;
    std::vector<double> scores(const FeatureMatrix &m) const;
    void check_features(const FeatureMatrix &m) const;
};

// Rows labelled Unknown are ignored. Both throw single_class_training_set.
TrainedModel train_logistic(const FeatureMatrix &train, const LogisticConfig &cfg = {});
TrainedModel train_random_forest(const FeatureMatrix &train, const ForestConfig &cfg = {});

// Cumulative illicit vote count after each tree; throws wrong_model_kind for LR.
std::vector<int> tree_votes(const TrainedModel &model, std::span<const double> row);

void save_model(const TrainedModel &model, std::ostream &out);
TrainedModel load_model(std::istream &in);
void save_model(const TrainedModel &model, const std::filesystem::path &file);
TrainedModel load_model(const std::filesystem::path &file);

// ---------------------------------------------------------------- ensembles

enum class EnsembleRule { conjunction, majority, disjunction };

struct EnsembleSpec {
    std::vector<const TrainedModel *> members;
    EnsembleRule rule = EnsembleRule::conjunction;
};

std::vector<ClassLabel> ensemble_predict(const EnsembleSpec &spec, const FeatureMatrix &rows);

// ---------------------------------------------------------------- importance

struct ImportanceConfig {
    int permutation_repeats = 5;
    std::uint64_t seed = 0;
    bool drop_column = true;
};

struct ImportanceReport {
    std::vector<std::string> features;
    std::optional<std::vector<double>> impurity; // forests only
    std::vector<double> permutation;             // mean F1 drop over shuffles
    std::vector<double> drop_column;             // F1 drop after retraining without the column
    std::vector<double> mean_rank;               // average of the per-method ranks (1 = best)
    std::vector<std::size_t> combined_rank;      // 1-based permutation
    std::vector<double> combined_share;          // mean of the normalized non-negative scores
};

// Drop-column importance retrains on `train` with the model's own configuration.
ImportanceReport importance_report(const TrainedModel &model, const FeatureMatrix &train,
                                   const FeatureMatrix &validation, const ImportanceConfig &cfg = {});

struct CumulativeImportance {
    double threshold = 0.95;
};
struct TopK {
    std::size_t k = 10;
};
struct DropBottomFraction {
    double fraction = 0.1;
};
using RefinePolicy = std::variant<CumulativeImportance, TopK, DropBottomFraction>;

// "cumulative:0.95", "top:10" or "drop:0.2"
RefinePolicy parse_refine_policy(std::string_view text);
std::string format_refine_policy(const RefinePolicy &p);

// Column indices kept, in original order.
std::vector<std::size_t> select_features(const ImportanceReport &report, const RefinePolicy &policy);

struct RefinedMatrix {
    FeatureMatrix matrix;
    std::vector<std::string> kept;
};

RefinedMatrix refine_features(const FeatureMatrix &m, const ImportanceReport &report, const RefinePolicy &policy);

} // namespace chainsleuth
