#pragma once

#include <chainsleuth/core.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chainsleuth {

// Row-major labelled feature table; rows carry an id, a time step and a class.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::vector<std::string> columns);

    void add_row(std::string id, int time_step, ClassLabel label, std::span<const double> values);

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }

    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    double &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * cols(), cols()};
    }

    const std::vector<std::string> &columns() const noexcept { return columns_; }
    const std::vector<std::string> &ids() const noexcept { return ids_; }
    const std::vector<int> &time_steps() const noexcept { return steps_; }
    const std::vector<ClassLabel> &labels() const noexcept { return labels_; }
    const std::vector<double> &values() const noexcept { return values_; }

    // Throws unknown_feature.
    std::size_t column_index(std::string_view name) const;

    FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
    // Columns are emitted in the order given.
    FeatureMatrix select_columns(std::span<const std::size_t> indices) const;
    FeatureMatrix without_column(std::size_t c) const;

    // Missing (NaN) cells become `fill`.
    void impute(double fill = 0.0);

private:
    std::vector<std::string> columns_;
    std::vector<std::string> ids_;
    std::vector<int> steps_;
    std::vector<ClassLabel> labels_;
    std::vector<double> values_;
};

} // namespace chainsleuth
