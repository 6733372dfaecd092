#include <chainsleuth/matrix.hpp>

#include <fmt/format.h>

#include <cmath>
#include <numeric>
#include <unordered_set>

namespace chainsleuth {

FeatureMatrix::FeatureMatrix(std::vector<std::string> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string> seen;
    for (const auto &c : columns_)
        if (!seen.insert(c).second)
            throw error(errc::config_invalid, fmt::format("duplicate column '{}'", c));
}

void FeatureMatrix::add_row(std::string id, int time_step, ClassLabel label,
                            std::span<const double> values) {
    if (values.size() != cols())
        throw error(errc::feature_mismatch,
                    fmt::format("row {} has {} values, expected {}", id, values.size(), cols()));
    ids_.push_back(std::move(id));
    steps_.push_back(time_step);
    labels_.push_back(label);
    values_.insert(values_.end(), values.begin(), values.end());
}

std::size_t FeatureMatrix::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name)
            return i;
    throw error(errc::unknown_feature, std::string(name));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.columns_ = columns_;
    out.ids_.reserve(indices.size());
    out.values_.reserve(indices.size() * cols());
    for (auto r : indices) {
        out.ids_.push_back(ids_[r]);
        out.steps_.push_back(steps_[r]);
        out.labels_.push_back(labels_[r]);
        auto v = row(r);
        out.values_.insert(out.values_.end(), v.begin(), v.end());
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    for (auto c : indices)
        out.columns_.push_back(columns_.at(c));
    out.ids_ = ids_;
    out.steps_ = steps_;
    out.labels_ = labels_;
    out.values_.reserve(rows() * indices.size());
    for (std::size_t r = 0; r < rows(); ++r)
        for (auto c : indices)
            out.values_.push_back(at(r, c));
    return out;
}

FeatureMatrix FeatureMatrix::without_column(std::size_t c) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cols(); ++i)
        if (i != c)
            keep.push_back(i);
    return select_columns(keep);
}

void FeatureMatrix::impute(double fill) {
    for (auto &v : values_)
        if (std::isnan(v))
            v = fill;
}

} // namespace chainsleuth
