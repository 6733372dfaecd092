#include <chainsleuth/eval.hpp>

#include <fmt/format.h>

#include <cmath>

namespace chainsleuth {

ConfusionCounts confusion(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth) {
    if (predicted.size() != truth.size())
        throw error(errc::id_mismatch,
                    fmt::format("{} predictions for {} truth rows", predicted.size(), truth.size()));
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == ClassLabel::Unknown)
            continue;
        const bool actual = truth[i] == ClassLabel::Illicit;
        const bool flagged = predicted[i] == ClassLabel::Illicit;
        if (actual)
            ++(flagged ? c.tp : c.fn);
        else
            ++(flagged ? c.fp : c.tn);
    }
    return c;
}

namespace {

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

} // namespace

MetricsReport metrics(const ConfusionCounts &c) {
    const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const auto fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    MetricsReport m;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = ratio(2 * m.precision * m.recall, m.precision + m.recall);
    m.micro_f1 = ratio(tp, tp + 0.5 * (fp + fn));
    m.pooled_micro_f1 = ratio(tp + tn, tp + tn + 0.5 * ((fp + fn) + (fn + fp)));
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = den == 0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
    return m;
}

std::int64_t CaseBreakdown::count(Category c) const {
    std::int64_t n = 0;
    for (auto x : categories)
        n += x == c;
    return n;
}

std::string CaseBreakdown::subset_label(std::uint32_t mask) const {
    std::string s;
    for (std::size_t m = 0; m < models.size(); ++m)
        if (mask & (1u << m)) {
            if (!s.empty())
                s += ',';
            s += models[m];
        }
    return s;
}

std::map<int, std::map<std::string, std::int64_t>> CaseBreakdown::by_step() const {
    std::map<int, std::map<std::string, std::int64_t>> out;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        std::string key;
        switch (categories[i]) {
        case Category::easy: key = "EASY"; break;
        case Category::hard: key = "HARD"; break;
        case Category::average: key = subset_label(correct_sets[i]); break;
        }
        ++out[row_steps[i]][key];
    }
    return out;
}

CaseBreakdown categorize_cases(std::span<const ModelPredictions> models, std::span<const std::string> ids,
                               std::span<const int> steps, std::span<const ClassLabel> truth) {
    if (models.size() < 2)
        throw error(errc::model_count_too_small, fmt::format("{} model(s); at least 2 required", models.size()));
    if (models.size() > 32)
        throw error(errc::config_invalid, "at most 32 models");
    if (ids.size() != truth.size() || steps.size() != truth.size())
        throw error(errc::id_mismatch, "ids, steps and truth must align");
    for (const auto &m : models)
        if (m.predicted.size() != truth.size())
            throw error(errc::id_mismatch, fmt::format("model {} has {} predictions for {} rows", m.name,
                                                       m.predicted.size(), truth.size()));

    CaseBreakdown out;
    for (const auto &m : models)
        out.models.push_back(m.name);
    const std::uint32_t all = models.size() == 32 ? ~0u : (1u << models.size()) - 1;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] != ClassLabel::Illicit)
            continue;
        std::uint32_t mask = 0;
        for (std::size_t m = 0; m < models.size(); ++m)
            if (models[m].predicted[i] == ClassLabel::Illicit)
                mask |= 1u << m;
        out.row_ids.push_back(ids[i]);
        out.row_steps.push_back(steps[i]);
        out.correct_sets.push_back(mask);
        out.categories.push_back(mask == all ? CaseBreakdown::Category::easy
                                 : mask == 0 ? CaseBreakdown::Category::hard
                                             : CaseBreakdown::Category::average);
    }
    return out;
}

} // namespace chainsleuth
