#include <chainsleuth/eval.hpp>
#include <chainsleuth/ml.hpp>
#include <chainsleuth/parallel.hpp>
#include <chainsleuth/rng.hpp>

#include "csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace chainsleuth {

// ---------------------------------------------------------------- scaling

double MinMaxScaler::apply(std::size_t col, double v) const {
    if (range[col] == 0)
        return 0.0;
    double x = (v - min[col]) / range[col];
    if (clamp)
        x = std::clamp(x, 0.0, 1.0);
    return x;
}

void MinMaxScaler::transform(FeatureMatrix &m) const {
    if (m.cols() != min.size())
        throw error(errc::feature_mismatch, "scaler width differs from matrix");
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            m.at(r, c) = apply(c, m.at(r, c));
}

MinMaxScaler fit_min_max(const FeatureMatrix &m, std::span<const std::size_t> fit_rows, bool clamp) {
    if (fit_rows.empty())
        throw error(errc::empty_fit, "no rows to fit the scaler on");
    MinMaxScaler s;
    s.clamp = clamp;
    s.min.assign(m.cols(), 0.0);
    s.range.assign(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double lo = m.at(fit_rows[0], c), hi = lo;
        for (auto r : fit_rows) {
            lo = std::min(lo, m.at(r, c));
            hi = std::max(hi, m.at(r, c));
        }
        s.min[c] = lo;
        s.range[c] = hi - lo;
    }
    return s;
}

std::pair<FeatureMatrix, MinMaxScaler> scale_min_max(const FeatureMatrix &m, std::span<const std::size_t> fit_rows,
                                                     bool clamp) {
    auto scaler = fit_min_max(m, fit_rows, clamp);
    FeatureMatrix out = m;
    scaler.transform(out);
    return {std::move(out), std::move(scaler)};
}

// ---------------------------------------------------------------- splits

StepRange StepRange::parse(std::string_view text) {
    auto fail = [&] { return error(errc::config_invalid, fmt::format("bad step range '{}'", text)); };
    long a = 0, b = 0;
    const auto dash = text.find('-');
    if (dash == std::string_view::npos) {
        if (!csv::parse_long(text, a))
            throw fail();
        b = a;
    } else if (!csv::parse_long(text.substr(0, dash), a) || !csv::parse_long(text.substr(dash + 1), b)) {
        throw fail();
    }
    if (a < 1 || b < a)
        throw fail();
    return {static_cast<int>(a), static_cast<int>(b)};
}

void SplitSpec::validate() const {
    if (train.first < 1 || train.last < train.first || test.last < test.first)
        throw error(errc::config_invalid, "empty step range");
    if (train.last >= test.first)
        throw error(errc::config_invalid, "training steps must precede test steps");
}

std::pair<FeatureMatrix, FeatureMatrix> temporal_split(const FeatureMatrix &m, const SplitSpec &spec) {
    spec.validate();
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (spec.exclude_unknown && m.labels()[r] == ClassLabel::Unknown)
            continue;
        const int s = m.time_steps()[r];
        if (spec.train.contains(s))
            train.push_back(r);
        else if (spec.test.contains(s))
            test.push_back(r);
    }
    return {m.select_rows(train), m.select_rows(test)};
}

// ---------------------------------------------------------------- shared helpers

namespace {

struct Labelled {
    std::vector<std::size_t> rows; // rows with a known class
    std::vector<std::uint8_t> y;   // 1 = illicit
};

Labelled labelled_rows(const FeatureMatrix &m) {
    Labelled out;
    std::size_t pos = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto l = m.labels()[r];
        if (l == ClassLabel::Unknown)
            continue;
        out.rows.push_back(r);
        out.y.push_back(l == ClassLabel::Illicit);
        pos += l == ClassLabel::Illicit;
    }
    if (pos == 0 || pos == out.rows.size())
        throw error(errc::single_class_training_set, "training rows must contain both classes");
    return out;
}

double sigmoid(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

// ---------------------------------------------------------------- logistic regression

namespace {

struct LogisticProblem {
    const FeatureMatrix &m;
    const Labelled &data;
    double l2;

    double margin(const std::vector<double> &w, double b, std::size_t r) const {
        auto x = m.row(r);
        double z = b;
        for (std::size_t j = 0; j < x.size(); ++j)
            z += w[j] * x[j];
        return z;
    }

    double loss(const std::vector<double> &w, double b) const {
        double sum = 0;
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const double z = margin(w, b, data.rows[i]);
            sum += data.y[i] ? softplus(-z) : softplus(z);
        }
        double reg = 0;
        for (double v : w)
            reg += v * v;
        return (sum + 0.5 * l2 * reg) / static_cast<double>(data.rows.size());
    }

    void gradient(const std::vector<double> &w, double b, std::vector<double> &gw, double &gb) const {
        std::fill(gw.begin(), gw.end(), 0.0);
        gb = 0;
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            const auto r = data.rows[i];
            const double err = sigmoid(margin(w, b, r)) - data.y[i];
            auto x = m.row(r);
            for (std::size_t j = 0; j < x.size(); ++j)
                gw[j] += err * x[j];
            gb += err;
        }
        const double n = static_cast<double>(data.rows.size());
        for (std::size_t j = 0; j < w.size(); ++j)
            gw[j] = (gw[j] + l2 * w[j]) / n;
        gb /= n;
    }
};

} // namespace

TrainedModel train_logistic(const FeatureMatrix &train, const LogisticConfig &cfg) {
    if (cfg.max_iterations < 1 || cfg.l2_strength < 0 || cfg.tolerance < 0)
        throw error(errc::config_invalid, "logistic configuration out of range");
    const auto data = labelled_rows(train);
    const LogisticProblem problem{train, data, cfg.l2_strength};

    const auto d = train.cols();
    std::vector<double> w(d, 0.0), gw(d), w_next(d);
    double b = 0, gb = 0;
    double current = problem.loss(w, b);
    double step = 1.0;

    TrainedModel model;
    model.kind = ModelKind::LogisticRegression;
    model.feature_names = train.columns();
    model.logistic = cfg;
    model.loss_history.push_back(current);

    for (int it = 0; it < cfg.max_iterations; ++it) {
        problem.gradient(w, b, gw, gb);
        double gnorm2 = gb * gb, ginf = std::abs(gb);
        for (double g : gw) {
            gnorm2 += g * g;
            ginf = std::max(ginf, std::abs(g));
        }
        if (ginf <= cfg.tolerance)
            break;
        // Backtracking line search with the Armijo condition; accepted steps
        // never increase the loss.
        step = std::min(step * 2.0, 1e6);
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t j = 0; j < d; ++j)
                w_next[j] = w[j] - step * gw[j];
            const double b_next = b - step * gb;
            const double candidate = problem.loss(w_next, b_next);
            if (candidate <= current - 0.5 * step * gnorm2) {
                w.swap(w_next);
                b = b_next;
                current = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
        model.loss_history.push_back(current);
    }
    model.weights = std::move(w);
    model.intercept = b;
    return model;
}

// ---------------------------------------------------------------- random forest

const TreeNode &DecisionTree::leaf_for(std::span<const double> row) const {
    std::uint32_t n = 0;
    while (nodes[n].feature >= 0)
        n = row[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n];
}

namespace {

struct SplitCandidate {
    std::int32_t feature = -1;
    double threshold = 0;
    double proxy = -std::numeric_limits<double>::infinity();
    double impurity_decrease = 0;
};

double gini(double pos, double total) {
    if (total <= 0)
        return 0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix &m, const Labelled &data, const ForestConfig &cfg, std::size_t mtry,
                std::uint64_t seed)
        : m_(m), data_(data), cfg_(cfg), mtry_(mtry), rng_(seed), importance_(m.cols(), 0.0) {}

    DecisionTree build() {
        const auto n = data_.rows.size();
        std::vector<double> counts(n, 0.0);
        if (cfg_.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                counts[rng_.below(n)] += 1.0;
        } else {
            std::fill(counts.begin(), counts.end(), 1.0);
        }
        for (std::size_t i = 0; i < n; ++i)
            if (counts[i] > 0) {
                samples_.push_back(static_cast<std::uint32_t>(i));
                weight_.push_back(counts[i]);
            }
        weight_of_.assign(n, 0.0);
        for (std::size_t k = 0; k < samples_.size(); ++k)
            weight_of_[samples_[k]] = weight_[k];

        struct Pending {
            std::uint32_t node;
            std::size_t begin, end;
            int depth;
        };
        DecisionTree tree;
        tree.nodes.emplace_back();
        std::vector<Pending> stack{{0, 0, samples_.size(), 0}};
        root_weight_ = std::accumulate(weight_.begin(), weight_.end(), 0.0);
        constant_.assign(m_.cols(), true);
        for (std::size_t f = 0; f < m_.cols(); ++f)
            for (auto s : samples_)
                if (value(s, f) != value(samples_.front(), f)) {
                    constant_[f] = false;
                    break;
                }
        features_.resize(m_.cols());
        std::iota(features_.begin(), features_.end(), std::uint32_t{0});

        while (!stack.empty()) {
            const auto p = stack.back();
            stack.pop_back();
            double total = 0, pos = 0;
            for (auto k = p.begin; k < p.end; ++k) {
                total += weight_of_[samples_[k]];
                pos += data_.y[samples_[k]] ? weight_of_[samples_[k]] : 0.0;
            }
            tree.nodes[p.node].illicit_fraction = pos / total;

            const bool pure = pos == 0 || pos == total;
            const bool too_small = p.end - p.begin < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf);
            const bool too_deep = cfg_.max_depth > 0 && p.depth >= cfg_.max_depth;
            if (pure || too_small || too_deep)
                continue;

            const auto split = best_split(p.begin, p.end, total, pos);
            if (split.feature < 0)
                continue;

            auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                             samples_.begin() + static_cast<std::ptrdiff_t>(p.end), [&](auto s) {
                                                 return value(s, static_cast<std::size_t>(split.feature)) <=
                                                        split.threshold;
                                             });
            const auto cut = static_cast<std::size_t>(mid - samples_.begin());
            importance_[static_cast<std::size_t>(split.feature)] += split.impurity_decrease / root_weight_;

            const auto left = static_cast<std::uint32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto &node = tree.nodes[p.node];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = left;
            node.right = left + 1;
            // Right pushed first so the left subtree is expanded first.
            stack.push_back({left + 1, cut, p.end, p.depth + 1});
            stack.push_back({left, p.begin, cut, p.depth + 1});
        }
        return tree;
    }

    const std::vector<double> &importance() const { return importance_; }

private:
    double value(std::uint32_t sample, std::size_t feature) const {
        return m_.at(data_.rows[sample], feature);
    }

    SplitCandidate best_split(std::size_t begin, std::size_t end, double total, double pos) {
        SplitCandidate best;
        const double parent = total * gini(pos, total);
        const auto min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        std::size_t visited = 0;
        // Draw features without replacement until mtry non-constant ones were examined.
        for (std::size_t drawn = 0; drawn < features_.size() && visited < mtry_; ++drawn) {
            const auto pick = drawn + rng_.below(features_.size() - drawn);
            std::swap(features_[drawn], features_[pick]);
            const auto f = features_[drawn];

            if (constant_[f])
                continue;
            column_.clear();
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (auto k = begin; k < end; ++k) {
                const double v = value(samples_[k], f);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                column_.emplace_back(v, samples_[k]);
            }
            if (lo == hi)
                continue;
            ++visited;
            std::sort(column_.begin(), column_.end());

            double wl = 0, pl = 0;
            for (std::size_t i = 0; i + 1 < column_.size(); ++i) {
                const auto s = column_[i].second;
                wl += weight_of_[s];
                pl += data_.y[s] ? weight_of_[s] : 0.0;
                if (column_[i].first == column_[i + 1].first)
                    continue;
                if (i + 1 < min_leaf || column_.size() - (i + 1) < min_leaf)
                    continue;
                const double wr = total - wl, pr = pos - pl;
                const double children = wl * gini(pl, wl) + wr * gini(pr, wr);
                const double proxy = -children;
                if (proxy > best.proxy) {
                    best.proxy = proxy;
                    best.feature = static_cast<std::int32_t>(f);
                    const double a = column_[i].first, b = column_[i + 1].first;
                    double t = a / 2.0 + b / 2.0;
                    if (t >= b || t < a)
                        t = a;
                    best.threshold = t;
                    best.impurity_decrease = parent - children;
                }
            }
        }
        return best;
    }

    const FeatureMatrix &m_;
    const Labelled &data_;
    const ForestConfig &cfg_;
    std::size_t mtry_;
    Rng rng_;
    std::vector<std::uint32_t> samples_;
    std::vector<double> weight_;
    std::vector<double> weight_of_;
    std::vector<std::uint32_t> features_;
    std::vector<bool> constant_; // over the whole bootstrap sample
    std::vector<std::pair<double, std::uint32_t>> column_;
    std::vector<double> importance_;
    double root_weight_ = 0;
};

} // namespace

TrainedModel train_random_forest(const FeatureMatrix &train, const ForestConfig &cfg) {
    if (cfg.estimators < 1 || cfg.min_samples_leaf < 1 || cfg.max_features < 0 || cfg.max_depth < 0)
        throw error(errc::config_invalid, "forest configuration out of range");
    if (train.cols() == 0)
        throw error(errc::config_invalid, "no feature columns");
    const auto data = labelled_rows(train);
    const std::size_t mtry =
        cfg.max_features > 0
            ? std::min<std::size_t>(static_cast<std::size_t>(cfg.max_features), train.cols())
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(train.cols()))));

    TrainedModel model;
    model.kind = ModelKind::RandomForest;
    model.feature_names = train.columns();
    model.forest = cfg;
    model.seed = cfg.seed;
    model.trees.resize(static_cast<std::size_t>(cfg.estimators));
    std::vector<std::vector<double>> per_tree(model.trees.size());

    parallel_for(model.trees.size(), [&](std::size_t t) {
        TreeBuilder builder(train, data, cfg, mtry, derive_seed(cfg.seed, t));
        model.trees[t] = builder.build();
        per_tree[t] = builder.importance();
    });

    // Per-tree normalization, then averaging, then a final normalization.
    model.impurity_importance.assign(train.cols(), 0.0);
    for (const auto &imp : per_tree) {
        const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (sum <= 0)
            continue;
        for (std::size_t j = 0; j < imp.size(); ++j)
            model.impurity_importance[j] += imp[j] / sum;
    }
    const double sum = std::accumulate(model.impurity_importance.begin(), model.impurity_importance.end(), 0.0);
    if (sum > 0)
        for (auto &v : model.impurity_importance)
            v /= sum;
    return model;
}

double TrainedModel::illicit_score(std::span<const double> row) const {
    if (kind == ModelKind::LogisticRegression) {
        double z = intercept;
        for (std::size_t j = 0; j < weights.size(); ++j)
            z += weights[j] * row[j];
        return sigmoid(z);
    }
    std::size_t votes = 0;
    for (const auto &t : trees)
        votes += t.votes_illicit(row);
    return static_cast<double>(votes) / static_cast<double>(trees.size());
}

ClassLabel TrainedModel::predict(std::span<const double> row) const {
    const double s = illicit_score(row);
    const bool illicit = kind == ModelKind::LogisticRegression ? s > 0.5 : s >= 0.5;
    return illicit ? ClassLabel::Illicit : ClassLabel::Licit;
}

void TrainedModel::check_features(const FeatureMatrix &m) const {
    if (m.columns() != feature_names)
        throw error(errc::feature_mismatch,
                    fmt::format("model expects {} features, matrix has {} (or names differ)", feature_names.size(),
                                m.cols()));
}

std::vector<ClassLabel> TrainedModel::predict(const FeatureMatrix &m) const {
    check_features(m);
    std::vector<ClassLabel> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        out[r] = predict(m.row(r));
    return out;
}

std::vector<double> TrainedModel::scores(const FeatureMatrix &m) const {
    check_features(m);
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        out[r] = illicit_score(m.row(r));
    return out;
}

std::vector<int> tree_votes(const TrainedModel &model, std::span<const double> row) {
    if (model.kind != ModelKind::RandomForest)
        throw error(errc::wrong_model_kind, "tree votes need a random forest");
    std::vector<int> out;
    out.reserve(model.trees.size());
    int votes = 0;
    for (const auto &t : model.trees) {
        votes += t.votes_illicit(row);
        out.push_back(votes);
    }
    return out;
}

// ---------------------------------------------------------------- ensembles

std::vector<ClassLabel> ensemble_predict(const EnsembleSpec &spec, const FeatureMatrix &rows) {
    if (spec.members.size() < 2 || spec.members.size() > 3)
        throw error(errc::config_invalid, "an ensemble has 2 or 3 members");
    for (const auto *m : spec.members)
        if (m->feature_names != spec.members.front()->feature_names)
            throw error(errc::feature_mismatch, "ensemble members were trained on different features");
    std::vector<std::vector<ClassLabel>> votes;
    for (const auto *m : spec.members)
        votes.push_back(m->predict(rows));

    std::vector<ClassLabel> out(rows.rows());
    const auto n = spec.members.size();
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        std::size_t yes = 0;
        for (const auto &v : votes)
            yes += v[r] == ClassLabel::Illicit;
        bool illicit = false;
        switch (spec.rule) {
        case EnsembleRule::conjunction: illicit = yes == n; break;
        case EnsembleRule::majority: illicit = 2 * yes > n; break;
        case EnsembleRule::disjunction: illicit = yes > 0; break;
        }
        out[r] = illicit ? ClassLabel::Illicit : ClassLabel::Licit;
    }
    return out;
}

// ---------------------------------------------------------------- importance

namespace {

double f1_of(const std::vector<ClassLabel> &pred, const FeatureMatrix &m) {
    return metrics(confusion(pred, m.labels())).f1;
}

// 1-based ranks by descending score; ties keep column order.
std::vector<std::size_t> rank_desc(const std::vector<double> &scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> rank(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        rank[order[i]] = i + 1;
    return rank;
}

std::vector<double> normalized_share(const std::vector<double> &scores) {
    std::vector<double> out(scores.size());
    double sum = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::max(0.0, scores[i]);
        sum += out[i];
    }
    for (auto &v : out)
        v = sum > 0 ? v / sum : 0.0;
    return out;
}

TrainedModel retrain_like(const TrainedModel &model, const FeatureMatrix &train) {
    if (model.kind == ModelKind::RandomForest)
        return train_random_forest(train, model.forest);
    return train_logistic(train, model.logistic);
}

} // namespace

ImportanceReport importance_report(const TrainedModel &model, const FeatureMatrix &train,
                                   const FeatureMatrix &validation, const ImportanceConfig &cfg) {
    if (cfg.permutation_repeats < 1)
        throw error(errc::config_invalid, "permutation_repeats must be positive");
    model.check_features(validation);
    model.check_features(train);
    const auto d = validation.cols();
    const double baseline = f1_of(model.predict(validation), validation);

    ImportanceReport rep;
    rep.features = validation.columns();
    if (model.kind == ModelKind::RandomForest)
        rep.impurity = model.impurity_importance;

    rep.permutation.assign(d, 0.0);
    parallel_for(d, [&](std::size_t j) {
        std::vector<double> column(validation.rows());
        for (std::size_t r = 0; r < validation.rows(); ++r)
            column[r] = validation.at(r, j);
        std::vector<double> row(d);
        std::vector<ClassLabel> pred(validation.rows());
        double sum = 0;
        for (int rep_i = 0; rep_i < cfg.permutation_repeats; ++rep_i) {
            Rng rng(derive_seed(cfg.seed, j * 1'000'003ULL + static_cast<std::uint64_t>(rep_i)));
            auto shuffled = column;
            rng.shuffle(std::span(shuffled));
            for (std::size_t r = 0; r < validation.rows(); ++r) {
                auto src = validation.row(r);
                std::copy(src.begin(), src.end(), row.begin());
                row[j] = shuffled[r];
                pred[r] = model.predict(row);
            }
            sum += f1_of(pred, validation);
        }
        rep.permutation[j] = baseline - sum / cfg.permutation_repeats;
    });

    rep.drop_column.assign(d, 0.0);
    if (cfg.drop_column && d > 1) {
        // Retraining already parallelizes per tree.
        for (std::size_t j = 0; j < d; ++j) {
            auto reduced = retrain_like(model, train.without_column(j));
            const auto v = validation.without_column(j);
            rep.drop_column[j] = baseline - f1_of(reduced.predict(v), v);
        }
    }

    std::vector<std::vector<std::size_t>> ranks;
    std::vector<std::vector<double>> shares;
    if (rep.impurity) {
        ranks.push_back(rank_desc(*rep.impurity));
        shares.push_back(normalized_share(*rep.impurity));
    }
    ranks.push_back(rank_desc(rep.permutation));
    shares.push_back(normalized_share(rep.permutation));
    if (cfg.drop_column) {
        ranks.push_back(rank_desc(rep.drop_column));
        shares.push_back(normalized_share(rep.drop_column));
    }

    rep.mean_rank.assign(d, 0.0);
    rep.combined_share.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (const auto &r : ranks)
            rep.mean_rank[j] += static_cast<double>(r[j]);
        rep.mean_rank[j] /= static_cast<double>(ranks.size());
        for (const auto &s : shares)
            rep.combined_share[j] += s[j];
        rep.combined_share[j] /= static_cast<double>(shares.size());
    }
    std::vector<double> neg(d);
    for (std::size_t j = 0; j < d; ++j)
        neg[j] = -rep.mean_rank[j];
    rep.combined_rank = rank_desc(neg);
    return rep;
}

RefinePolicy parse_refine_policy(std::string_view text) {
    auto fail = [&] { return error(errc::config_invalid, fmt::format("bad refine policy '{}'", text)); };
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw fail();
    const auto kind = text.substr(0, colon);
    const auto arg = text.substr(colon + 1);
    double x = 0;
    if (!csv::parse_double(arg, x) || std::isnan(x))
        throw fail();
    if (kind == "cumulative" && x > 0 && x <= 1)
        return CumulativeImportance{x};
    if (kind == "top" && x >= 1 && x == std::floor(x))
        return TopK{static_cast<std::size_t>(x)};
    if (kind == "drop" && x >= 0 && x < 1)
        return DropBottomFraction{x};
    throw fail();
}

std::string format_refine_policy(const RefinePolicy &p) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, CumulativeImportance>)
                return fmt::format("cumulative:{}", v.threshold);
            else if constexpr (std::is_same_v<T, TopK>)
                return fmt::format("top:{}", v.k);
            else
                return fmt::format("drop:{}", v.fraction);
        },
        p);
}

std::vector<std::size_t> select_features(const ImportanceReport &report, const RefinePolicy &policy) {
    const auto d = report.features.size();
    std::vector<std::size_t> order(d);
    for (std::size_t j = 0; j < d; ++j)
        order[report.combined_rank[j] - 1] = j;

    std::size_t keep_n = d;
    if (const auto *c = std::get_if<CumulativeImportance>(&policy)) {
        if (c->threshold < 1.0) {
            double cum = 0;
            keep_n = 0;
            while (keep_n < d && cum < c->threshold - 1e-12)
                cum += report.combined_share[order[keep_n++]];
        }
    } else if (const auto *t = std::get_if<TopK>(&policy)) {
        keep_n = std::min(t->k, d);
    } else if (const auto *b = std::get_if<DropBottomFraction>(&policy)) {
        keep_n = d - static_cast<std::size_t>(std::floor(b->fraction * static_cast<double>(d)));
    }
    std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep_n));
    std::sort(kept.begin(), kept.end());
    return kept;
}

RefinedMatrix refine_features(const FeatureMatrix &m, const ImportanceReport &report, const RefinePolicy &policy) {
    if (m.columns() != report.features)
        throw error(errc::feature_mismatch, "importance report does not cover the matrix columns");
    const auto kept = select_features(report, policy);
    RefinedMatrix out{m.select_columns(kept), {}};
    out.kept = out.matrix.columns();
    return out;
}

} // namespace chainsleuth
