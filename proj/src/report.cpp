#include <chainsleuth/features.hpp>
#include <chainsleuth/ingest.hpp>
#include <chainsleuth/report.hpp>
#include <chainsleuth/rng.hpp>

#include "csv.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <memory>

namespace chainsleuth {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- hashing / manifest

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw error(errc::io_error, "sha256 failed");
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i)
        hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_file(const fs::path &file) { return sha256_hex(csv::read_file(file)); }

void write_manifest(const fs::path &dir, std::string_view command, const ConfigEntries &config, std::uint64_t seed,
                    const std::vector<fs::path> &inputs) {
    nlohmann::ordered_json j;
    j["tool"] = "chainsleuth";
    j["command"] = command;
    j["seed"] = seed;
    auto &c = j["config"] = nlohmann::ordered_json::object();
    for (const auto &[k, v] : config)
        c[k] = v;

    std::vector<fs::path> in_files;
    for (const auto &p : inputs) {
        if (fs::is_directory(p)) {
            for (const auto &e : fs::directory_iterator(p))
                if (e.is_regular_file())
                    in_files.push_back(e.path());
        } else {
            in_files.push_back(p);
        }
    }
    std::sort(in_files.begin(), in_files.end());
    auto &in = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto &p : in_files)
        in.push_back({{"file", p.filename().string()}, {"sha256", sha256_file(p)}});

    std::vector<fs::path> out_files;
    for (const auto &e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            out_files.push_back(e.path());
    std::sort(out_files.begin(), out_files.end());
    auto &out = j["outputs"] = nlohmann::ordered_json::array();
    for (const auto &p : out_files)
        out.push_back({{"file", p.filename().string()}, {"sha256", sha256_file(p)}});

    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f)
        throw error(errc::io_error, "cannot write manifest in " + dir.string());
    f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- pipeline

namespace {

std::string rule_name(EnsembleRule r) {
    switch (r) {
    case EnsembleRule::conjunction: return "conjunction";
    case EnsembleRule::majority: return "majority";
    case EnsembleRule::disjunction: return "disjunction";
    }
    return "?";
}

std::string join(const std::vector<std::string> &v, char sep) {
    std::string s;
    for (const auto &x : v) {
        if (!s.empty())
            s += sep;
        s += x;
    }
    return s;
}

} // namespace

ConfigEntries PipelineConfig::entries() const {
    return {
        {"seed", std::to_string(seed)},
        {"train_steps", fmt::format("{}-{}", split.train.first, split.train.last)},
        {"test_steps", fmt::format("{}-{}", split.test.first, split.test.last)},
        {"exclude_unknown", split.exclude_unknown ? "true" : "false"},
        {"estimators", std::to_string(forest.estimators)},
        {"max_features", std::to_string(forest.max_features)},
        {"bootstrap", forest.bootstrap ? "true" : "false"},
        {"lr_max_iterations", std::to_string(logistic.max_iterations)},
        {"lr_l2_strength", fmt::format("{}", logistic.l2_strength)},
        {"scale", scale ? "min-max" : "none"},
        {"ensemble", join(ensemble, '+')},
        {"ensemble_rule", rule_name(rule)},
        {"permutation_repeats", std::to_string(importance.permutation_repeats)},
        {"drop_column", importance.drop_column ? "true" : "false"},
        {"refine_policy", format_refine_policy(refine)},
        {"trend_features", join(trend_features, ',')},
        {"include_wallets", include_wallets ? "true" : "false"},
    };
}

const ModelResult &EvaluationSummary::find(std::string_view dataset, std::string_view model,
                                           std::string_view features) const {
    for (const auto &d : datasets)
        for (const auto &m : d.models)
            if (m.dataset == dataset && m.model == model && m.features == features)
                return m;
    throw error(errc::config_invalid, fmt::format("no result for {}/{}/{}", dataset, model, features));
}

namespace {

} // namespace

std::pair<FeatureMatrix, FeatureMatrix> prepare_split(const FeatureMatrix &m, const PipelineConfig &cfg) {
    auto [train, test] = temporal_split(m, cfg.split);
    if (train.rows() == 0 || test.rows() == 0)
        throw error(errc::config_invalid, "temporal split leaves an empty train or test set");
    train.impute();
    test.impute();
    if (cfg.scale) {
        std::vector<std::size_t> all(train.rows());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        const auto scaler = fit_min_max(train, all);
        scaler.transform(train);
        scaler.transform(test);
    }
    return {std::move(train), std::move(test)};
}

namespace {

struct Trained {
    TrainedModel lr, rf;
    const TrainedModel &by_name(std::string_view n) const {
        if (n == "LR")
            return lr;
        if (n == "RF")
            return rf;
        throw error(errc::config_invalid, fmt::format("unknown model '{}'", n));
    }
};

Trained train_both(const FeatureMatrix &train, const PipelineConfig &cfg) {
    auto forest = cfg.forest;
    forest.seed = cfg.seed;
    return {train_logistic(train, cfg.logistic), train_random_forest(train, forest)};
}

void score_all(std::string_view dataset, std::string_view features, const Trained &t, const FeatureMatrix &test,
               const PipelineConfig &cfg, std::vector<ModelResult> &out) {
    auto add = [&](std::string model, const std::vector<ClassLabel> &pred) {
        const auto c = confusion(pred, test.labels());
        out.push_back({std::string(dataset), std::move(model), std::string(features), c, metrics(c)});
    };
    add("LR", t.lr.predict(test));
    add("RF", t.rf.predict(test));
    if (cfg.ensemble.size() >= 2) {
        EnsembleSpec spec;
        spec.rule = cfg.rule;
        for (const auto &n : cfg.ensemble)
            spec.members.push_back(&t.by_name(n));
        add(join(cfg.ensemble, '+'), ensemble_predict(spec, test));
    }
}

} // namespace

DatasetResult evaluate_dataset(std::string_view name, const FeatureMatrix &m, const PipelineConfig &cfg) {
    if (cfg.ensemble.size() == 1 || cfg.ensemble.size() > 3)
        throw error(errc::config_invalid, "an ensemble has 2 or 3 members");
    const auto [train, test] = prepare_split(m, cfg);
    struct {
        const FeatureMatrix &train, &test;
    } data{train, test};
    DatasetResult res;
    res.dataset = std::string(name);

    const auto full = train_both(data.train, cfg);
    score_all(name, "all", full, data.test, cfg, res.models);

    auto icfg = cfg.importance;
    icfg.seed = derive_seed(cfg.seed, 1);
    res.importance = importance_report(full.rf, data.train, data.test, icfg);

    const auto kept = select_features(res.importance, cfg.refine);
    for (auto j : kept)
        res.refined_features.push_back(m.columns()[j]);
    const auto refined = train_both(data.train.select_columns(kept), cfg);
    score_all(name, "refined", refined, data.test.select_columns(kept), cfg, res.models);

    const std::vector<ModelPredictions> preds{{"LR", full.lr.predict(data.test)}, {"RF", full.rf.predict(data.test)}};
    res.cases = categorize_cases(preds, data.test.ids(), data.test.time_steps(), data.test.labels());
    res.test_ids = data.test.ids();
    res.test_truth = data.test.labels();
    res.rf_predicted = preds[1].predicted;
    res.rf_score = full.rf.scores(data.test);
    return res;
}

// ---------------------------------------------------------------- writers

void write_metrics_csv(std::ostream &out, std::span<const DatasetResult> results) {
    out << "dataset,model,features,tp,fp,fn,tn,precision,recall,f1,micro_f1,pooled_micro_f1,mcc\n";
    for (const auto &d : results)
        for (const auto &r : d.models)
            out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.dataset, r.model, r.features, r.counts.tp,
                               r.counts.fp, r.counts.fn, r.counts.tn, format_value(r.metrics.precision),
                               format_value(r.metrics.recall), format_value(r.metrics.f1),
                               format_value(r.metrics.micro_f1), format_value(r.metrics.pooled_micro_f1),
                               format_value(r.metrics.mcc));
}

void write_refinement_csv(std::ostream &out, std::span<const DatasetResult> results, const RefinePolicy &policy) {
    out << "dataset,model,policy,features_kept,features_total,delta_precision,delta_recall,delta_f1\n";
    for (const auto &d : results) {
        for (const auto &all : d.models) {
            if (all.features != "all")
                continue;
            for (const auto &ref : d.models)
                if (ref.features == "refined" && ref.model == all.model)
                    out << fmt::format("{},{},{},{},{},{},{},{}\n", d.dataset, all.model, format_refine_policy(policy),
                                       d.refined_features.size(), d.importance.features.size(),
                                       format_value(ref.metrics.precision - all.metrics.precision),
                                       format_value(ref.metrics.recall - all.metrics.recall),
                                       format_value(ref.metrics.f1 - all.metrics.f1));
        }
    }
}

void write_importance_csv(std::ostream &out, std::span<const DatasetResult> results) {
    out << "dataset,feature,impurity,permutation,drop_column,mean_rank,combined_rank,combined_share,kept\n";
    for (const auto &d : results) {
        const auto &imp = d.importance;
        for (std::size_t j = 0; j < imp.features.size(); ++j) {
            const bool kept =
                std::find(d.refined_features.begin(), d.refined_features.end(), imp.features[j]) !=
                d.refined_features.end();
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", d.dataset, imp.features[j],
                               imp.impurity ? format_value((*imp.impurity)[j]) : std::string(),
                               format_value(imp.permutation[j]), format_value(imp.drop_column[j]),
                               format_value(imp.mean_rank[j]), imp.combined_rank[j],
                               format_value(imp.combined_share[j]), kept ? 1 : 0);
        }
    }
}

void write_cases_csv(std::ostream &out, std::span<const DatasetResult> results) {
    out << "dataset,models,time_step,category,correct_models,count\n";
    for (const auto &d : results) {
        const auto models = join(d.cases.models, '+');
        for (const auto &[step, tally] : d.cases.by_step())
            for (const auto &[label, n] : tally) {
                const bool fixed = label == "EASY" || label == "HARD";
                out << fmt::format("{},{},{},{},\"{}\",{}\n", d.dataset, models, step, fixed ? label : "AVERAGE",
                                   fixed ? "" : label, n);
            }
    }
}

void write_distribution_csv(std::ostream &out, std::span<const StepCounts> counts) {
    out << "time_step,unknown,illicit,licit,total\n";
    for (std::size_t s = 0; s < counts.size(); ++s)
        out << fmt::format("{},{},{},{},{}\n", s + 1, counts[s].unknown, counts[s].illicit, counts[s].licit,
                           counts[s].total());
}

namespace {

std::ofstream open_out(const fs::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw error(errc::io_error, "cannot write " + p.string());
    return f;
}

void write_predictions(const fs::path &file, const DatasetResult &d) {
    auto f = open_out(file);
    f << "id,true_label,predicted_label,illicit_vote_share\n";
    for (std::size_t r = 0; r < d.test_ids.size(); ++r)
        f << fmt::format("{},{},{},{}\n", d.test_ids[r], code_of(d.test_truth[r]), code_of(d.rf_predicted[r]),
                         format_value(d.rf_score[r]));
}

} // namespace

EvaluationSummary evaluation_run(const DatasetBundle &bundle, const PipelineConfig &cfg, const fs::path &out_dir) {
    cfg.split.validate();
    fs::create_directories(out_dir);
    EvaluationSummary summary;

    const auto txm = tx_matrix(bundle);
    std::optional<FeatureMatrix> wm;
    if (cfg.include_wallets && !bundle.wallet_records.empty())
        wm = wallet_matrix(bundle);

    summary.datasets.push_back(evaluate_dataset("tx", txm, cfg));
    write_predictions(out_dir / "predictions_tx.csv", summary.datasets.back());
    if (wm) {
        summary.datasets.push_back(evaluate_dataset("wallets", *wm, cfg));
        write_predictions(out_dir / "predictions_wallets.csv", summary.datasets.back());
    }

    {
        auto f = open_out(out_dir / "metrics.csv");
        write_metrics_csv(f, summary.datasets);
    }
    {
        auto f = open_out(out_dir / "refinement.csv");
        write_refinement_csv(f, summary.datasets, cfg.refine);
    }
    {
        auto f = open_out(out_dir / "importance.csv");
        write_importance_csv(f, summary.datasets);
    }
    {
        auto f = open_out(out_dir / "cases_by_timestep.csv");
        write_cases_csv(f, summary.datasets);
    }
    const auto dist = distribution_report(bundle);
    {
        auto f = open_out(out_dir / "distribution_tx.csv");
        write_distribution_csv(f, dist.tx);
    }
    {
        auto f = open_out(out_dir / "distribution_wallets.csv");
        write_distribution_csv(f, dist.wallets);
    }

    int n_steps = 0;
    for (auto s : txm.time_steps())
        n_steps = std::max(n_steps, s);
    for (const auto &feature : cfg.trend_features) {
        const FeatureMatrix *src = nullptr;
        if (std::find(txm.columns().begin(), txm.columns().end(), feature) != txm.columns().end())
            src = &txm;
        else if (wm && std::find(wm->columns().begin(), wm->columns().end(), feature) != wm->columns().end())
            src = &*wm;
        if (!src)
            continue;
        const auto illicit = feature_trend_series(*src, feature, ClassLabel::Illicit, n_steps);
        const auto licit = feature_trend_series(*src, feature, ClassLabel::Licit, n_steps);
        auto f = open_out(out_dir / fmt::format("trend_{}.csv", feature));
        f << "time_step,illicit_mean,licit_mean\n";
        for (std::size_t s = 0; s < illicit.size(); ++s)
            f << fmt::format("{},{},{}\n", s + 1, illicit[s] ? format_value(*illicit[s]) : "",
                             licit[s] ? format_value(*licit[s]) : "");
    }
    return summary;
}

} // namespace chainsleuth
