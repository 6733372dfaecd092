#include <chainsleuth/commands.hpp>
#include <chainsleuth/features.hpp>
#include <chainsleuth/graphs.hpp>
#include <chainsleuth/ingest.hpp>

#include "csv.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <fstream>
#include <map>

namespace chainsleuth {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw error(errc::io_error, "cannot write " + p.string());
    return f;
}

void require_input(const RunConfig &cfg) {
    if (cfg.input.empty())
        throw error(errc::config_invalid, "--input is required");
    if (!fs::exists(cfg.input))
        throw error(errc::missing_file, cfg.input.string());
}

void prepare_output(const RunConfig &cfg) {
    if (cfg.output.empty())
        throw error(errc::config_invalid, "--output is required");
    fs::create_directories(cfg.output);
}

std::vector<std::string> split_members(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto plus = text.find('+', pos);
        if (plus == std::string_view::npos)
            plus = text.size();
        out.emplace_back(text.substr(pos, plus - pos));
        pos = plus + 1;
    }
    return out;
}

} // namespace

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.seed = seed;
    p.split.train = StepRange::parse(train_steps);
    p.split.test = StepRange::parse(test_steps);
    p.split.validate();
    if (estimators < 1)
        throw error(errc::config_invalid, "--estimators must be positive");
    p.forest.estimators = estimators;
    p.scale = scale;
    p.include_wallets = wallets;
    p.ensemble = ensemble.empty() || ensemble == "none" ? std::vector<std::string>{} : split_members(ensemble);
    for (const auto &m : p.ensemble)
        if (m != "LR" && m != "RF")
            throw error(errc::config_invalid, fmt::format("unknown ensemble member '{}'", m));
    if (p.ensemble.size() == 1 || p.ensemble.size() > 3)
        throw error(errc::config_invalid, "an ensemble has 2 or 3 members");
    if (rule == "conjunction")
        p.rule = EnsembleRule::conjunction;
    else if (rule == "majority")
        p.rule = EnsembleRule::majority;
    else if (rule == "disjunction")
        p.rule = EnsembleRule::disjunction;
    else
        throw error(errc::config_invalid, fmt::format("unknown ensemble rule '{}'", rule));
    p.refine = parse_refine_policy(refine_policy);
    if (permutation_repeats < 1)
        throw error(errc::config_invalid, "permutation repeats must be positive");
    p.importance.permutation_repeats = permutation_repeats;
    p.importance.drop_column = drop_column;
    return p;
}

std::unordered_map<std::string, ClassLabel> read_tx_labels(const fs::path &file) {
    const auto text = csv::read_file(file);
    const auto lines = csv::lines(text);
    std::unordered_map<std::string, ClassLabel> out;
    std::vector<std::string_view> cells;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        csv::split(lines[i], cells);
        long code = 0;
        if (cells.size() != 2 || !csv::parse_long(cells[1], code))
            throw csv::malformed(file.filename().string(), i + 1, "expected txId,class");
        if (!out.emplace(std::string(csv::trim(cells[0])), label_from_code(code)).second)
            throw error(errc::duplicate_class, fmt::format("{} line {}", file.filename().string(), i + 1));
    }
    return out;
}

// ---------------------------------------------------------------- ingest / extract

void cmd_ingest(const RunConfig &cfg) {
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    write_bundle(bundle, cfg.output);

    const auto dist = distribution_report(bundle);
    {
        auto f = open_out(cfg.output / "distribution_tx.csv");
        write_distribution_csv(f, dist.tx);
    }
    {
        auto f = open_out(cfg.output / "distribution_wallets.csv");
        write_distribution_csv(f, dist.wallets);
    }
    auto f = open_out(cfg.output / "validation.csv");
    f << "table,rows\n";
    f << fmt::format("{},{}\n", files::txs_features, bundle.tx_records.size());
    f << fmt::format("{},{}\n", files::txs_classes, bundle.tx_classes.size());
    f << fmt::format("{},{}\n", files::txs_edgelist, bundle.tx_edges.edges.size());
    f << fmt::format("{},{}\n", files::wallets_features, bundle.wallet_records.size());
    f << fmt::format("{},{}\n", files::wallets_classes, bundle.wallet_classes.size());
    f << fmt::format("{},{}\n", files::addr_addr, bundle.addr_addr_edges.edges.size());
    f << fmt::format("{},{}\n", files::addr_tx, bundle.addr_tx_edges.edges.size());
    f << fmt::format("{},{}\n", files::tx_addr, bundle.tx_addr_edges.edges.size());
    f.close();
    write_manifest(cfg.output, "ingest", {}, cfg.seed, {cfg.input});
}

void cmd_extract(const RunConfig &cfg) {
    require_input(cfg);
    prepare_output(cfg);
    const auto txs = read_raw_transactions(cfg.input);
    const auto labels = cfg.labels ? read_tx_labels(*cfg.labels) : std::unordered_map<std::string, ClassLabel>{};
    const auto bundle = extract_bundle(txs, labels, ExtractOptions{cfg.blocks_per_step});
    write_bundle(bundle, cfg.output);
    std::vector<fs::path> inputs{cfg.input};
    if (cfg.labels)
        inputs.push_back(*cfg.labels);
    write_manifest(cfg.output, "extract", {{"blocks_per_step", std::to_string(cfg.blocks_per_step)}}, cfg.seed,
                   inputs);
}

// ---------------------------------------------------------------- graphs

namespace {

void export_graph(const RunConfig &cfg, std::string_view stem, const Digraph &g,
                  const std::vector<NodeAttributes> &attrs) {
    if (cfg.format == "graphml") {
        auto f = open_out(cfg.output / fmt::format("{}.graphml", stem));
        write_graphml(f, g, attrs);
    } else {
        auto f = open_out(cfg.output / fmt::format("{}.csv", stem));
        write_edge_list(f, g);
    }
}

} // namespace

void cmd_graphs(const RunConfig &cfg) {
    if (cfg.format != "edgelist" && cfg.format != "graphml")
        throw error(errc::config_invalid, fmt::format("unknown --format '{}'", cfg.format));
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    const auto tx_classes = bundle.tx_class_map();
    const auto wallet_classes = bundle.wallet_class_map();
    auto label_or = [](const auto &map, const std::string &key) -> std::optional<ClassLabel> {
        auto it = map.find(key);
        if (it == map.end())
            return std::nullopt;
        return it->second;
    };

    const auto flow = build_money_flow(bundle);
    {
        std::vector<NodeAttributes> attrs;
        for (std::uint32_t n = 0; n < flow.graph.node_count(); ++n)
            attrs.push_back({"transaction", label_or(tx_classes, flow.graph.name(n)), flow.time_steps[n]});
        export_graph(cfg, "money_flow", flow.graph, attrs);
    }

    const auto actors = build_actor_graph(bundle.addr_addr_edges);
    {
        std::vector<NodeAttributes> attrs;
        for (std::uint32_t n = 0; n < actors.graph.node_count(); ++n)
            attrs.push_back({"address", label_or(wallet_classes, actors.graph.name(n)), std::nullopt});
        export_graph(cfg, "actor_interaction", actors.graph, attrs);
    }

    const auto bip = build_addr_tx_graph(bundle.addr_tx_edges, bundle.tx_addr_edges);
    {
        std::vector<NodeAttributes> attrs;
        for (std::uint32_t n = 0; n < bip.graph.node_count(); ++n) {
            const bool addr = bip.is_address(n);
            attrs.push_back({addr ? "address" : "transaction",
                             label_or(addr ? wallet_classes : tx_classes, bip.graph.name(n)), std::nullopt});
        }
        export_graph(cfg, "address_transaction", bip.graph, attrs);
    }

    const auto users = cluster_users(bip);
    {
        auto f = open_out(cfg.output / "users.csv");
        f << "user,address\n";
        for (std::size_t u = 0; u < users.users.size(); ++u)
            for (const auto &a : users.users[u])
                f << fmt::format("{},{}\n", u, a.str());
    }
    {
        auto f = open_out(cfg.output / "user_edges.csv");
        f << "source,target\n";
        for (const auto &[s, t] : users.edges)
            f << fmt::format("{},{}\n", s, t);
    }
    {
        const auto st = user_stats(users);
        auto f = open_out(cfg.output / "user_stats.csv");
        f << "users,min,median,mean,max,share_1_10,share_11_1000,share_1001_plus\n";
        f << fmt::format("{},{},{},{},{},{},{},{}\n", st.users, st.min, format_value(st.median), format_value(st.mean),
                         st.max, format_value(st.share_1_10), format_value(st.share_11_1000),
                         format_value(st.share_1001_plus));
    }
    {
        const auto timeline = illicit_actor_timeline(bundle.wallet_records, wallet_classes);
        auto f = open_out(cfg.output / "illicit_actor_timeline.csv");
        f << "time_step,active_1_step,active_2_4_steps,active_5_plus_steps\n";
        for (std::size_t s = 0; s < timeline.per_step.size(); ++s)
            f << fmt::format("{},{},{},{}\n", s + 1, timeline.per_step[s][0], timeline.per_step[s][1],
                             timeline.per_step[s][2]);
    }
    write_manifest(cfg.output, "graphs", {{"format", cfg.format}}, cfg.seed, {cfg.input});
}

// ---------------------------------------------------------------- models

namespace {

FeatureMatrix dataset_matrix(const DatasetBundle &bundle, std::string_view dataset) {
    if (dataset == "tx")
        return tx_matrix(bundle);
    if (dataset == "wallets")
        return wallet_matrix(bundle);
    throw error(errc::config_invalid, fmt::format("unknown dataset '{}'", dataset));
}

std::vector<std::string> datasets_of(const DatasetBundle &bundle, const PipelineConfig &p) {
    std::vector<std::string> out{"tx"};
    if (p.include_wallets && !bundle.wallet_records.empty())
        out.emplace_back("wallets");
    return out;
}

} // namespace

void cmd_train(const RunConfig &cfg) {
    if (cfg.model != "rf" && cfg.model != "lr")
        throw error(errc::config_invalid, fmt::format("unknown model '{}'", cfg.model));
    const auto p = cfg.pipeline();
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    const auto [train, test] = prepare_split(dataset_matrix(bundle, cfg.dataset), p);

    TrainedModel model;
    if (cfg.model == "rf") {
        auto forest = p.forest;
        forest.seed = p.seed;
        model = train_random_forest(train, forest);
    } else {
        model = train_logistic(train, p.logistic);
    }
    save_model(model, cfg.output / fmt::format("model_{}_{}.json", cfg.model, cfg.dataset));

    const auto pred = model.predict(test);
    const auto score = model.scores(test);
    {
        auto f = open_out(cfg.output / "predictions.csv");
        f << "id,true_label,predicted_label,illicit_vote_share\n";
        for (std::size_t r = 0; r < test.rows(); ++r)
            f << fmt::format("{},{},{},{}\n", test.ids()[r], code_of(test.labels()[r]), code_of(pred[r]),
                             format_value(score[r]));
    }
    if (model.kind == ModelKind::RandomForest) {
        // Cumulative tree votes for every illicit test row.
        auto f = open_out(cfg.output / "tree_votes.csv");
        f << "id,true_label";
        for (int t = 1; t <= p.forest.estimators; ++t)
            f << ",tree_" << t;
        f << '\n';
        for (std::size_t r = 0; r < test.rows(); ++r) {
            if (test.labels()[r] != ClassLabel::Illicit)
                continue;
            f << test.ids()[r] << ',' << code_of(test.labels()[r]);
            for (int v : tree_votes(model, test.row(r)))
                f << ',' << v;
            f << '\n';
        }
    }
    const auto m = metrics(confusion(pred, test.labels()));
    {
        auto f = open_out(cfg.output / "metrics.csv");
        f << "dataset,model,precision,recall,f1,micro_f1,pooled_micro_f1,mcc\n";
        f << fmt::format("{},{},{},{},{},{},{},{}\n", cfg.dataset, cfg.model, format_value(m.precision),
                         format_value(m.recall), format_value(m.f1), format_value(m.micro_f1),
                         format_value(m.pooled_micro_f1), format_value(m.mcc));
    }
    auto entries = p.entries();
    entries.emplace_back("model", cfg.model);
    entries.emplace_back("dataset", cfg.dataset);
    write_manifest(cfg.output, "train", entries, cfg.seed, {cfg.input});
}

void cmd_evaluate(const RunConfig &cfg) {
    const auto p = cfg.pipeline();
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    evaluation_run(bundle, p, cfg.output);
    write_manifest(cfg.output, "evaluate", p.entries(), cfg.seed, {cfg.input});
}

void cmd_cases(const RunConfig &cfg) {
    const auto p = cfg.pipeline();
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    std::vector<DatasetResult> results;
    for (const auto &name : datasets_of(bundle, p)) {
        const auto [train, test] = prepare_split(dataset_matrix(bundle, name), p);
        auto forest = p.forest;
        forest.seed = p.seed;
        const std::vector<ModelPredictions> preds{{"LR", train_logistic(train, p.logistic).predict(test)},
                                                  {"RF", train_random_forest(train, forest).predict(test)}};
        DatasetResult r;
        r.dataset = name;
        r.cases = categorize_cases(preds, test.ids(), test.time_steps(), test.labels());
        results.push_back(std::move(r));
    }
    {
        auto f = open_out(cfg.output / "cases_by_timestep.csv");
        write_cases_csv(f, results);
    }
    {
        auto f = open_out(cfg.output / "cases_summary.csv");
        f << "dataset,models,EASY,HARD,AVERAGE\n";
        for (const auto &r : results)
            f << fmt::format("{},{},{},{},{}\n", r.dataset, fmt::join(r.cases.models, "+"),
                             r.cases.count(CaseBreakdown::Category::easy), r.cases.count(CaseBreakdown::Category::hard),
                             r.cases.count(CaseBreakdown::Category::average));
    }
    write_manifest(cfg.output, "cases", p.entries(), cfg.seed, {cfg.input});
}

void cmd_refine(const RunConfig &cfg) {
    const auto p = cfg.pipeline();
    require_input(cfg);
    prepare_output(cfg);
    const auto bundle = load_bundle(cfg.input);
    std::vector<DatasetResult> results;
    for (const auto &name : datasets_of(bundle, p))
        results.push_back(evaluate_dataset(name, dataset_matrix(bundle, name), p));
    {
        auto f = open_out(cfg.output / "importance.csv");
        write_importance_csv(f, results);
    }
    {
        auto f = open_out(cfg.output / "refinement.csv");
        write_refinement_csv(f, results, p.refine);
    }
    {
        auto f = open_out(cfg.output / "metrics.csv");
        write_metrics_csv(f, results);
    }
    write_manifest(cfg.output, "refine", p.entries(), cfg.seed, {cfg.input});
}

// ---------------------------------------------------------------- synth

void cmd_synth(const RunConfig &cfg) {
    prepare_output(cfg);
    auto chain_cfg = cfg.chain;
    chain_cfg.seed = cfg.seed;
    const auto chain = generate_chain(chain_cfg);
    {
        auto f = open_out(cfg.output / "chain.jsonl");
        write_raw_transactions(f, chain.txs);
    }
    {
        auto f = open_out(cfg.output / "txs_classes.csv");
        f << "txId,class\n";
        for (const auto &[id, l] : chain.truth.tx_labels)
            f << id.str() << ',' << code_of(l) << '\n';
    }
    {
        auto f = open_out(cfg.output / "users.csv");
        f << "user,address,class\n";
        for (std::size_t u = 0; u < chain.truth.users.size(); ++u)
            for (const auto &a : chain.truth.users[u])
                f << fmt::format("{},{},{}\n", u, a.str(), chain.truth.user_illicit[u] ? 1 : 2);
    }
    const auto &c = chain_cfg;
    write_manifest(cfg.output, "synth",
                   {{"n_time_steps", std::to_string(c.n_time_steps)},
                    {"blocks_per_step", std::to_string(c.blocks_per_step)},
                    {"n_users", std::to_string(c.n_users)},
                    {"addresses_per_user", fmt::format("{}-{}", c.min_addresses_per_user, c.max_addresses_per_user)},
                    {"n_payments", std::to_string(c.n_payments)},
                    {"illicit_user_fraction", fmt::format("{}", c.illicit_user_fraction)},
                    {"unknown_fraction", fmt::format("{}", c.unknown_fraction)},
                    {"separation", fmt::format("{}", c.separation)},
                    {"illicit_fee_multiplier", fmt::format("{}", c.illicit_fee_multiplier)},
                    {"illicit_fan_out", std::to_string(c.illicit_fan_out)},
                    {"illicit_isolation", fmt::format("{}", c.illicit_isolation)},
                    {"burst_length", std::to_string(c.burst_length)},
                    {"cospend_rate", fmt::format("{}", c.cospend_rate)},
                    {"fee_drift_per_step", fmt::format("{}", c.fee_drift_per_step)}},
                   cfg.seed, {});
}

} // namespace chainsleuth
