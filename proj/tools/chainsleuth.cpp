#include <chainsleuth/commands.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <functional>

using namespace chainsleuth;

namespace {

void model_flags(CLI::App *cmd, RunConfig &cfg) {
    cmd->add_option("--seed", cfg.seed, "Master seed");
    cmd->add_option("--estimators", cfg.estimators, "Random forest trees")->capture_default_str();
    cmd->add_option("--train-steps", cfg.train_steps, "Training time steps, e.g. 1-34")->capture_default_str();
    cmd->add_option("--test-steps", cfg.test_steps, "Test time steps, e.g. 35-49")->capture_default_str();
    cmd->add_option("--ensemble", cfg.ensemble, "Ensemble members joined by '+', or 'none'")->capture_default_str();
    cmd->add_option("--ensemble-rule", cfg.rule, "conjunction, majority or disjunction")->capture_default_str();
    cmd->add_option("--refine-policy", cfg.refine_policy, "cumulative:T, top:K or drop:F")->capture_default_str();
    cmd->add_option("--permutation-repeats", cfg.permutation_repeats, "Shuffles per feature")->capture_default_str();
    cmd->add_flag("!--no-drop-column", cfg.drop_column, "Skip drop-column importance");
    cmd->add_flag("!--no-scale", cfg.scale, "Disable min-max scaling");
    cmd->add_flag("!--no-wallets", cfg.wallets, "Skip the wallet dataset");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Bitcoin transaction and wallet forensics pipeline"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::function<void(const RunConfig &)> action;

    auto io = [&](CLI::App *cmd, bool input_required = true) {
        auto *in = cmd->add_option("--input", cfg.input, "Input file or directory");
        if (input_required)
            in->required();
        cmd->add_option("--output", cfg.output, "Output directory")->required();
    };

    auto *ingest = app.add_subcommand("ingest", "Validate and normalize a dataset directory");
    io(ingest);
    ingest->callback([&] { action = cmd_ingest; });

    auto *extract = app.add_subcommand("extract", "Compute dataset tables from raw JSONL transactions");
    io(extract);
    extract->add_option("--labels", cfg.labels, "txId,class file");
    extract->add_option("--blocks-per-step", cfg.blocks_per_step, "Blocks per time step")->capture_default_str();
    extract->callback([&] { action = cmd_extract; });

    auto *graphs = app.add_subcommand("graphs", "Export the graph views and user clustering");
    io(graphs);
    graphs->add_option("--format", cfg.format, "edgelist or graphml")->capture_default_str();
    graphs->callback([&] { action = cmd_graphs; });

    auto *train = app.add_subcommand("train", "Train one model and export predictions");
    io(train);
    model_flags(train, cfg);
    train->add_option("--model", cfg.model, "rf or lr")->capture_default_str();
    train->add_option("--dataset", cfg.dataset, "tx or wallets")->capture_default_str();
    train->callback([&] { action = cmd_train; });

    auto *evaluate = app.add_subcommand("evaluate", "Full evaluation report");
    io(evaluate);
    model_flags(evaluate, cfg);
    evaluate->callback([&] { action = cmd_evaluate; });

    auto *cases = app.add_subcommand("cases", "EASY/HARD/AVERAGE case breakdown");
    io(cases);
    model_flags(cases, cfg);
    cases->callback([&] { action = cmd_cases; });

    auto *refine = app.add_subcommand("refine", "Feature importance and refined retraining");
    io(refine);
    model_flags(refine, cfg);
    refine->callback([&] { action = cmd_refine; });

    auto *synth = app.add_subcommand("synth", "Generate a synthetic chain");
    synth->add_option("--output", cfg.output, "Output directory")->required();
    synth->add_option("--seed", cfg.seed, "Generator seed");
    auto &c = cfg.chain;
    synth->add_option("--steps", c.n_time_steps, "Time steps")->capture_default_str();
    synth->add_option("--blocks-per-step", c.blocks_per_step, "Blocks per time step")->capture_default_str();
    synth->add_option("--users", c.n_users, "Users")->capture_default_str();
    synth->add_option("--min-addresses", c.min_addresses_per_user, "Minimum addresses per user")->capture_default_str();
    synth->add_option("--max-addresses", c.max_addresses_per_user, "Maximum addresses per user")->capture_default_str();
    synth->add_option("--payments", c.n_payments, "Payment transactions")->capture_default_str();
    synth->add_option("--illicit-fraction", c.illicit_user_fraction, "Share of illicit users")->capture_default_str();
    synth->add_option("--unknown-fraction", c.unknown_fraction, "Share of unlabeled licit payments")
        ->capture_default_str();
    synth->add_option("--separation", c.separation, "Illicit log-fee shift in standard deviations")
        ->capture_default_str();
    synth->add_option("--fee-multiplier", c.illicit_fee_multiplier, "Extra illicit fee factor")->capture_default_str();
    synth->add_option("--fan-out", c.illicit_fan_out, "Maximum illicit recipients")->capture_default_str();
    synth->add_option("--isolation", c.illicit_isolation, "Probability illicit users pay only illicit users")
        ->capture_default_str();
    synth->add_option("--burst", c.burst_length, "Illicit burst length")->capture_default_str();
    synth->add_option("--cospend-rate", c.cospend_rate, "Cross-user co-spend probability")->capture_default_str();
    synth->add_option("--fee-drift", c.fee_drift_per_step, "Log-fee drift per step")->capture_default_str();
    synth->callback([&] { action = cmd_synth; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }
    try {
        action(cfg);
    } catch (const chainsleuth::error &e) {
        fmt::print(stderr, "error [{}]: {}\n", errc_name(e.code()), e.what());
        return 2;
    } catch (const std::exception &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
