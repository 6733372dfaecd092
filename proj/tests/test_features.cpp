#include <chainsleuth/features.hpp>
#include <chainsleuth/ingest.hpp>
#include <chainsleuth/synth.hpp>

#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace chainsleuth;

namespace {

std::unordered_map<std::string, ClassLabel> random_labels(const std::vector<RawTransaction> &txs, std::uint64_t seed) {
    Rng rng(seed);
    std::unordered_map<std::string, ClassLabel> out;
    for (const auto &t : txs)
        if (rng.bernoulli(0.9))
            out.emplace(t.txid.str(), label_from_code(1 + static_cast<long>(rng.below(3))));
    return out;
}

// Wallet class from raw incidence: one count per (address, side, transaction).
std::map<std::string, ClassLabel> oracle_wallet_classes(const std::vector<RawTransaction> &txs,
                                                        const std::unordered_map<std::string, ClassLabel> &cls) {
    std::map<std::string, std::array<long long, 4>> counts;
    for (const auto &t : txs) {
        auto it = cls.find(t.txid.str());
        const int c = it == cls.end() ? 3 : code_of(it->second);
        std::set<std::string> ins, outs;
        for (const auto &io : t.inputs)
            ins.insert(io.address.str());
        for (const auto &io : t.outputs)
            outs.insert(io.address.str());
        for (const auto &a : ins)
            ++counts[a][c];
        for (const auto &a : outs)
            ++counts[a][c];
    }
    std::map<std::string, ClassLabel> out;
    for (const auto &[a, n] : counts)
        out[a] = oracle::wallet_label(n[1], n[2], n[3]);
    return out;
}

void check_against_oracle(const std::vector<RawTransaction> &txs,
                          const std::unordered_map<std::string, ClassLabel> &cls, std::int64_t bps) {
    const auto b = extract_bundle(txs, cls, {bps});
    const auto steps = oracle::steps_of(txs, bps);

    // transactions
    const auto aug = oracle::augmented(txs);
    REQUIRE(b.tx_records.size() == txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const auto &r = b.tx_records[i];
        CHECK(r.txid == txs[i].txid);
        CHECK(r.time_step.index == steps[i]);
        const auto want = oracle::augmented_row(aug[i]);
        for (std::size_t c = 0; c < want.size(); ++c)
            if (!oracle::close(r.augmented[c], want[c], oracle::augmented_exact_column(c)))
                FAIL_CHECK("tx " << i << " column " << augmented_tx_columns[c] << ": " << r.augmented[c] << " vs "
                                 << static_cast<double>(want[c]));
    }

    // money flow edges
    const auto par = oracle::parents(txs);
    std::multiset<std::pair<std::string, std::string>> want_edges, got_edges(b.tx_edges.edges.begin(),
                                                                             b.tx_edges.edges.end());
    for (std::size_t i = 0; i < txs.size(); ++i)
        for (auto p : par[i])
            want_edges.emplace(txs[p].txid.str(), txs[i].txid.str());
    CHECK(got_edges == want_edges);

    // wallet classes
    const auto wc = oracle_wallet_classes(txs, cls);
    REQUIRE(b.wallet_classes.size() == wc.size());
    for (const auto &[a, c] : b.wallet_classes)
        CHECK(wc.at(a.str()) == c);

    // wallet rows: one per (address, active step), cumulative over steps <= s
    std::set<std::pair<std::string, int>> want_keys;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        for (const auto &io : txs[i].inputs)
            want_keys.emplace(io.address.str(), steps[i]);
        for (const auto &io : txs[i].outputs)
            want_keys.emplace(io.address.str(), steps[i]);
    }
    std::set<std::pair<std::string, int>> got_keys;
    for (const auto &r : b.wallet_records) {
        got_keys.emplace(r.address.str(), r.time_step.index);
        const auto w = oracle::wallet(r.address.str(), txs, steps, r.time_step.index);
        const auto want = oracle::wallet_row(w, wc.at(r.address.str()));
        REQUIRE(want.size() == WalletFeatures::width);
        for (std::size_t c = 0; c < want.size(); ++c)
            if (!oracle::close(r.features[c], want[c], oracle::wallet_exact_column(c)))
                FAIL_CHECK(r.address.str() << "@" << r.time_step.index << " column " << wallet_columns[c] << ": "
                                           << r.features[c] << " vs " << static_cast<double>(want[c]));
    }
    CHECK(got_keys == want_keys);
    CHECK(got_keys.size() == b.wallet_records.size());
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("extracted features match the brute-force oracle on random scenarios") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        CAPTURE(seed);
        const auto txs = oracle::random_transactions(seed, 20 + static_cast<int>(seed * 7 % 60), 6 + static_cast<int>(seed % 9));
        check_against_oracle(txs, random_labels(txs, seed), 1 + static_cast<std::int64_t>(seed % 50));
    }
}

TEST_CASE("extracted features match the oracle on a synthetic chain") {
    ChainConfig cfg;
    cfg.seed = 4;
    cfg.n_users = 25;
    cfg.n_payments = 250;
    cfg.n_time_steps = 5;
    cfg.cospend_rate = 0.1;
    const auto chain = generate_chain(cfg);
    check_against_oracle(chain.txs, chain.truth.tx_label_map(), cfg.blocks_per_step);
}

TEST_CASE("worked amount example") {
    RawTransaction tx;
    tx.txid = TxId("t1");
    tx.inputs = {{Address("a"), BtcAmount::parse("1.5")}, {Address("b"), BtcAmount::parse("1.27289994")}};
    tx.outputs = {{Address("c"), BtcAmount::parse("2.77279994")}};
    tx.fee = BtcAmount::parse("0.0001");
    tx.size_bytes = 250;
    const auto f = augment_transaction(tx, {});
    CHECK(f.btc_total.to_string() == "2.77289994");
    CHECK(format_value(f.values()[5]) == "2.77279994");
    CHECK(format_value(f.values()[0]) == "2.77289994");
    CHECK(f.addr_in == 2);
    CHECK(f.addr_out == 1);
    CHECK(f.fees.satoshis() == 10000);
}

TEST_CASE("wallet label thresholds") {
    CHECK(wallet_label(1, 100, 0) == ClassLabel::Illicit);
    CHECK(wallet_label(0, 10, 37) == ClassLabel::Unknown);
    CHECK(wallet_label(0, 10, 38) == ClassLabel::Licit);
    CHECK(wallet_label(0, 0, 1) == ClassLabel::Licit);
    CHECK(wallet_label(0, 0, 0) == ClassLabel::Unknown);
    CHECK(wallet_label(0, 1, 0) == ClassLabel::Unknown);
    for (long long l = 0; l <= 40; ++l)
        for (long long u = 0; u <= 160; ++u)
            for (long long i : {0LL, 1LL, 3LL})
                CHECK(wallet_label(i, l, u) == oracle::wallet_label(i, l, u));
}

TEST_CASE("wallet label monotonicity") {
    Rng rng(21);
    for (int t = 0; t < 5000; ++t) {
        const auto l = static_cast<std::int64_t>(rng.below(1000));
        const auto u = static_cast<std::int64_t>(rng.below(5000));
        const auto i = static_cast<std::int64_t>(rng.below(3));
        const auto base = wallet_label(i, l, u);
        // one more illicit edge always yields Illicit
        CHECK(wallet_label(i + 1, l, u) == ClassLabel::Illicit);
        // more unknown edges never turn Licit into Unknown
        if (base == ClassLabel::Licit)
            CHECK(wallet_label(i, l, u + 1) == ClassLabel::Licit);
        // more licit edges never turn Unknown into Licit
        if (base == ClassLabel::Unknown && i == 0)
            CHECK(wallet_label(i, l + 1, u) == ClassLabel::Unknown);
    }
}

TEST_CASE("label_wallets counts both edge directions") {
    std::unordered_map<std::string, ClassLabel> cls{
        {"t1", ClassLabel::Licit}, {"t2", ClassLabel::Illicit}, {"t3", ClassLabel::Unknown}};
    EdgeList at{EdgeKind::AddrTx, {{"a", "t1"}, {"b", "t2"}, {"c", "t3"}}};
    EdgeList ta{EdgeKind::TxAddr, {{"t1", "c"}, {"t3", "d"}, {"t1", "a"}}};
    const auto labels = label_wallets(cls, at, ta);
    std::map<std::string, ClassLabel> m;
    for (const auto &[a, c] : labels)
        m[a.str()] = c;
    CHECK(m.size() == 4);
    CHECK(m["a"] == ClassLabel::Unknown); // two licit edges
    CHECK(m["b"] == ClassLabel::Illicit);
    CHECK(m["c"] == ClassLabel::Unknown); // 1 licit, 1 unknown
    CHECK(m["d"] == ClassLabel::Licit);   // unknown only
    CHECK(labels.front().first.str() == "a");
}

TEST_CASE("wallet_features rejects inactive addresses") {
    const auto txs = oracle::random_transactions(3, 30, 5);
    const auto steps = oracle::steps_of(txs, 10);
    ActivityContext ctx(txs, steps);
    try {
        wallet_features(Address("nobody"), ctx, TimeStep{49});
        FAIL("accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::unknown_address);
    }
}

TEST_CASE("time step assignment") {
    std::vector<RawTransaction> txs(4);
    const std::int64_t blocks[] = {1000, 1099, 1100, 1350};
    for (std::size_t i = 0; i < txs.size(); ++i) {
        txs[i].txid = TxId(std::to_string(i));
        txs[i].block_height = blocks[i];
    }
    txs[3].time_step = 2;
    CHECK(assign_time_steps(txs, {100}) == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("trend series and step bins") {
    FeatureMatrix m({"fees"});
    const double a[] = {1}, b[] = {3}, c[] = {10};
    m.add_row("x", 1, ClassLabel::Illicit, a);
    m.add_row("y", 1, ClassLabel::Illicit, b);
    m.add_row("z", 3, ClassLabel::Licit, c);
    const auto ill = feature_trend_series(m, "fees", ClassLabel::Illicit, 3);
    REQUIRE(ill.size() == 3);
    CHECK(*ill[0] == 2);
    CHECK(!ill[1]);
    CHECK(!ill[2]);
    const auto lic = feature_trend_series(m, "fees", ClassLabel::Licit);
    CHECK(lic.size() == 3);
    CHECK(*lic[2] == 10);

    CHECK(step_bin(1) == StepBin::one);
    CHECK(step_bin(2) == StepBin::two_to_four);
    CHECK(step_bin(4) == StepBin::two_to_four);
    CHECK(step_bin(5) == StepBin::five_plus);
}

TEST_CASE("illicit actor timeline") {
    std::vector<WalletRecord> recs;
    auto add = [&](const char *a, int s, double txs) {
        WalletRecord r;
        r.address = Address(a);
        r.time_step = TimeStep{s};
        r.features[46] = txs;
        recs.push_back(r);
    };
    add("a", 1, 1);
    add("a", 2, 3);
    add("b", 2, 1);
    add("c", 5, 1);
    std::unordered_map<std::string, ClassLabel> cls{
        {"a", ClassLabel::Illicit}, {"b", ClassLabel::Licit}, {"c", ClassLabel::Illicit}};
    const auto tl = illicit_actor_timeline(recs, cls);
    REQUIRE(tl.actors.size() == 2);
    CHECK(tl.actors[0].address.str() == "a");
    CHECK(tl.actors[0].steps == std::vector<int>{1, 2});
    CHECK(tl.actors[0].bin == StepBin::two_to_four);
    CHECK(tl.actors[1].bin == StepBin::one);
    REQUIRE(tl.per_step.size() >= 5);
    CHECK(tl.per_step[1][1] == 1);
    CHECK(tl.per_step[4][0] == 1);
    CHECK(tl.per_step[2] == std::array<std::int64_t, 3>{0, 0, 0});
}

}
