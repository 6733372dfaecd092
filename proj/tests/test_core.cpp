#include <chainsleuth/core.hpp>
#include <chainsleuth/matrix.hpp>
#include <chainsleuth/parallel.hpp>
#include <chainsleuth/rng.hpp>

#include "oracles.hpp"

#include <doctest.h>

#include <atomic>

using namespace chainsleuth;

TEST_SUITE("core") {

TEST_CASE("class codes") {
    CHECK(label_from_code(1) == ClassLabel::Illicit);
    CHECK(label_from_code(2) == ClassLabel::Licit);
    CHECK(label_from_code(3) == ClassLabel::Unknown);
    for (long bad : {0L, 4L, -1L}) {
        try {
            label_from_code(bad);
            FAIL("accepted " << bad);
        } catch (const error &e) {
            CHECK(e.code() == errc::unknown_class_code);
        }
    }
    CHECK(code_of(ClassLabel::Licit) == 2);
}

TEST_CASE("btc amounts are exact") {
    CHECK(BtcAmount::parse("2.77279994").satoshis() == 277279994);
    CHECK(BtcAmount::parse("2.77279994").to_string() == "2.77279994");
    CHECK(BtcAmount::parse("0.1").to_string() == "0.10000000");
    CHECK(BtcAmount::parse("5").satoshis() == 500000000);
    CHECK(BtcAmount::parse(".5").satoshis() == 50000000);
    CHECK(BtcAmount::parse("1.000000000").satoshis() == 100000000);
    CHECK(BtcAmount::from_satoshis(1).to_string() == "0.00000001");
    for (const char *bad : {"", "-1", "1.000000001", "abc", "1.2.3", "."})
        CHECK_THROWS_AS(BtcAmount::parse(bad), error);
    CHECK_THROWS_AS(BtcAmount::from_satoshis(-5), error);

    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto sat = static_cast<std::int64_t>(rng.below(2'100'000'000'000'000ULL));
        const auto a = BtcAmount::from_satoshis(sat);
        CHECK(BtcAmount::parse(a.to_string()) == a);
    }
}

TEST_CASE("token ids reject empty strings") {
    CHECK_THROWS_AS(TxId(""), error);
    CHECK(Address("x").str() == "x");
    CHECK(TxId("1") < TxId("2"));
}

TEST_CASE("five_stats") {
    std::vector<double> v{3, 1, 2};
    const auto s = five_stats(v);
    CHECK(s.total == 6);
    CHECK(s.min == 1);
    CHECK(s.max == 3);
    CHECK(s.mean == 2);
    CHECK(s.median == 2);
    const std::vector<double> even{4, 1, 3, 2};
    CHECK(five_stats(even).median == 2.5);
    try {
        five_stats(std::span<const double>{});
        FAIL("empty accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::empty_sample);
    }
    CHECK(five_stats_or_zero(std::span<const double>{}) == FiveStats{});

    const std::vector<std::int64_t> sats{100000000, 177279994};
    const auto b = five_stats_satoshis(sats);
    CHECK(BtcAmount::from_satoshis(std::llround(b.total * 1e8)).to_string() == "2.77279994");
}

TEST_CASE("five_stats is order independent and bounded") {
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(1 + rng.below(40));
        for (auto &x : v)
            x = rng.normal(0, 1e3);
        const auto a = five_stats(v);
        rng.shuffle(std::span(v));
        const auto b = five_stats(v);
        CHECK(a == b);
        CHECK(a.min <= a.mean);
        CHECK(a.mean <= a.max);
        CHECK(a.min <= a.median);
        CHECK(a.median <= a.max);
        std::vector<long double> lv(v.begin(), v.end());
        const auto o = oracle::stats(lv);
        CHECK(std::fabs(a.mean - static_cast<double>(o.mean)) <= 1e-9 * std::max(1.0, std::fabs(a.mean)));
        CHECK(a.median == static_cast<double>(o.median));
    }
}

TEST_CASE("transaction balance") {
    RawTransaction tx;
    tx.txid = TxId("t");
    tx.inputs = {{Address("a"), BtcAmount::from_satoshis(1000)}};
    tx.outputs = {{Address("b"), BtcAmount::from_satoshis(900)}};
    tx.fee = BtcAmount::from_satoshis(100);
    CHECK_NOTHROW(validate(tx));
    tx.fee = BtcAmount::from_satoshis(101);
    CHECK_NOTHROW(validate(tx)); // within one satoshi
    tx.fee = BtcAmount::from_satoshis(50);
    try {
        validate(tx);
        FAIL("imbalance accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::balance_violation);
    }
    tx.inputs.clear();
    CHECK(tx.is_coinbase());
    CHECK_NOTHROW(validate(tx));
}

TEST_CASE("feature matrix") {
    FeatureMatrix m({"a", "b", "c"});
    const double r0[] = {1, 2, 3}, r1[] = {4, std::nan(""), 6};
    m.add_row("x", 1, ClassLabel::Illicit, r0);
    m.add_row("y", 2, ClassLabel::Licit, r1);
    const double bad[] = {1, 2};
    try {
        m.add_row("z", 1, ClassLabel::Licit, bad);
        FAIL("short row accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::feature_mismatch);
    }
    CHECK(m.column_index("c") == 2);
    CHECK_THROWS_AS(m.column_index("nope"), error);
    CHECK_THROWS_AS(FeatureMatrix({"a", "a"}), error);
    const auto w = m.without_column(1);
    CHECK(w.columns() == std::vector<std::string>{"a", "c"});
    CHECK(w.at(1, 1) == 6);
    const std::size_t pick[] = {2, 0};
    const auto s = m.select_columns(pick);
    CHECK(s.columns() == std::vector<std::string>{"c", "a"});
    CHECK(s.at(0, 0) == 3);
    m.impute();
    CHECK(m.at(1, 1) == 0);
}

TEST_CASE("parallel_for visits every index once") {
    for (std::size_t workers : {1u, 2u, 7u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, workers);
        for (auto &h : hits)
            CHECK(h.load() == 1);
    }
    CHECK_THROWS(parallel_for(10, [](std::size_t i) {
        if (i == 3)
            throw std::runtime_error("boom");
    }, 3));
}

TEST_CASE("rng helpers") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.below(7) < 7);
        const auto x = r.between(-3, 3);
        CHECK(x >= -3);
        CHECK(x <= 3);
        const auto u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

}
