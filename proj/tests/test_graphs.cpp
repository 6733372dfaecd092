#include <chainsleuth/features.hpp>
#include <chainsleuth/graphs.hpp>

#include "oracles.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace chainsleuth;

namespace {

std::set<std::set<std::string>> as_sets(const UserEntityGraph &u) {
    std::set<std::set<std::string>> out;
    for (const auto &user : u.users) {
        std::set<std::string> s;
        for (const auto &a : user)
            s.insert(a.str());
        out.insert(s);
    }
    return out;
}

} // namespace

TEST_SUITE("graphs") {

TEST_CASE("digraph basics") {
    Digraph g;
    const auto a = g.add_node("a");
    const auto b = g.add_node("b");
    CHECK(g.add_node("a") == a);
    const auto a_tx = g.add_node("a", 1);
    CHECK(a_tx != a);
    g.add_edge(a, b);
    g.add_edge(a, b);
    CHECK(g.out_degree(a) == 2);
    CHECK(g.in_degree(b) == 2);
    CHECK(g.find("a", 1) == a_tx);
    CHECK(!g.find("zzz"));
}

TEST_CASE("k-hop matches iterated relaxation") {
    Rng rng(77);
    for (int t = 0; t < 150; ++t) {
        const auto n = 1 + rng.below(60);
        Digraph g;
        for (std::size_t i = 0; i < n; ++i)
            g.add_node("n" + std::to_string(i));
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        const auto m = rng.below(3 * n);
        for (std::size_t e = 0; e < m; ++e) {
            const auto s = static_cast<std::uint32_t>(rng.below(n)), d = static_cast<std::uint32_t>(rng.below(n));
            g.add_edge(s, d);
            edges.emplace_back(s, d);
        }
        const auto seed = static_cast<std::uint32_t>(rng.below(n));
        const int k = static_cast<int>(rng.below(5));
        const std::pair<Direction, std::pair<bool, bool>> dirs[] = {
            {Direction::out, {true, false}}, {Direction::in, {false, true}}, {Direction::both, {true, true}}};
        for (const auto &[dir, fb] : dirs) {
            const auto sub = k_hop(g, seed, k, dir);
            const auto want = oracle::k_hop(n, edges, seed, k, fb.first, fb.second);
            CHECK(std::set<std::uint32_t>(sub.nodes.begin(), sub.nodes.end()) == want);
            CHECK(std::is_sorted(sub.nodes.begin(), sub.nodes.end()));
            std::size_t induced = 0;
            for (const auto &[s, d] : edges)
                induced += want.count(s) && want.count(d);
            CHECK(sub.edges.size() == induced);
        }
    }
}

TEST_CASE("k-hop errors") {
    Digraph g;
    g.add_node("x");
    try {
        k_hop(g, "missing", 1, Direction::out);
        FAIL("accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::unknown_node);
    }
    CHECK_THROWS_AS(k_hop(g, "x", -1, Direction::out), error);
    CHECK(k_hop(g, "x", 0, Direction::both).nodes.size() == 1);
}

TEST_CASE("multiple-input clustering equals the closure oracle") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        CAPTURE(seed);
        const auto txs = oracle::random_transactions(seed, 10 + static_cast<int>(seed % 80), 4 + static_cast<int>(seed % 30));
        const auto b = extract_bundle(txs, {});
        const auto g = build_addr_tx_graph(b.addr_tx_edges, b.tx_addr_edges);
        CHECK(g.is_bipartite());
        const auto users = cluster_users(g);

        std::vector<std::vector<std::string>> input_sets;
        std::set<std::string> all;
        for (const auto &t : txs) {
            std::vector<std::string> s;
            for (const auto &io : t.inputs) {
                s.push_back(io.address.str());
                all.insert(io.address.str());
            }
            for (const auto &io : t.outputs)
                all.insert(io.address.str());
            input_sets.push_back(s);
        }
        CHECK(as_sets(users) == oracle::closure(input_sets, all));

        // users are ordered by smallest member, members sorted
        for (std::size_t u = 0; u < users.users.size(); ++u) {
            CHECK(std::is_sorted(users.users[u].begin(), users.users[u].end()));
            if (u > 0)
                CHECK(users.users[u - 1].front() < users.users[u].front());
        }
        // edges: sorted, unique, no self-loops
        CHECK(std::is_sorted(users.edges.begin(), users.edges.end()));
        CHECK(std::adjacent_find(users.edges.begin(), users.edges.end()) == users.edges.end());
        for (const auto &[s, d] : users.edges)
            CHECK(s != d);
    }
}

TEST_CASE("non-bipartite ids are rejected") {
    EdgeList at{EdgeKind::AddrTx, {{"a", "t"}}};
    EdgeList ta{EdgeKind::TxAddr, {{"a", "b"}}};
    try {
        build_addr_tx_graph(at, ta);
        FAIL("accepted");
    } catch (const error &e) {
        CHECK(e.code() == errc::non_bipartite_edge);
    }
}

TEST_CASE("user stats") {
    UserEntityGraph g;
    g.users = {{Address("a")}, {Address("b"), Address("c")}, {Address("d"), Address("e"), Address("f")}};
    for (int i = 0; i < 11; ++i)
        g.users.back().push_back(Address("z" + std::to_string(i)));
    const auto s = user_stats(g);
    CHECK(s.users == 3);
    CHECK(s.min == 1);
    CHECK(s.max == 14);
    CHECK(s.median == 2);
    CHECK(s.mean == doctest::Approx(17.0 / 3));
    CHECK(s.share_1_10 == doctest::Approx(2.0 / 3));
    CHECK(s.share_11_1000 == doctest::Approx(1.0 / 3));
    CHECK(s.share_1001_plus == 0);
    CHECK(user_stats(UserEntityGraph{}).users == 0);
}

TEST_CASE("money flow graph and slices") {
    EdgeList e{EdgeKind::TxTx, {{"1", "2"}, {"2", "3"}}};
    const std::pair<TxId, int> steps[] = {{TxId("1"), 1}, {TxId("2"), 1}, {TxId("3"), 2}};
    const auto g = build_money_flow(e, steps);
    CHECK(g.graph.node_count() == 3);
    CHECK(g.graph.edge_count() == 2);
    const auto s1 = g.slice(1);
    CHECK(s1.graph.node_count() == 2);
    CHECK(s1.graph.edge_count() == 1);
    EdgeList bad{EdgeKind::TxTx, {{"1", "9"}}};
    try {
        build_money_flow(bad, steps);
        FAIL("accepted");
    } catch (const error &ex) {
        CHECK(ex.code() == errc::dangling_reference);
    }
}

TEST_CASE("actor graph from raw transactions keeps provenance") {
    const auto txs = oracle::random_transactions(8, 40, 10);
    const auto g = build_actor_graph(txs);
    CHECK(g.provenance.size() == g.graph.edge_count());
    for (const auto &p : g.provenance)
        CHECK(p.has_value());
    const auto b = extract_bundle(txs, {});
    CHECK(build_actor_graph(b.addr_addr_edges).graph.edge_count() == b.addr_addr_edges.edges.size());
}

TEST_CASE("writers") {
    Digraph g;
    const auto a = g.add_node("a&b");
    const auto t = g.add_node("t", 1);
    g.add_edge(a, t);
    std::ostringstream el;
    write_edge_list(el, g);
    CHECK(el.str() == "source,target\na&b,t\n");
    std::ostringstream xml;
    const NodeAttributes attrs[] = {{"address", ClassLabel::Illicit, std::nullopt}, {"transaction", std::nullopt, 3}};
    write_graphml(xml, g, attrs);
    const auto s = xml.str();
    CHECK(s.find("a&amp;b") != std::string::npos);
    CHECK(s.find("<edge") != std::string::npos);
    CHECK(s.find("graphml") != std::string::npos);
}

}
