#include <chainsleuth/graphs.hpp>
#include <chainsleuth/union_find.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <ostream>
#include <unordered_set>

namespace chainsleuth {

namespace {

std::string node_key(std::string_view name, std::uint8_t kind) {
    std::string key;
    key.reserve(name.size() + 1);
    key.push_back(static_cast<char>(kind));
    key.append(name);
    return key;
}

} // namespace

Digraph::node_id Digraph::add_node(std::string_view name, std::uint8_t kind) {
    auto [it, fresh] = index_.try_emplace(node_key(name, kind), static_cast<node_id>(names_.size()));
    if (fresh) {
        names_.emplace_back(name);
        kinds_.push_back(kind);
        out_.emplace_back();
        in_.emplace_back();
    }
    return it->second;
}

std::optional<Digraph::node_id> Digraph::find(std::string_view name, std::uint8_t kind) const {
    if (auto it = index_.find(node_key(name, kind)); it != index_.end())
        return it->second;
    return std::nullopt;
}

void Digraph::add_edge(node_id source, node_id target) {
    const auto e = static_cast<std::uint32_t>(edges_.size());
    edges_.emplace_back(source, target);
    out_[source].push_back(e);
    in_[target].push_back(e);
}

MoneyFlowGraph MoneyFlowGraph::slice(int step) const {
    MoneyFlowGraph out;
    for (Digraph::node_id n = 0; n < graph.node_count(); ++n)
        if (time_steps[n] == step) {
            out.graph.add_node(graph.name(n));
            out.time_steps.push_back(step);
        }
    for (const auto &[s, t] : graph.edges())
        if (time_steps[s] == step && time_steps[t] == step)
            out.graph.add_edge(*out.graph.find(graph.name(s)), *out.graph.find(graph.name(t)));
    return out;
}

MoneyFlowGraph build_money_flow(const EdgeList &tx_edges, std::span<const std::pair<TxId, int>> tx_time_steps) {
    MoneyFlowGraph g;
    for (const auto &[id, step] : tx_time_steps) {
        const auto before = g.graph.node_count();
        g.graph.add_node(id.str());
        if (g.graph.node_count() > before)
            g.time_steps.push_back(step);
    }
    for (const auto &[s, t] : tx_edges.edges) {
        auto a = g.graph.find(s), b = g.graph.find(t);
        if (!a)
            throw error(errc::dangling_reference, s);
        if (!b)
            throw error(errc::dangling_reference, t);
        g.graph.add_edge(*a, *b);
    }
    return g;
}

MoneyFlowGraph build_money_flow(const DatasetBundle &bundle) {
    std::vector<std::pair<TxId, int>> steps;
    steps.reserve(bundle.tx_records.size());
    for (const auto &r : bundle.tx_records)
        steps.emplace_back(r.txid, r.time_step.index);
    return build_money_flow(bundle.tx_edges, steps);
}

ActorInteractionGraph build_actor_graph(const EdgeList &addr_addr_edges) {
    ActorInteractionGraph g;
    for (const auto &[s, t] : addr_addr_edges.edges) {
        const auto a = g.graph.add_node(s);
        const auto b = g.graph.add_node(t);
        g.graph.add_edge(a, b);
        g.provenance.emplace_back();
    }
    return g;
}

ActorInteractionGraph build_actor_graph(std::span<const RawTransaction> txs) {
    ActorInteractionGraph g;
    for (const auto &tx : txs) {
        std::vector<Digraph::node_id> ins, outs;
        for (const auto &io : tx.inputs) {
            const auto n = g.graph.add_node(io.address.str());
            if (std::find(ins.begin(), ins.end(), n) == ins.end())
                ins.push_back(n);
        }
        for (const auto &io : tx.outputs) {
            const auto n = g.graph.add_node(io.address.str());
            if (std::find(outs.begin(), outs.end(), n) == outs.end())
                outs.push_back(n);
        }
        for (auto i : ins)
            for (auto o : outs) {
                g.graph.add_edge(i, o);
                g.provenance.emplace_back(tx.txid);
            }
    }
    return g;
}

std::optional<Digraph::node_id> AddressTxGraph::find_address(std::string_view a) const {
    return graph.find(a, static_cast<std::uint8_t>(NodeKind::address));
}

std::optional<Digraph::node_id> AddressTxGraph::find_tx(std::string_view t) const {
    return graph.find(t, static_cast<std::uint8_t>(NodeKind::transaction));
}

bool AddressTxGraph::is_bipartite() const {
    return std::all_of(graph.edges().begin(), graph.edges().end(),
                       [&](const auto &e) { return is_address(e.first) != is_address(e.second); });
}

AddressTxGraph build_addr_tx_graph(const EdgeList &addr_tx_edges, const EdgeList &tx_addr_edges) {
    constexpr auto addr = static_cast<std::uint8_t>(NodeKind::address);
    constexpr auto tx = static_cast<std::uint8_t>(NodeKind::transaction);
    std::unordered_set<std::string> addresses, txs;
    for (const auto &[a, t] : addr_tx_edges.edges) {
        addresses.insert(a);
        txs.insert(t);
    }
    for (const auto &[t, a] : tx_addr_edges.edges) {
        addresses.insert(a);
        txs.insert(t);
    }
    for (const auto &a : addresses)
        if (txs.contains(a))
            throw error(errc::non_bipartite_edge, fmt::format("'{}' used as both address and transaction", a));

    AddressTxGraph g;
    for (const auto &[a, t] : addr_tx_edges.edges)
        g.graph.add_edge(g.graph.add_node(a, addr), g.graph.add_node(t, tx));
    for (const auto &[t, a] : tx_addr_edges.edges)
        g.graph.add_edge(g.graph.add_node(t, tx), g.graph.add_node(a, addr));
    return g;
}

Subgraph k_hop(const Digraph &g, Digraph::node_id seed, int k, Direction dir) {
    if (seed >= g.node_count())
        throw error(errc::unknown_node, fmt::format("node #{}", seed));
    if (k < 0)
        throw error(errc::config_invalid, "k must be non-negative");
    std::vector<int> dist(g.node_count(), -1);
    std::deque<Digraph::node_id> frontier{seed};
    dist[seed] = 0;
    while (!frontier.empty()) {
        const auto n = frontier.front();
        frontier.pop_front();
        if (dist[n] == k)
            continue;
        auto visit = [&](Digraph::node_id m) {
            if (dist[m] < 0) {
                dist[m] = dist[n] + 1;
                frontier.push_back(m);
            }
        };
        if (dir != Direction::in)
            for (auto e : g.out_edges(n))
                visit(g.edges()[e].second);
        if (dir != Direction::out)
            for (auto e : g.in_edges(n))
                visit(g.edges()[e].first);
    }
    Subgraph sub;
    for (Digraph::node_id n = 0; n < g.node_count(); ++n)
        if (dist[n] >= 0)
            sub.nodes.push_back(n);
    for (const auto &[s, t] : g.edges())
        if (dist[s] >= 0 && dist[t] >= 0)
            sub.edges.emplace_back(s, t);
    return sub;
}

Subgraph k_hop(const Digraph &g, std::string_view seed, int k, Direction dir, std::uint8_t kind) {
    auto n = g.find(seed, kind);
    if (!n)
        throw error(errc::unknown_node, std::string(seed));
    return k_hop(g, *n, k, dir);
}

UserEntityGraph cluster_users(const AddressTxGraph &g) {
    const auto &dg = g.graph;
    UnionFind uf(dg.node_count());
    for (Digraph::node_id n = 0; n < dg.node_count(); ++n) {
        if (g.is_address(n))
            continue;
        const auto &ins = dg.in_edges(n);
        for (std::size_t i = 1; i < ins.size(); ++i)
            uf.unite(dg.edges()[ins[0]].first, dg.edges()[ins[i]].first);
    }

    std::unordered_map<std::uint32_t, std::vector<Digraph::node_id>> groups;
    for (Digraph::node_id n = 0; n < dg.node_count(); ++n)
        if (g.is_address(n))
            groups[uf.find(n)].push_back(n);

    UserEntityGraph out;
    out.users.reserve(groups.size());
    for (auto &[root, members] : groups) {
        std::vector<Address> user;
        user.reserve(members.size());
        for (auto m : members)
            user.emplace_back(dg.name(m));
        std::sort(user.begin(), user.end());
        out.users.push_back(std::move(user));
    }
    std::sort(out.users.begin(), out.users.end(),
              [](const auto &a, const auto &b) { return a.front() < b.front(); });
    for (std::uint32_t u = 0; u < out.users.size(); ++u)
        for (const auto &a : out.users[u])
            out.user_of.emplace(a.str(), u);

    for (Digraph::node_id n = 0; n < dg.node_count(); ++n) {
        if (g.is_address(n) || dg.in_edges(n).empty())
            continue;
        const auto from = out.user_of.at(dg.name(dg.edges()[dg.in_edges(n).front()].first));
        for (auto e : dg.out_edges(n)) {
            const auto to = out.user_of.at(dg.name(dg.edges()[e].second));
            if (from != to)
                out.edges.emplace_back(from, to);
        }
    }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

UserStats user_stats(const UserEntityGraph &g) {
    UserStats s;
    s.users = g.users.size();
    if (s.users == 0)
        return s;
    std::vector<std::size_t> sizes;
    sizes.reserve(s.users);
    std::size_t total = 0, small = 0, mid = 0, large = 0;
    for (const auto &u : g.users) {
        sizes.push_back(u.size());
        total += u.size();
        if (u.size() <= 10)
            ++small;
        else if (u.size() <= 1000)
            ++mid;
        else
            ++large;
    }
    std::sort(sizes.begin(), sizes.end());
    s.min = sizes.front();
    s.max = sizes.back();
    const auto n = sizes.size();
    s.median = n % 2 ? static_cast<double>(sizes[n / 2])
                     : (static_cast<double>(sizes[n / 2 - 1]) + static_cast<double>(sizes[n / 2])) / 2.0;
    s.mean = static_cast<double>(total) / static_cast<double>(n);
    s.share_1_10 = static_cast<double>(small) / static_cast<double>(n);
    s.share_11_1000 = static_cast<double>(mid) / static_cast<double>(n);
    s.share_1001_plus = static_cast<double>(large) / static_cast<double>(n);
    return s;
}

void write_edge_list(std::ostream &out, const Digraph &g) {
    out << "source,target\n";
    for (const auto &[s, t] : g.edges())
        out << g.name(s) << ',' << g.name(t) << '\n';
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_graphml(std::ostream &out, const Digraph &g, std::span<const NodeAttributes> attrs) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
           "  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n"
           "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
           "  <key id=\"class\" for=\"node\" attr.name=\"class\" attr.type=\"int\"/>\n"
           "  <key id=\"time_step\" for=\"node\" attr.name=\"time_step\" attr.type=\"int\"/>\n"
           "  <graph id=\"G\" edgedefault=\"directed\">\n";
    for (Digraph::node_id n = 0; n < g.node_count(); ++n) {
        out << "    <node id=\"n" << n << "\">";
        out << "<data key=\"name\">" << xml_escape(g.name(n)) << "</data>";
        out << "<data key=\"kind\">" << xml_escape(n < attrs.size() ? attrs[n].kind : "node") << "</data>";
        if (n < attrs.size() && attrs[n].label)
            out << "<data key=\"class\">" << code_of(*attrs[n].label) << "</data>";
        if (n < attrs.size() && attrs[n].time_step)
            out << "<data key=\"time_step\">" << *attrs[n].time_step << "</data>";
        out << "</node>\n";
    }
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const auto &[s, t] = g.edges()[e];
        out << "    <edge id=\"e" << e << "\" source=\"n" << s << "\" target=\"n" << t << "\"/>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

} // namespace chainsleuth
