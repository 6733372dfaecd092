#pragma once

#include <chainsleuth/schema.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chainsleuth {

// Directed multigraph over named nodes. Nodes carry a small integer kind so
// heterogeneous graphs can keep separate id namespaces.
class Digraph {
public:
    using node_id = std::uint32_t;

    node_id add_node(std::string_view name, std::uint8_t kind = 0);
    std::optional<node_id> find(std::string_view name, std::uint8_t kind = 0) const;
    void add_edge(node_id source, node_id target);

    std::size_t node_count() const noexcept { return names_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::string &name(node_id n) const { return names_[n]; }
    std::uint8_t kind(node_id n) const { return kinds_[n]; }
    const std::vector<std::pair<node_id, node_id>> &edges() const noexcept { return edges_; }

    // Edge indices leaving / entering a node, in insertion order.
    const std::vector<std::uint32_t> &out_edges(node_id n) const { return out_[n]; }
    const std::vector<std::uint32_t> &in_edges(node_id n) const { return in_[n]; }
    std::size_t out_degree(node_id n) const { return out_[n].size(); }
    std::size_t in_degree(node_id n) const { return in_[n].size(); }

private:
    std::vector<std::string> names_;
    std::vector<std::uint8_t> kinds_;
    std::unordered_map<std::string, node_id> index_;
    std::vector<std::pair<node_id, node_id>> edges_;
    std::vector<std::vector<std::uint32_t>> out_, in_;
};

struct MoneyFlowGraph {
    Digraph graph;
    std::vector<int> time_steps; // per node

    // Nodes of one time step and the edges among them.
    MoneyFlowGraph slice(int step) const;
};

MoneyFlowGraph build_money_flow(const EdgeList &tx_edges, std::span<const std::pair<TxId, int>> tx_time_steps);
MoneyFlowGraph build_money_flow(const DatasetBundle &bundle);

struct ActorInteractionGraph {
    Digraph graph;
    // Source transaction of each edge when known.
    std::vector<std::optional<TxId>> provenance;
};

ActorInteractionGraph build_actor_graph(const EdgeList &addr_addr_edges);
ActorInteractionGraph build_actor_graph(std::span<const RawTransaction> txs);

enum class NodeKind : std::uint8_t { address = 0, transaction = 1 };

struct AddressTxGraph {
    Digraph graph;

    bool is_address(Digraph::node_id n) const { return graph.kind(n) == static_cast<std::uint8_t>(NodeKind::address); }
    std::optional<Digraph::node_id> find_address(std::string_view a) const;
    std::optional<Digraph::node_id> find_tx(std::string_view t) const;
    // Every edge joins the two node kinds.
    bool is_bipartite() const;
};

// Throws non_bipartite_edge when one id is used both as an address and as a transaction.
AddressTxGraph build_addr_tx_graph(const EdgeList &addr_tx_edges, const EdgeList &tx_addr_edges);

enum class Direction { in, out, both };

struct Subgraph {
    std::vector<Digraph::node_id> nodes; // sorted
    std::vector<std::pair<Digraph::node_id, Digraph::node_id>> edges; // induced, in edge order
};

// Nodes within k hops of the seed plus their induced edges.
Subgraph k_hop(const Digraph &g, Digraph::node_id seed, int k, Direction dir);
// Name lookup; throws unknown_node.
Subgraph k_hop(const Digraph &g, std::string_view seed, int k, Direction dir, std::uint8_t kind = 0);

struct UserEntityGraph {
    // Members sorted; users ordered by their smallest member.
    std::vector<std::vector<Address>> users;
    std::unordered_map<std::string, std::uint32_t> user_of;
    // Deduplicated, sorted, no self-loops. Source user funds the target user.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

// Multiple-input clustering: input sets of one transaction belong to one
// user, transitively; output-only addresses are singleton users.
UserEntityGraph cluster_users(const AddressTxGraph &g);

struct UserStats {
    std::size_t users = 0;
    std::size_t min = 0;
    double median = 0;
    double mean = 0;
    std::size_t max = 0;
    // Fractions of users with 1-10, 11-1000 and more than 1000 addresses.
    double share_1_10 = 0;
    double share_11_1000 = 0;
    double share_1001_plus = 0;
};

UserStats user_stats(const UserEntityGraph &g);

// "source,target" lines with a header.
void write_edge_list(std::ostream &out, const Digraph &g);

struct NodeAttributes {
    std::string kind;
    std::optional<ClassLabel> label;
    std::optional<int> time_step;
};

// GraphML with kind / class / time_step node attributes.
void write_graphml(std::ostream &out, const Digraph &g, std::span<const NodeAttributes> attrs);

} // namespace chainsleuth
