#pragma once

#include <chainsleuth/core.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chainsleuth {

inline constexpr std::size_t local_feature_count = 93;
inline constexpr std::size_t aggregate_feature_count = 72;

// Transaction-level features derived from the raw transaction and the
// money-flow degrees. Serialized order: btc_in (5), btc_out (5), txs_in,
// txs_out, addr_in, addr_out, btc_total, fees, size.
struct AugmentedTxFeatures {
    static constexpr std::size_t width = 17;

    FiveStats btc_in;
    FiveStats btc_out;
    std::int64_t txs_in = 0;
    std::int64_t txs_out = 0;
    std::int64_t addr_in = 0;
    std::int64_t addr_out = 0;
    BtcAmount btc_total;
    BtcAmount fees;
    std::int64_t size = 0;

    std::array<double, width> values() const;
    bool operator==(const AugmentedTxFeatures &) const = default;
};

extern const std::array<std::string_view, AugmentedTxFeatures::width> augmented_tx_columns;

// The 56 wallet-address features: nine five-stat groups followed by the
// class and ten scalars.
struct WalletFeatures {
    static constexpr std::size_t width = 56;
    static constexpr std::size_t class_slot = 45;

    FiveStats btc_transacted;
    FiveStats btc_sent;
    FiveStats btc_received;
    FiveStats fees;
    FiveStats fees_share;
    FiveStats blocks_txs;
    FiveStats blocks_input;
    FiveStats blocks_output;
    FiveStats addr_interactions;
    ClassLabel cls = ClassLabel::Unknown;
    std::int64_t txs_total = 0;
    std::int64_t txs_input = 0;
    std::int64_t txs_output = 0;
    std::int64_t timesteps = 0;
    std::int64_t lifetime_blocks = 0;
    std::int64_t block_first = 0;
    std::int64_t block_last = 0;
    std::int64_t block_first_sent = 0;
    std::int64_t block_first_receive = 0;
    std::int64_t repeat_interactions = 0;

    std::array<double, width> values() const;
    bool operator==(const WalletFeatures &) const = default;
};

extern const std::array<std::string_view, WalletFeatures::width> wallet_columns;

struct TxRecord {
    TxId txid;
    TimeStep time_step;
    // Legacy columns are opaque pass-through values; NaN marks an empty cell.
    std::vector<double> local = std::vector<double>(local_feature_count);
    std::vector<double> aggregate = std::vector<double>(aggregate_feature_count);
    std::array<double, AugmentedTxFeatures::width> augmented{};
};

struct WalletRecord {
    Address address;
    TimeStep time_step;
    std::array<double, WalletFeatures::width> features{};
};

enum class EdgeKind { TxTx, AddrAddr, AddrTx, TxAddr };

struct EdgeList {
    EdgeKind kind = EdgeKind::TxTx;
    std::vector<std::pair<std::string, std::string>> edges;
};

struct DatasetBundle {
    std::vector<TxRecord> tx_records;
    std::vector<std::pair<TxId, ClassLabel>> tx_classes;
    EdgeList tx_edges{EdgeKind::TxTx, {}};
    std::vector<WalletRecord> wallet_records;
    std::vector<std::pair<Address, ClassLabel>> wallet_classes;
    EdgeList addr_addr_edges{EdgeKind::AddrAddr, {}};
    EdgeList addr_tx_edges{EdgeKind::AddrTx, {}};
    EdgeList tx_addr_edges{EdgeKind::TxAddr, {}};

    std::unordered_map<std::string, ClassLabel> tx_class_map() const;
    std::unordered_map<std::string, ClassLabel> wallet_class_map() const;
};

// Column names of the transaction feature table, excluding id and time step.
std::vector<std::string> tx_feature_columns();
// Wallet feature columns without the class slot (the ML view).
std::vector<std::string> wallet_model_columns();

} // namespace chainsleuth
