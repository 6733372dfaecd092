#pragma once

#include <chainsleuth/matrix.hpp>
#include <chainsleuth/schema.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chainsleuth {

struct TxDegrees {
    std::int64_t in = 0;
    std::int64_t out = 0;
};

AugmentedTxFeatures augment_transaction(const RawTransaction &tx, TxDegrees degrees);

// One (address, transaction) occurrence. An address on both sides of a
// transaction yields a single event with both roles set.
struct ActivityEvent {
    std::int64_t block = 0;
    int time_step = 0;
    std::uint32_t tx = 0;
    bool as_input = false;
    bool as_output = false;
    std::int64_t sent_sat = 0;
    std::int64_t received_sat = 0;
    // Distinct addresses of the transaction other than this one.
    std::vector<std::uint32_t> counterparties;
};

struct ActivityTx {
    TxId txid;
    std::int64_t block = 0;
    int time_step = 0;
    std::int64_t fee_sat = 0;
    std::int64_t btc_total_sat = 0;
};

// Per-address chronological activity (block height, ties by txid), built once
// and then read-only.
class ActivityContext {
public:
    // time_steps[i] is the bucket of txs[i].
    ActivityContext(std::span<const RawTransaction> txs, std::span<const int> time_steps);

    std::size_t address_count() const noexcept { return names_.size(); }
    const Address &address(std::uint32_t id) const { return names_[id]; }
    std::optional<std::uint32_t> find(const Address &a) const;

    const std::vector<ActivityEvent> &events(std::uint32_t id) const { return events_[id]; }
    const ActivityTx &tx(std::uint32_t i) const { return txs_[i]; }

    void set_labels(std::unordered_map<std::string, ClassLabel> labels) { labels_ = std::move(labels); }
    ClassLabel label_of(const Address &a) const;

private:
    std::vector<Address> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::vector<ActivityEvent>> events_;
    std::vector<ActivityTx> txs_;
    std::unordered_map<std::string, ClassLabel> labels_;
};

// Distinct counterparties of one event; the single place that defines
// "address interactions".
std::int64_t interaction_count(const ActivityEvent &e);

// Features over the address's activity up to and including `scope`.
// Throws unknown_address when the address has no activity by then.
WalletFeatures wallet_features(const Address &addr, const ActivityContext &ctx, TimeStep scope);

// One cumulative row per (address, active time step), addresses in first-seen order.
std::vector<WalletRecord> wallet_feature_rows(const ActivityContext &ctx);

inline constexpr std::int64_t licit_ratio_numerator = 37; // threshold 3.7 = 37/10
inline constexpr std::int64_t licit_ratio_denominator = 10;

// Illicit if any incident transaction is illicit; otherwise Licit when
// unknown/licit > 3.7 (a zero licit count with unknown > 0 counts as
// infinite), else Unknown.
ClassLabel wallet_label(std::int64_t illicit_edges, std::int64_t licit_edges, std::int64_t unknown_edges);

// Labels every address touched by an AddrTx or TxAddr edge, in first-seen order.
std::vector<std::pair<Address, ClassLabel>>
label_wallets(const std::unordered_map<std::string, ClassLabel> &tx_classes,
              const EdgeList &addr_tx_edges, const EdgeList &tx_addr_edges);

// Mean of a feature per time step over rows of one class; nullopt where the
// class has no rows. Index 0 is step 1.
std::vector<std::optional<double>> feature_trend_series(const FeatureMatrix &m, std::string_view feature,
                                                        ClassLabel cls, int n_steps = 0);

enum class StepBin { one = 0, two_to_four = 1, five_plus = 2 };
StepBin step_bin(std::size_t active_steps) noexcept;

struct ActorTimeline {
    Address address;
    std::vector<int> steps;
    std::vector<std::int64_t> txs_per_step;
    StepBin bin = StepBin::one;
};

struct IllicitTimeline {
    std::vector<ActorTimeline> actors;
    // per_step[s][bin]: illicit actors of that bin active at step s+1.
    std::vector<std::array<std::int64_t, 3>> per_step;
};

IllicitTimeline illicit_actor_timeline(std::span<const WalletRecord> records,
                                       const std::unordered_map<std::string, ClassLabel> &classes);

// Money-flow edges recovered by matching each input to the earliest unspent
// earlier output with the same address and amount.
EdgeList derive_money_flow(std::span<const RawTransaction> txs);

struct ExtractOptions {
    std::int64_t blocks_per_step = 100;
};

// Time step per transaction: explicit value when present, otherwise derived
// from block height relative to the earliest block.
std::vector<int> assign_time_steps(std::span<const RawTransaction> txs, const ExtractOptions &opt);

// Full bundle from raw transactions. Unlisted transactions are Unknown;
// legacy columns are zero.
DatasetBundle extract_bundle(std::span<const RawTransaction> txs,
                             const std::unordered_map<std::string, ClassLabel> &tx_classes,
                             const ExtractOptions &opt = {});

// ML views of the bundle tables (wallet class slot excluded).
FeatureMatrix tx_matrix(const DatasetBundle &b);
FeatureMatrix wallet_matrix(const DatasetBundle &b);

} // namespace chainsleuth
