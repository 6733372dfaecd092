#pragma once

#include <chainsleuth/core.hpp>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chainsleuth {

struct ChainConfig {
    std::uint64_t seed = 1;
    int n_time_steps = 20;
    std::int64_t blocks_per_step = 100;
    int n_users = 200;
    int min_addresses_per_user = 1;
    int max_addresses_per_user = 4;
    // Payment transactions, on top of funding and consolidation transactions.
    int n_payments = 5000;
    double illicit_user_fraction = 0.1;
    // Share of licit payments whose label is withheld (Unknown).
    double unknown_fraction = 0.8;
    // Shift of the illicit log-fee distribution, in standard deviations.
    double separation = 2.0;
    double illicit_fee_multiplier = 1.0;
    // Illicit payments pay 2..illicit_fan_out recipients; licit ones pay 1 or 2.
    int illicit_fan_out = 6;
    // Probability that an illicit payment goes to other illicit users only.
    double illicit_isolation = 1.0;
    // Consecutive payments an illicit sender emits in one block.
    int burst_length = 3;
    // Probability that a payment also spends an output of another user.
    double cospend_rate = 0.0;
    // Per-step drift of the log-fee mean for every user.
    double fee_drift_per_step = 0.0;
    std::int64_t funding_satoshis = 10 * BtcAmount::satoshis_per_btc;

    // Throws config_invalid.
    void validate() const;
};

struct ChainTruth {
    std::vector<std::vector<Address>> users; // members in creation order
    std::vector<bool> user_illicit;
    std::unordered_map<std::string, std::uint32_t> user_of;
    std::vector<std::pair<TxId, ClassLabel>> tx_labels;       // every generated tx
    std::vector<std::pair<Address, ClassLabel>> address_labels; // planted class of the owner
    std::vector<std::pair<std::string, std::string>> spend_edges; // parent tx -> spending tx
    std::unordered_map<std::string, ClassLabel> tx_label_map() const;
};

struct SyntheticChain {
    std::vector<RawTransaction> txs; // ascending block height
    ChainTruth truth;
};

// Single-threaded and fully determined by the config.
SyntheticChain generate_chain(const ChainConfig &cfg);

} // namespace chainsleuth
