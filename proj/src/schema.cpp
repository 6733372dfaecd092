#include <chainsleuth/schema.hpp>

#include <fmt/format.h>

namespace chainsleuth {

const std::array<std::string_view, AugmentedTxFeatures::width> augmented_tx_columns = {
    "in_BTC_total",  "in_BTC_min",  "in_BTC_max",  "in_BTC_mean",  "in_BTC_median",
    "out_BTC_total", "out_BTC_min", "out_BTC_max", "out_BTC_mean", "out_BTC_median",
    "in_txs_degree", "out_txs_degree", "num_input_addresses", "num_output_addresses",
    "total_BTC", "fees", "size",
};

const std::array<std::string_view, WalletFeatures::width> wallet_columns = {
    "btc_transacted_total", "btc_transacted_min", "btc_transacted_max", "btc_transacted_mean",
    "btc_transacted_median",
    "btc_sent_total", "btc_sent_min", "btc_sent_max", "btc_sent_mean", "btc_sent_median",
    "btc_received_total", "btc_received_min", "btc_received_max", "btc_received_mean",
    "btc_received_median",
    "fees_total", "fees_min", "fees_max", "fees_mean", "fees_median",
    "fees_as_share_total", "fees_as_share_min", "fees_as_share_max", "fees_as_share_mean",
    "fees_as_share_median",
    "blocks_btwn_txs_total", "blocks_btwn_txs_min", "blocks_btwn_txs_max", "blocks_btwn_txs_mean",
    "blocks_btwn_txs_median",
    "blocks_btwn_input_txs_total", "blocks_btwn_input_txs_min", "blocks_btwn_input_txs_max",
    "blocks_btwn_input_txs_mean", "blocks_btwn_input_txs_median",
    "blocks_btwn_output_txs_total", "blocks_btwn_output_txs_min", "blocks_btwn_output_txs_max",
    "blocks_btwn_output_txs_mean", "blocks_btwn_output_txs_median",
    "num_addr_transacted_total", "num_addr_transacted_min", "num_addr_transacted_max",
    "num_addr_transacted_mean", "num_addr_transacted_median",
    "class",
    "total_txs", "num_txs_as_sender", "num_txs_as_receiver",
    "num_timesteps_appeared_in", "lifetime_in_blocks", "first_block_appeared_in",
    "last_block_appeared_in", "first_sent_block", "first_received_block",
    "transacted_w_address_multiple",
};

namespace {

template <typename It>
It put(It out, const FiveStats &s) {
    *out++ = s.total;
    *out++ = s.min;
    *out++ = s.max;
    *out++ = s.mean;
    *out++ = s.median;
    return out;
}

} // namespace

std::array<double, AugmentedTxFeatures::width> AugmentedTxFeatures::values() const {
    std::array<double, width> v{};
    auto it = put(v.begin(), btc_in);
    it = put(it, btc_out);
    *it++ = static_cast<double>(txs_in);
    *it++ = static_cast<double>(txs_out);
    *it++ = static_cast<double>(addr_in);
    *it++ = static_cast<double>(addr_out);
    *it++ = btc_total.btc();
    *it++ = fees.btc();
    *it++ = static_cast<double>(size);
    return v;
}

std::array<double, WalletFeatures::width> WalletFeatures::values() const {
    std::array<double, width> v{};
    auto it = v.begin();
    for (const auto *g : {&btc_transacted, &btc_sent, &btc_received, &fees, &fees_share, &blocks_txs,
                          &blocks_input, &blocks_output, &addr_interactions})
        it = put(it, *g);
    *it++ = code_of(cls);
    for (auto x : {txs_total, txs_input, txs_output, timesteps, lifetime_blocks, block_first,
                   block_last, block_first_sent, block_first_receive, repeat_interactions})
        *it++ = static_cast<double>(x);
    return v;
}

std::unordered_map<std::string, ClassLabel> DatasetBundle::tx_class_map() const {
    std::unordered_map<std::string, ClassLabel> m;
    m.reserve(tx_classes.size());
    for (const auto &[id, c] : tx_classes)
        m.emplace(id.str(), c);
    return m;
}

std::unordered_map<std::string, ClassLabel> DatasetBundle::wallet_class_map() const {
    std::unordered_map<std::string, ClassLabel> m;
    m.reserve(wallet_classes.size());
    for (const auto &[a, c] : wallet_classes)
        m.emplace(a.str(), c);
    return m;
}

std::vector<std::string> tx_feature_columns() {
    std::vector<std::string> cols;
    for (std::size_t i = 1; i <= local_feature_count; ++i)
        cols.push_back(fmt::format("Local_feature_{}", i));
    for (std::size_t i = 1; i <= aggregate_feature_count; ++i)
        cols.push_back(fmt::format("Aggregate_feature_{}", i));
    for (auto c : augmented_tx_columns)
        cols.emplace_back(c);
    return cols;
}

std::vector<std::string> wallet_model_columns() {
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < WalletFeatures::width; ++i)
        if (i != WalletFeatures::class_slot)
            cols.emplace_back(wallet_columns[i]);
    return cols;
}

} // namespace chainsleuth
