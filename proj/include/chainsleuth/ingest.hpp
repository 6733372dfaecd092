#pragma once

#include <chainsleuth/schema.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainsleuth {

namespace files {
inline constexpr std::string_view txs_features = "txs_features.csv";
inline constexpr std::string_view txs_edgelist = "txs_edgelist.csv";
inline constexpr std::string_view txs_classes = "txs_classes.csv";
inline constexpr std::string_view wallets_features = "wallets_features.csv";
inline constexpr std::string_view wallets_classes = "wallets_classes.csv";
inline constexpr std::string_view addr_addr = "AddrAddr_edgelist.csv";
inline constexpr std::string_view addr_tx = "AddrTx_edgelist.csv";
inline constexpr std::string_view tx_addr = "TxAddr_edgelist.csv";
inline constexpr std::string_view all[] = {txs_features, txs_edgelist, txs_classes,
                                           wallets_features, wallets_classes, addr_addr,
                                           addr_tx, tx_addr};
} // namespace files

// Reads the eight comma-separated files and enforces referential integrity.
DatasetBundle load_bundle(const std::filesystem::path &dir);

// Throws dangling_reference, duplicate_class or missing_class.
void validate_bundle(const DatasetBundle &bundle);

// Validates, then writes all eight files (overwriting).
void write_bundle(const DatasetBundle &bundle, const std::filesystem::path &dir);

// Value equality at serialization precision; NaN cells compare equal.
bool bundles_equal(const DatasetBundle &a, const DatasetBundle &b);

// Eight fractional digits; NaN becomes an empty cell.
std::string format_value(double v);

// One JSON object per line:
// {"txid":..,"block":..,"inputs":[[addr,sat],..],"outputs":[[addr,sat],..],
//  "fee_satoshis":..,"size_bytes":..[,"time_step":..]}
RawTransaction parse_raw_transaction(std::string_view line, std::size_t line_no = 1);
std::vector<RawTransaction> parse_raw_transactions(std::istream &in);
std::vector<RawTransaction> read_raw_transactions(const std::filesystem::path &file);
std::string format_raw_transaction(const RawTransaction &tx);
void write_raw_transactions(std::ostream &out, std::span<const RawTransaction> txs);

struct StepCounts {
    std::int64_t unknown = 0;
    std::int64_t illicit = 0;
    std::int64_t licit = 0;

    std::int64_t total() const noexcept { return unknown + illicit + licit; }
    bool operator==(const StepCounts &) const = default;
};

struct DistributionReport {
    // Index 0 is time step 1.
    std::vector<StepCounts> tx;
    std::vector<StepCounts> wallets;
};

// n_steps = 0 sizes the tables to the largest step present.
DistributionReport distribution_report(const DatasetBundle &bundle, int n_steps = 0);

} // namespace chainsleuth
