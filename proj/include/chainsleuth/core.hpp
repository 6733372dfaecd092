#pragma once

#include <chainsleuth/error.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chainsleuth {

namespace detail {

// Non-empty string token with a distinct type per Tag.
template <typename Tag>
class token {
public:
    token() = default;
    explicit token(std::string value) : value_(std::move(value)) {
        if (value_.empty())
            throw error(errc::parse_error, std::string(Tag::name) + " must be non-empty");
    }

    const std::string &str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const token &) const = default;

private:
    std::string value_;
};

struct tx_id_tag { static constexpr const char *name = "TxId"; };
struct address_tag { static constexpr const char *name = "Address"; };

} // namespace detail

using TxId = detail::token<detail::tx_id_tag>;
using Address = detail::token<detail::address_tag>;

// 1-based time step index.
struct TimeStep {
    int index = 1;
    auto operator<=>(const TimeStep &) const = default;
};

inline constexpr int published_max_step = 49;

enum class ClassLabel : std::uint8_t { Illicit = 1, Licit = 2, Unknown = 3 };

ClassLabel label_from_code(long code);

constexpr int code_of(ClassLabel label) noexcept { return static_cast<int>(label); }

std::string_view label_name(ClassLabel label) noexcept;

// Fixed-point BTC amount in satoshis (1e-8 BTC).
class BtcAmount {
public:
    static constexpr std::int64_t satoshis_per_btc = 100'000'000;

    constexpr BtcAmount() = default;

    static BtcAmount from_satoshis(std::int64_t sat);
    // Exact decimal parse, up to 8 fractional digits ("2.77279994").
    static BtcAmount parse(std::string_view text);

    constexpr std::int64_t satoshis() const noexcept { return sat_; }
    double btc() const noexcept { return static_cast<double>(sat_) / satoshis_per_btc; }
    // Always 8 fractional digits, computed from the integer value.
    std::string to_string() const;

    BtcAmount operator+(BtcAmount o) const { return from_satoshis(sat_ + o.sat_); }
    BtcAmount &operator+=(BtcAmount o) { return *this = *this + o; }
    auto operator<=>(const BtcAmount &) const = default;

private:
    std::int64_t sat_ = 0;
};

struct TxIo {
    Address address;
    BtcAmount amount;
    bool operator==(const TxIo &) const = default;
};

struct RawTransaction {
    TxId txid;
    std::int64_t block_height = 0;
    std::vector<TxIo> inputs;
    std::vector<TxIo> outputs;
    BtcAmount fee;
    std::int64_t size_bytes = 1;
    // Optional explicit bucket; 0 means "derive from block height".
    int time_step = 0;

    bool is_coinbase() const noexcept { return inputs.empty(); }
    BtcAmount input_total() const;
    BtcAmount output_total() const;

    bool operator==(const RawTransaction &) const = default;
};

// Throws balance_violation when inputs != outputs + fee by more than
// `tolerance_sat`; coinbase transactions are exempt.
void validate(const RawTransaction &tx, std::int64_t tolerance_sat = 1);

struct FiveStats {
    double total = 0;
    double min = 0;
    double max = 0;
    double mean = 0;
    double median = 0;

    bool operator==(const FiveStats &) const = default;
};

FiveStats five_stats(std::span<const double> values);
// All-zero stats for an empty series.
FiveStats five_stats_or_zero(std::span<const double> values);
// Totals are accumulated in integer satoshis before conversion to BTC.
FiveStats five_stats_satoshis(std::span<const std::int64_t> sats);

} // namespace chainsleuth

template <typename Tag>
struct std::hash<chainsleuth::detail::token<Tag>> {
    std::size_t operator()(const chainsleuth::detail::token<Tag> &t) const noexcept {
        return std::hash<std::string>{}(t.str());
    }
};
