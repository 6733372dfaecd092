#include <chainsleuth/core.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <numeric>

namespace chainsleuth {

std::string_view errc_name(errc code) noexcept {
    switch (code) {
    case errc::empty_sample: return "EmptySample";
    case errc::unknown_class_code: return "UnknownClassCode";
    case errc::missing_file: return "MissingFile";
    case errc::malformed_row: return "MalformedRow";
    case errc::dangling_reference: return "DanglingEdge";
    case errc::duplicate_class: return "DuplicateClass";
    case errc::missing_class: return "MissingClass";
    case errc::parse_error: return "ParseError";
    case errc::balance_violation: return "BalanceViolation";
    case errc::io_error: return "IoError";
    case errc::unknown_address: return "UnknownAddress";
    case errc::unknown_feature: return "UnknownFeature";
    case errc::unknown_node: return "UnknownNode";
    case errc::non_bipartite_edge: return "NonBipartiteEdge";
    case errc::empty_fit: return "EmptyFit";
    case errc::single_class_training_set: return "SingleClassTrainingSet";
    case errc::wrong_model_kind: return "WrongModelKind";
    case errc::feature_mismatch: return "FeatureMismatch";
    case errc::id_mismatch: return "IdMismatch";
    case errc::model_count_too_small: return "ModelCountTooSmall";
    case errc::config_invalid: return "ConfigInvalid";
    }
    return "Error";
}

ClassLabel label_from_code(long code) {
    switch (code) {
    case 1: return ClassLabel::Illicit;
    case 2: return ClassLabel::Licit;
    case 3: return ClassLabel::Unknown;
    default: throw error(errc::unknown_class_code, fmt::format("class code {}", code));
    }
}

std::string_view label_name(ClassLabel label) noexcept {
    switch (label) {
    case ClassLabel::Illicit: return "illicit";
    case ClassLabel::Licit: return "licit";
    case ClassLabel::Unknown: return "unknown";
    }
    return "?";
}

BtcAmount BtcAmount::from_satoshis(std::int64_t sat) {
    if (sat < 0)
        throw error(errc::parse_error, fmt::format("negative amount {} sat", sat));
    BtcAmount a;
    a.sat_ = sat;
    return a;
}

BtcAmount BtcAmount::parse(std::string_view text) {
    auto fail = [&] { return error(errc::parse_error, fmt::format("bad BTC amount '{}'", text)); };
    if (text.empty() || text.front() == '-')
        throw fail();
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    std::int64_t w = 0;
    if (!whole.empty()) {
        auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
        if (ec != std::errc{} || p != whole.data() + whole.size())
            throw fail();
    }
    std::int64_t frac = 0;
    if (dot != std::string_view::npos) {
        auto digits = text.substr(dot + 1);
        // Trailing zeros beyond satoshi precision are tolerated, anything else is not.
        while (digits.size() > 8 && digits.back() == '0')
            digits.remove_suffix(1);
        if (digits.size() > 8)
            throw fail();
        for (char c : digits) {
            if (c < '0' || c > '9')
                throw fail();
            frac = frac * 10 + (c - '0');
        }
        for (auto i = digits.size(); i < 8; ++i)
            frac *= 10;
        if (whole.empty() && digits.empty())
            throw fail();
    }
    return from_satoshis(w * satoshis_per_btc + frac);
}

std::string BtcAmount::to_string() const {
    return fmt::format("{}.{:08d}", sat_ / satoshis_per_btc, sat_ % satoshis_per_btc);
}

BtcAmount RawTransaction::input_total() const {
    BtcAmount t;
    for (const auto &io : inputs)
        t += io.amount;
    return t;
}

BtcAmount RawTransaction::output_total() const {
    BtcAmount t;
    for (const auto &io : outputs)
        t += io.amount;
    return t;
}

void validate(const RawTransaction &tx, std::int64_t tolerance_sat) {
    if (tx.size_bytes <= 0)
        throw error(errc::parse_error, fmt::format("{}: size_bytes must be positive", tx.txid.str()));
    if (tx.block_height < 0)
        throw error(errc::parse_error, fmt::format("{}: negative block height", tx.txid.str()));
    if (tx.is_coinbase())
        return;
    const auto in = tx.input_total().satoshis();
    const auto out = tx.output_total().satoshis() + tx.fee.satoshis();
    if (std::abs(in - out) > tolerance_sat)
        throw error(errc::balance_violation,
                    fmt::format("{}: inputs {} != outputs+fee {} (sat)", tx.txid.str(), in, out));
}

namespace {

template <typename T>
double sorted_median(const std::vector<T> &sorted) {
    const auto n = sorted.size();
    if (n % 2 == 1)
        return static_cast<double>(sorted[n / 2]);
    return (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2])) / 2.0;
}

} // namespace

FiveStats five_stats(std::span<const double> values) {
    if (values.empty())
        throw error(errc::empty_sample, "five_stats of an empty list");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    FiveStats s;
    // Summing in sorted order makes the total independent of input order.
    s.total = std::accumulate(v.begin(), v.end(), 0.0);
    s.min = v.front();
    s.max = v.back();
    s.mean = std::clamp(s.total / static_cast<double>(v.size()), s.min, s.max);
    s.median = sorted_median(v);
    return s;
}

FiveStats five_stats_or_zero(std::span<const double> values) {
    return values.empty() ? FiveStats{} : five_stats(values);
}

FiveStats five_stats_satoshis(std::span<const std::int64_t> sats) {
    if (sats.empty())
        return {};
    std::vector<std::int64_t> v(sats.begin(), sats.end());
    std::sort(v.begin(), v.end());
    const auto total = std::accumulate(v.begin(), v.end(), std::int64_t{0});
    constexpr double scale = BtcAmount::satoshis_per_btc;
    FiveStats s;
    s.total = static_cast<double>(total) / scale;
    s.min = static_cast<double>(v.front()) / scale;
    s.max = static_cast<double>(v.back()) / scale;
    s.mean = static_cast<double>(total) / static_cast<double>(v.size()) / scale;
    s.median = sorted_median(v) / scale;
    return s;
}

} // namespace chainsleuth
