#include <chainsleuth/ingest.hpp>
#include <chainsleuth/parallel.hpp>

#include "csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace chainsleuth {

namespace fs = std::filesystem;

namespace {

ClassLabel parse_class(std::string_view cell, std::string_view file, std::size_t line_no) {
    const auto t = csv::trim(cell);
    if (t == "unknown")
        return ClassLabel::Unknown;
    long code = 0;
    if (!csv::parse_long(t, code))
        throw csv::malformed(file, line_no, fmt::format("bad class '{}'", t));
    try {
        return label_from_code(code);
    } catch (const error &) {
        throw csv::malformed(file, line_no, fmt::format("class code {} out of range", code));
    }
}

struct Table {
    std::string name;
    std::string text;
    std::vector<std::string_view> rows; // header stripped
    std::size_t width = 0;
};

// The header is mandatory. For tables whose second column is numeric in data
// rows, a numeric header cell means the header is missing.
Table read_table(const fs::path &dir, std::string_view name, std::size_t min_width,
                 std::size_t max_width, bool numeric_second_column) {
    Table t;
    t.name = std::string(name);
    t.text = csv::read_file(dir / name);
    t.rows = csv::lines(t.text);
    if (t.rows.empty())
        throw csv::malformed(name, 1, "missing header row");
    std::vector<std::string_view> cells;
    csv::split(t.rows.front(), cells);
    if (cells.size() < min_width || cells.size() > max_width)
        throw csv::malformed(name, 1, fmt::format("header has {} columns", cells.size()));
    if (numeric_second_column && csv::is_numeric(cells[1]))
        throw csv::malformed(name, 1, "missing header row");
    t.width = cells.size();
    t.rows.erase(t.rows.begin());
    return t;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const Table &t) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(t.rows.size());
    std::vector<std::string_view> cells;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        csv::split(t.rows[i], cells);
        if (cells.size() != 2)
            throw csv::malformed(t.name, i + 2, fmt::format("expected 2 columns, got {}", cells.size()));
        auto a = csv::trim(cells[0]), b = csv::trim(cells[1]);
        if (a.empty() || b.empty())
            throw csv::malformed(t.name, i + 2, "empty id");
        out.emplace_back(std::string(a), std::string(b));
    }
    return out;
}

int parse_step(std::string_view cell, std::string_view file, std::size_t line_no) {
    long step = 0;
    if (!csv::parse_long(cell, step) || step < 1)
        throw csv::malformed(file, line_no, fmt::format("bad time step '{}'", cell));
    return static_cast<int>(step);
}

void parse_values(std::span<const std::string_view> cells, std::span<double> out,
                  std::string_view file, std::size_t line_no) {
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!csv::parse_double(cells[i], out[i]))
            throw csv::malformed(file, line_no, fmt::format("bad number '{}'", cells[i]));
}

constexpr std::size_t tx_width = 2 + local_feature_count + aggregate_feature_count +
                                 AugmentedTxFeatures::width;
constexpr std::size_t wallet_width = 2 + WalletFeatures::width;

std::vector<TxRecord> parse_tx_features(const Table &t) {
    std::vector<TxRecord> out;
    out.reserve(t.rows.size());
    std::vector<std::string_view> cells;
    std::vector<double> values(tx_width - 2);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto line_no = i + 2;
        csv::split(t.rows[i], cells);
        if (cells.size() != tx_width)
            throw csv::malformed(t.name, line_no, fmt::format("expected {} columns, got {}", tx_width, cells.size()));
        TxRecord r;
        const auto id = csv::trim(cells[0]);
        if (id.empty())
            throw csv::malformed(t.name, line_no, "empty txId");
        r.txid = TxId(std::string(id));
        r.time_step = TimeStep{parse_step(cells[1], t.name, line_no)};
        parse_values(std::span(cells).subspan(2), values, t.name, line_no);
        auto it = values.begin();
        std::copy_n(it, local_feature_count, r.local.begin());
        it += local_feature_count;
        std::copy_n(it, aggregate_feature_count, r.aggregate.begin());
        it += aggregate_feature_count;
        std::copy_n(it, AugmentedTxFeatures::width, r.augmented.begin());
        out.push_back(std::move(r));
    }
    return out;
}

// Accepts our 56-column layout or a 55-column layout without the class slot.
// Repeated (address, step) rows collapse to the last one in file order.
std::vector<WalletRecord> parse_wallet_features(const Table &t) {
    const bool has_class = t.width == wallet_width;
    std::vector<WalletRecord> out;
    out.reserve(t.rows.size());
    std::map<std::pair<std::string, int>, std::size_t> seen;
    std::vector<std::string_view> cells;
    std::vector<double> values(t.width - 2);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto line_no = i + 2;
        csv::split(t.rows[i], cells);
        if (cells.size() != t.width)
            throw csv::malformed(t.name, line_no, fmt::format("expected {} columns, got {}", t.width, cells.size()));
        WalletRecord r;
        const auto addr = csv::trim(cells[0]);
        if (addr.empty())
            throw csv::malformed(t.name, line_no, "empty address");
        r.address = Address(std::string(addr));
        r.time_step = TimeStep{parse_step(cells[1], t.name, line_no)};
        parse_values(std::span(cells).subspan(2), values, t.name, line_no);
        if (has_class) {
            std::copy(values.begin(), values.end(), r.features.begin());
        } else {
            auto mid = values.begin() + WalletFeatures::class_slot;
            std::copy(values.begin(), mid, r.features.begin());
            std::copy(mid, values.end(), r.features.begin() + WalletFeatures::class_slot + 1);
            r.features[WalletFeatures::class_slot] = std::numeric_limits<double>::quiet_NaN();
        }
        auto key = std::make_pair(r.address.str(), r.time_step.index);
        if (auto f = seen.find(key); f != seen.end()) {
            out[f->second] = std::move(r);
        } else {
            seen.emplace(std::move(key), out.size());
            out.push_back(std::move(r));
        }
    }
    return out;
}

template <typename Id>
std::vector<std::pair<Id, ClassLabel>> parse_classes(const Table &t) {
    std::vector<std::pair<Id, ClassLabel>> out;
    out.reserve(t.rows.size());
    std::vector<std::string_view> cells;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        csv::split(t.rows[i], cells);
        if (cells.size() != 2)
            throw csv::malformed(t.name, i + 2, "expected 2 columns");
        const auto id = csv::trim(cells[0]);
        if (id.empty())
            throw csv::malformed(t.name, i + 2, "empty id");
        out.emplace_back(Id(std::string(id)), parse_class(cells[1], t.name, i + 2));
    }
    return out;
}

} // namespace

std::string format_value(double v) {
    if (std::isnan(v))
        return {};
    auto s = fmt::format("{:.8f}", v);
    if (s == "-0.00000000")
        s.erase(0, 1);
    return s;
}

void validate_bundle(const DatasetBundle &b) {
    std::unordered_set<std::string> txs;
    txs.reserve(b.tx_records.size());
    for (const auto &r : b.tx_records)
        if (!txs.insert(r.txid.str()).second)
            throw error(errc::malformed_row, fmt::format("duplicate txId {}", r.txid.str()));

    std::unordered_set<std::string> tx_classed;
    for (const auto &[id, c] : b.tx_classes) {
        if (!txs.contains(id.str()))
            throw error(errc::dangling_reference, fmt::format("class for unknown txId {}", id.str()));
        if (!tx_classed.insert(id.str()).second)
            throw error(errc::duplicate_class, id.str());
    }
    for (const auto &r : b.tx_records)
        if (!tx_classed.contains(r.txid.str()))
            throw error(errc::missing_class, r.txid.str());

    std::unordered_set<std::string> addrs;
    addrs.reserve(b.wallet_classes.size());
    for (const auto &[a, c] : b.wallet_classes)
        if (!addrs.insert(a.str()).second)
            throw error(errc::duplicate_class, a.str());
    for (const auto &r : b.wallet_records)
        if (!addrs.contains(r.address.str()))
            throw error(errc::missing_class, r.address.str());

    auto check = [](const EdgeList &el, const auto &left, const auto &right) {
        for (const auto &[s, t] : el.edges) {
            if (!left.contains(s))
                throw error(errc::dangling_reference, s);
            if (!right.contains(t))
                throw error(errc::dangling_reference, t);
        }
    };
    check(b.tx_edges, txs, txs);
    check(b.addr_addr_edges, addrs, addrs);
    check(b.addr_tx_edges, addrs, txs);
    check(b.tx_addr_edges, txs, addrs);
}

DatasetBundle load_bundle(const fs::path &dir) {
    for (auto name : files::all)
        if (!fs::is_regular_file(dir / name))
            throw error(errc::missing_file, (dir / name).string());

    DatasetBundle b;
    std::vector<std::function<void()>> jobs = {
        [&] { b.tx_records = parse_tx_features(read_table(dir, files::txs_features, tx_width, tx_width, true)); },
        [&] { b.tx_edges.edges = parse_pairs(read_table(dir, files::txs_edgelist, 2, 2, true)); },
        [&] { b.tx_classes = parse_classes<TxId>(read_table(dir, files::txs_classes, 2, 2, true)); },
        [&] {
            b.wallet_records = parse_wallet_features(
                read_table(dir, files::wallets_features, wallet_width - 1, wallet_width, true));
        },
        [&] { b.wallet_classes = parse_classes<Address>(read_table(dir, files::wallets_classes, 2, 2, true)); },
        [&] { b.addr_addr_edges.edges = parse_pairs(read_table(dir, files::addr_addr, 2, 2, false)); },
        [&] { b.addr_tx_edges.edges = parse_pairs(read_table(dir, files::addr_tx, 2, 2, true)); },
        [&] { b.tx_addr_edges.edges = parse_pairs(read_table(dir, files::tx_addr, 2, 2, false)); },
    };
    parallel_for(jobs.size(), [&](std::size_t i) { jobs[i](); });

    validate_bundle(b);

    // Layouts without a class column take it from wallets_classes.
    const auto classes = b.wallet_class_map();
    for (auto &r : b.wallet_records) {
        auto &slot = r.features[WalletFeatures::class_slot];
        if (std::isnan(slot))
            slot = code_of(classes.at(r.address.str()));
    }
    return b;
}

namespace {

class Writer {
public:
    Writer(const fs::path &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_)
            throw error(errc::io_error, path.string());
    }
    void line(std::string_view s) {
        out_ << s << '\n';
        if (!out_)
            throw error(errc::io_error, path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_pairs(const fs::path &path, std::string_view header, const EdgeList &el) {
    Writer w(path);
    w.line(header);
    for (const auto &[s, t] : el.edges)
        w.line(fmt::format("{},{}", s, t));
}

template <typename Seq>
void append_values(std::string &line, const Seq &values) {
    for (double v : values) {
        line += ',';
        line += format_value(v);
    }
}

} // namespace

void write_bundle(const DatasetBundle &b, const fs::path &dir) {
    validate_bundle(b);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw error(errc::io_error, fmt::format("{}: {}", dir.string(), ec.message()));

    {
        Writer w(dir / files::txs_features);
        std::string header = "txId,Time step";
        for (const auto &c : tx_feature_columns())
            header += "," + c;
        w.line(header);
        std::string line;
        for (const auto &r : b.tx_records) {
            line = fmt::format("{},{}", r.txid.str(), r.time_step.index);
            append_values(line, r.local);
            append_values(line, r.aggregate);
            append_values(line, r.augmented);
            w.line(line);
        }
    }
    {
        Writer w(dir / files::txs_classes);
        w.line("txId,class");
        for (const auto &[id, c] : b.tx_classes)
            w.line(fmt::format("{},{}", id.str(), code_of(c)));
    }
    write_pairs(dir / files::txs_edgelist, "txId1,txId2", b.tx_edges);
    {
        Writer w(dir / files::wallets_features);
        std::string header = "address,Time step";
        for (auto c : wallet_columns)
            header += fmt::format(",{}", c);
        w.line(header);
        std::string line;
        for (const auto &r : b.wallet_records) {
            line = fmt::format("{},{}", r.address.str(), r.time_step.index);
            append_values(line, r.features);
            w.line(line);
        }
    }
    {
        Writer w(dir / files::wallets_classes);
        w.line("address,class");
        for (const auto &[a, c] : b.wallet_classes)
            w.line(fmt::format("{},{}", a.str(), code_of(c)));
    }
    write_pairs(dir / files::addr_addr, "input_address,output_address", b.addr_addr_edges);
    write_pairs(dir / files::addr_tx, "input_address,txId", b.addr_tx_edges);
    write_pairs(dir / files::tx_addr, "txId,output_address", b.tx_addr_edges);
}

namespace {

bool same_value(double a, double b) {
    return format_value(a) == format_value(b);
}

template <typename A, typename B>
bool same_values(const A &a, const B &b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), same_value);
}

} // namespace

bool bundles_equal(const DatasetBundle &a, const DatasetBundle &b) {
    if (a.tx_records.size() != b.tx_records.size() ||
        a.wallet_records.size() != b.wallet_records.size())
        return false;
    for (std::size_t i = 0; i < a.tx_records.size(); ++i) {
        const auto &x = a.tx_records[i], &y = b.tx_records[i];
        if (x.txid != y.txid || x.time_step != y.time_step || !same_values(x.local, y.local) ||
            !same_values(x.aggregate, y.aggregate) || !same_values(x.augmented, y.augmented))
            return false;
    }
    for (std::size_t i = 0; i < a.wallet_records.size(); ++i) {
        const auto &x = a.wallet_records[i], &y = b.wallet_records[i];
        if (x.address != y.address || x.time_step != y.time_step || !same_values(x.features, y.features))
            return false;
    }
    return a.tx_classes == b.tx_classes && a.wallet_classes == b.wallet_classes &&
           a.tx_edges.edges == b.tx_edges.edges && a.addr_addr_edges.edges == b.addr_addr_edges.edges &&
           a.addr_tx_edges.edges == b.addr_tx_edges.edges && a.tx_addr_edges.edges == b.tx_addr_edges.edges;
}

RawTransaction parse_raw_transaction(std::string_view line, std::size_t line_no) {
    using nlohmann::json;
    auto fail = [&](std::string_view why) {
        return error(errc::parse_error, fmt::format("line {}: {}", line_no, why));
    };
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception &e) {
        throw fail(e.what());
    }
    if (!j.is_object())
        throw fail("record is not an object");

    auto integer = [&](const char *key, bool required) -> std::int64_t {
        auto it = j.find(key);
        if (it == j.end()) {
            if (required)
                throw fail(fmt::format("missing key '{}'", key));
            return 0;
        }
        if (!it->is_number_integer())
            throw fail(fmt::format("'{}' must be an integer", key));
        return it->get<std::int64_t>();
    };
    auto ios = [&](const char *key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_array())
            throw fail(fmt::format("'{}' must be an array", key));
        std::vector<TxIo> out;
        for (const auto &e : *it) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number_integer())
                throw fail(fmt::format("'{}' entries must be [address, satoshis]", key));
            const auto sat = e[1].get<std::int64_t>();
            if (sat < 0 || e[0].get<std::string>().empty())
                throw fail(fmt::format("bad entry in '{}'", key));
            out.push_back({Address(e[0].get<std::string>()), BtcAmount::from_satoshis(sat)});
        }
        return out;
    };

    RawTransaction tx;
    auto id = j.find("txid");
    if (id == j.end())
        throw fail("missing key 'txid'");
    if (id->is_string() && !id->get<std::string>().empty())
        tx.txid = TxId(id->get<std::string>());
    else if (id->is_number_integer())
        tx.txid = TxId(std::to_string(id->get<std::int64_t>()));
    else
        throw fail("'txid' must be a non-empty string or integer");
    tx.block_height = integer("block", true);
    tx.inputs = ios("inputs");
    tx.outputs = ios("outputs");
    const auto fee = integer("fee_satoshis", true);
    if (fee < 0)
        throw fail("negative fee");
    tx.fee = BtcAmount::from_satoshis(fee);
    tx.size_bytes = integer("size_bytes", true);
    tx.time_step = static_cast<int>(integer("time_step", false));
    if (tx.size_bytes <= 0 || tx.block_height < 0 || tx.time_step < 0)
        throw fail("size_bytes must be positive, block and time_step non-negative");
    validate(tx);
    return tx;
}

std::vector<RawTransaction> parse_raw_transactions(std::istream &in) {
    std::vector<RawTransaction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        out.push_back(parse_raw_transaction(line, line_no));
    }
    return out;
}

std::vector<RawTransaction> read_raw_transactions(const fs::path &file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw error(errc::missing_file, file.string());
    return parse_raw_transactions(in);
}

std::string format_raw_transaction(const RawTransaction &tx) {
    nlohmann::ordered_json j;
    j["txid"] = tx.txid.str();
    j["block"] = tx.block_height;
    auto ios = [](const std::vector<TxIo> &v) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto &io : v)
            arr.push_back({io.address.str(), io.amount.satoshis()});
        return arr;
    };
    j["inputs"] = ios(tx.inputs);
    j["outputs"] = ios(tx.outputs);
    j["fee_satoshis"] = tx.fee.satoshis();
    j["size_bytes"] = tx.size_bytes;
    if (tx.time_step > 0)
        j["time_step"] = tx.time_step;
    return j.dump();
}

void write_raw_transactions(std::ostream &out, std::span<const RawTransaction> txs) {
    for (const auto &tx : txs)
        out << format_raw_transaction(tx) << '\n';
}

namespace {

void bump(StepCounts &c, ClassLabel label) {
    switch (label) {
    case ClassLabel::Illicit: ++c.illicit; break;
    case ClassLabel::Licit: ++c.licit; break;
    case ClassLabel::Unknown: ++c.unknown; break;
    }
}

} // namespace

DistributionReport distribution_report(const DatasetBundle &b, int n_steps) {
    int steps = n_steps;
    for (const auto &r : b.tx_records)
        steps = std::max(steps, r.time_step.index);
    for (const auto &r : b.wallet_records)
        steps = std::max(steps, r.time_step.index);

    DistributionReport rep;
    rep.tx.resize(static_cast<std::size_t>(steps));
    rep.wallets.resize(static_cast<std::size_t>(steps));
    const auto tx_classes = b.tx_class_map();
    for (const auto &r : b.tx_records)
        bump(rep.tx[r.time_step.index - 1], tx_classes.at(r.txid.str()));
    const auto wallet_classes = b.wallet_class_map();
    for (const auto &r : b.wallet_records)
        bump(rep.wallets[r.time_step.index - 1], wallet_classes.at(r.address.str()));
    return rep;
}

} // namespace chainsleuth
