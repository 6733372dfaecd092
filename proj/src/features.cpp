#include <chainsleuth/features.hpp>
#include <chainsleuth/parallel.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

namespace chainsleuth {

AugmentedTxFeatures augment_transaction(const RawTransaction &tx, TxDegrees degrees) {
    AugmentedTxFeatures f;
    std::vector<std::int64_t> in, out;
    std::unordered_set<std::string> in_addr, out_addr;
    for (const auto &io : tx.inputs) {
        in.push_back(io.amount.satoshis());
        in_addr.insert(io.address.str());
    }
    for (const auto &io : tx.outputs) {
        out.push_back(io.amount.satoshis());
        out_addr.insert(io.address.str());
    }
    f.btc_in = five_stats_satoshis(in);
    f.btc_out = five_stats_satoshis(out);
    f.txs_in = degrees.in;
    f.txs_out = degrees.out;
    f.addr_in = static_cast<std::int64_t>(in_addr.size());
    f.addr_out = static_cast<std::int64_t>(out_addr.size());
    f.btc_total = tx.is_coinbase() ? tx.output_total() : tx.input_total();
    f.fees = tx.fee;
    f.size = tx.size_bytes;
    return f;
}

ActivityContext::ActivityContext(std::span<const RawTransaction> txs, std::span<const int> time_steps) {
    if (time_steps.size() != txs.size())
        throw error(errc::config_invalid, "one time step per transaction required");

    std::vector<std::uint32_t> order(txs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (txs[a].block_height != txs[b].block_height)
            return txs[a].block_height < txs[b].block_height;
        return txs[a].txid < txs[b].txid;
    });

    auto intern = [&](const Address &a) {
        auto [it, fresh] = index_.try_emplace(a.str(), static_cast<std::uint32_t>(names_.size()));
        if (fresh) {
            names_.push_back(a);
            events_.emplace_back();
        }
        return it->second;
    };

    txs_.reserve(txs.size());
    for (auto i : order) {
        const auto &tx = txs[i];
        const auto tx_index = static_cast<std::uint32_t>(txs_.size());
        txs_.push_back({tx.txid, tx.block_height, time_steps[i], tx.fee.satoshis(),
                        (tx.is_coinbase() ? tx.output_total() : tx.input_total()).satoshis()});

        // participants in first-seen order, with per-address aggregated amounts
        std::vector<std::uint32_t> ids;
        std::map<std::uint32_t, ActivityEvent> by_addr;
        auto touch = [&](const TxIo &io, bool input) {
            const auto id = intern(io.address);
            auto [it, fresh] = by_addr.try_emplace(id);
            if (fresh)
                ids.push_back(id);
            auto &e = it->second;
            if (input) {
                e.as_input = true;
                e.sent_sat += io.amount.satoshis();
            } else {
                e.as_output = true;
                e.received_sat += io.amount.satoshis();
            }
        };
        for (const auto &io : tx.inputs)
            touch(io, true);
        for (const auto &io : tx.outputs)
            touch(io, false);

        for (auto id : ids) {
            auto &e = by_addr[id];
            e.block = tx.block_height;
            e.time_step = time_steps[i];
            e.tx = tx_index;
            for (auto other : ids)
                if (other != id)
                    e.counterparties.push_back(other);
            events_[id].push_back(std::move(e));
        }
    }
}

std::optional<std::uint32_t> ActivityContext::find(const Address &a) const {
    if (auto it = index_.find(a.str()); it != index_.end())
        return it->second;
    return std::nullopt;
}

ClassLabel ActivityContext::label_of(const Address &a) const {
    auto it = labels_.find(a.str());
    return it == labels_.end() ? ClassLabel::Unknown : it->second;
}

std::int64_t interaction_count(const ActivityEvent &e) {
    return static_cast<std::int64_t>(e.counterparties.size());
}

namespace {

FiveStats gap_stats(const std::vector<std::int64_t> &blocks) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < blocks.size(); ++i)
        gaps.push_back(static_cast<double>(blocks[i] - blocks[i - 1]));
    return five_stats_or_zero(gaps);
}

WalletFeatures features_of(std::span<const ActivityEvent> events, const ActivityContext &ctx, ClassLabel cls) {
    WalletFeatures f;
    f.cls = cls;
    std::vector<std::int64_t> transacted, sent, received, fees;
    std::vector<double> fee_share, interactions;
    std::vector<std::int64_t> blocks, in_blocks, out_blocks;
    std::set<int> steps;
    std::map<std::uint32_t, std::int64_t> partner_txs;

    for (const auto &e : events) {
        const auto &tx = ctx.tx(e.tx);
        transacted.push_back(e.sent_sat + e.received_sat);
        blocks.push_back(e.block);
        steps.insert(e.time_step);
        interactions.push_back(static_cast<double>(interaction_count(e)));
        for (auto p : e.counterparties)
            ++partner_txs[p];
        if (e.as_input) {
            sent.push_back(e.sent_sat);
            fees.push_back(tx.fee_sat);
            fee_share.push_back(tx.btc_total_sat == 0
                                    ? 0.0
                                    : static_cast<double>(tx.fee_sat) / static_cast<double>(tx.btc_total_sat));
            in_blocks.push_back(e.block);
            ++f.txs_input;
        }
        if (e.as_output) {
            received.push_back(e.received_sat);
            out_blocks.push_back(e.block);
            ++f.txs_output;
        }
    }

    f.btc_transacted = five_stats_satoshis(transacted);
    f.btc_sent = five_stats_satoshis(sent);
    f.btc_received = five_stats_satoshis(received);
    f.fees = five_stats_satoshis(fees);
    f.fees_share = five_stats_or_zero(fee_share);
    f.blocks_txs = gap_stats(blocks);
    f.blocks_input = gap_stats(in_blocks);
    f.blocks_output = gap_stats(out_blocks);
    f.addr_interactions = five_stats_or_zero(interactions);

    f.txs_total = static_cast<std::int64_t>(events.size());
    f.timesteps = static_cast<std::int64_t>(steps.size());
    f.block_first = blocks.front();
    f.block_last = blocks.back();
    f.lifetime_blocks = f.block_last - f.block_first;
    f.block_first_sent = in_blocks.empty() ? 0 : in_blocks.front();
    f.block_first_receive = out_blocks.empty() ? 0 : out_blocks.front();
    f.repeat_interactions = std::count_if(partner_txs.begin(), partner_txs.end(),
                                          [](const auto &kv) { return kv.second >= 2; });
    return f;
}

// Events are chronological, so the in-scope events form a prefix.
std::size_t prefix_len(const std::vector<ActivityEvent> &events, int scope) {
    std::size_t n = 0;
    for (const auto &e : events)
        if (e.time_step <= scope)
            ++n;
    return n;
}

} // namespace

WalletFeatures wallet_features(const Address &addr, const ActivityContext &ctx, TimeStep scope) {
    auto id = ctx.find(addr);
    if (!id)
        throw error(errc::unknown_address, addr.str());
    const auto &events = ctx.events(*id);
    std::vector<ActivityEvent> in_scope;
    for (const auto &e : events)
        if (e.time_step <= scope.index)
            in_scope.push_back(e);
    if (in_scope.empty())
        throw error(errc::unknown_address, fmt::format("{} has no activity by step {}", addr.str(), scope.index));
    return features_of(in_scope, ctx, ctx.label_of(addr));
}

std::vector<WalletRecord> wallet_feature_rows(const ActivityContext &ctx) {
    std::vector<std::vector<WalletRecord>> per_addr(ctx.address_count());
    parallel_for(ctx.address_count(), [&](std::size_t i) {
        const auto id = static_cast<std::uint32_t>(i);
        const auto &events = ctx.events(id);
        std::set<int> steps;
        for (const auto &e : events)
            steps.insert(e.time_step);
        // Time steps need not be monotone in block order, so filter rather than slice.
        for (int s : steps) {
            std::vector<ActivityEvent> in_scope;
            in_scope.reserve(prefix_len(events, s));
            for (const auto &e : events)
                if (e.time_step <= s)
                    in_scope.push_back(e);
            WalletRecord r;
            r.address = ctx.address(id);
            r.time_step = TimeStep{s};
            r.features = features_of(in_scope, ctx, ctx.label_of(r.address)).values();
            per_addr[i].push_back(std::move(r));
        }
    });
    std::vector<WalletRecord> out;
    for (auto &v : per_addr)
        for (auto &r : v)
            out.push_back(std::move(r));
    return out;
}

ClassLabel wallet_label(std::int64_t illicit_edges, std::int64_t licit_edges, std::int64_t unknown_edges) {
    if (illicit_edges > 0)
        return ClassLabel::Illicit;
    if (licit_edges == 0)
        return unknown_edges > 0 ? ClassLabel::Licit : ClassLabel::Unknown;
    // unknown / licit > 37 / 10, in exact integer arithmetic
    return unknown_edges * licit_ratio_denominator > licit_ratio_numerator * licit_edges ? ClassLabel::Licit
                                                                                          : ClassLabel::Unknown;
}

std::vector<std::pair<Address, ClassLabel>>
label_wallets(const std::unordered_map<std::string, ClassLabel> &tx_classes, const EdgeList &addr_tx_edges,
              const EdgeList &tx_addr_edges) {
    struct Counts {
        std::int64_t illicit = 0, licit = 0, unknown = 0;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Counts> counts;
    auto add = [&](const std::string &addr, const std::string &tx) {
        auto it = tx_classes.find(tx);
        if (it == tx_classes.end())
            throw error(errc::missing_class, tx);
        auto [c, fresh] = counts.try_emplace(addr);
        if (fresh)
            order.push_back(addr);
        switch (it->second) {
        case ClassLabel::Illicit: ++c->second.illicit; break;
        case ClassLabel::Licit: ++c->second.licit; break;
        case ClassLabel::Unknown: ++c->second.unknown; break;
        }
    };
    for (const auto &[addr, tx] : addr_tx_edges.edges)
        add(addr, tx);
    for (const auto &[tx, addr] : tx_addr_edges.edges)
        add(addr, tx);

    std::vector<std::pair<Address, ClassLabel>> out;
    out.reserve(order.size());
    for (const auto &a : order) {
        const auto &c = counts[a];
        out.emplace_back(Address(a), wallet_label(c.illicit, c.licit, c.unknown));
    }
    return out;
}

std::vector<std::optional<double>> feature_trend_series(const FeatureMatrix &m, std::string_view feature,
                                                        ClassLabel cls, int n_steps) {
    const auto col = m.column_index(feature);
    int steps = n_steps;
    for (int s : m.time_steps())
        steps = std::max(steps, s);
    std::vector<double> sum(static_cast<std::size_t>(steps), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(steps), 0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (m.labels()[r] != cls)
            continue;
        const double v = m.at(r, col);
        if (std::isnan(v))
            continue;
        const auto s = static_cast<std::size_t>(m.time_steps()[r] - 1);
        sum[s] += v;
        ++count[s];
    }
    std::vector<std::optional<double>> out(static_cast<std::size_t>(steps));
    for (std::size_t s = 0; s < out.size(); ++s)
        if (count[s] > 0)
            out[s] = sum[s] / static_cast<double>(count[s]);
    return out;
}

StepBin step_bin(std::size_t active_steps) noexcept {
    if (active_steps <= 1)
        return StepBin::one;
    if (active_steps <= 4)
        return StepBin::two_to_four;
    return StepBin::five_plus;
}

IllicitTimeline illicit_actor_timeline(std::span<const WalletRecord> records,
                                       const std::unordered_map<std::string, ClassLabel> &classes) {
    constexpr std::size_t txs_total_slot = WalletFeatures::class_slot + 1;
    std::vector<std::string> order;
    std::unordered_map<std::string, std::map<int, double>> by_actor;
    int max_step = 0;
    for (const auto &r : records) {
        max_step = std::max(max_step, r.time_step.index);
        auto it = classes.find(r.address.str());
        if (it == classes.end() || it->second != ClassLabel::Illicit)
            continue;
        auto [a, fresh] = by_actor.try_emplace(r.address.str());
        if (fresh)
            order.push_back(r.address.str());
        a->second[r.time_step.index] = r.features[txs_total_slot];
    }

    IllicitTimeline out;
    out.per_step.assign(static_cast<std::size_t>(max_step), {0, 0, 0});
    for (const auto &addr : order) {
        ActorTimeline t;
        t.address = Address(addr);
        double prev = 0;
        for (const auto &[step, cumulative] : by_actor[addr]) {
            t.steps.push_back(step);
            const double v = std::isnan(cumulative) ? prev : cumulative;
            t.txs_per_step.push_back(static_cast<std::int64_t>(std::llround(std::max(0.0, v - prev))));
            prev = v;
        }
        t.bin = step_bin(t.steps.size());
        for (int s : t.steps)
            ++out.per_step[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(t.bin)];
        out.actors.push_back(std::move(t));
    }
    return out;
}

EdgeList derive_money_flow(std::span<const RawTransaction> txs) {
    std::vector<std::size_t> order(txs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return txs[a].block_height < txs[b].block_height; });

    // address -> amount -> producing transactions, oldest first
    std::unordered_map<std::string, std::map<std::int64_t, std::deque<std::size_t>>> unspent;
    EdgeList flow{EdgeKind::TxTx, {}};
    for (auto i : order) {
        const auto &tx = txs[i];
        std::vector<std::size_t> parents;
        for (const auto &io : tx.inputs) {
            auto a = unspent.find(io.address.str());
            if (a == unspent.end())
                continue;
            auto q = a->second.find(io.amount.satoshis());
            if (q == a->second.end() || q->second.empty())
                continue;
            const auto parent = q->second.front();
            q->second.pop_front();
            if (std::find(parents.begin(), parents.end(), parent) == parents.end())
                parents.push_back(parent);
        }
        for (auto p : parents)
            flow.edges.emplace_back(txs[p].txid.str(), tx.txid.str());
        for (const auto &io : tx.outputs)
            unspent[io.address.str()][io.amount.satoshis()].push_back(i);
    }
    return flow;
}

std::vector<int> assign_time_steps(std::span<const RawTransaction> txs, const ExtractOptions &opt) {
    if (opt.blocks_per_step <= 0)
        throw error(errc::config_invalid, "blocks_per_step must be positive");
    std::int64_t first = std::numeric_limits<std::int64_t>::max();
    for (const auto &tx : txs)
        first = std::min(first, tx.block_height);
    std::vector<int> steps;
    steps.reserve(txs.size());
    for (const auto &tx : txs)
        steps.push_back(tx.time_step > 0 ? tx.time_step
                                         : static_cast<int>(1 + (tx.block_height - first) / opt.blocks_per_step));
    return steps;
}

DatasetBundle extract_bundle(std::span<const RawTransaction> txs,
                             const std::unordered_map<std::string, ClassLabel> &tx_classes,
                             const ExtractOptions &opt) {
    DatasetBundle b;
    const auto steps = assign_time_steps(txs, opt);
    b.tx_edges = derive_money_flow(txs);

    std::unordered_map<std::string, TxDegrees> degrees;
    for (const auto &[s, t] : b.tx_edges.edges) {
        ++degrees[s].out;
        ++degrees[t].in;
    }

    std::unordered_map<std::string, ClassLabel> classes;
    b.tx_records.resize(txs.size());
    parallel_for(txs.size(), [&](std::size_t i) {
        auto &r = b.tx_records[i];
        r.txid = txs[i].txid;
        r.time_step = TimeStep{steps[i]};
        auto d = degrees.find(txs[i].txid.str());
        r.augmented = augment_transaction(txs[i], d == degrees.end() ? TxDegrees{} : d->second).values();
    });
    for (const auto &tx : txs) {
        auto it = tx_classes.find(tx.txid.str());
        const auto c = it == tx_classes.end() ? ClassLabel::Unknown : it->second;
        b.tx_classes.emplace_back(tx.txid, c);
        classes.emplace(tx.txid.str(), c);
    }

    for (const auto &tx : txs) {
        std::vector<std::string> ins, outs;
        for (const auto &io : tx.inputs)
            if (std::find(ins.begin(), ins.end(), io.address.str()) == ins.end())
                ins.push_back(io.address.str());
        for (const auto &io : tx.outputs)
            if (std::find(outs.begin(), outs.end(), io.address.str()) == outs.end())
                outs.push_back(io.address.str());
        for (const auto &a : ins)
            b.addr_tx_edges.edges.emplace_back(a, tx.txid.str());
        for (const auto &a : outs)
            b.tx_addr_edges.edges.emplace_back(tx.txid.str(), a);
        for (const auto &i : ins)
            for (const auto &o : outs)
                b.addr_addr_edges.edges.emplace_back(i, o);
    }

    b.wallet_classes = label_wallets(classes, b.addr_tx_edges, b.tx_addr_edges);
    ActivityContext ctx(txs, steps);
    std::unordered_map<std::string, ClassLabel> wallet_labels;
    for (const auto &[a, c] : b.wallet_classes)
        wallet_labels.emplace(a.str(), c);
    ctx.set_labels(std::move(wallet_labels));
    b.wallet_records = wallet_feature_rows(ctx);
    return b;
}

FeatureMatrix tx_matrix(const DatasetBundle &b) {
    FeatureMatrix m(tx_feature_columns());
    const auto classes = b.tx_class_map();
    std::vector<double> row;
    for (const auto &r : b.tx_records) {
        row.assign(r.local.begin(), r.local.end());
        row.insert(row.end(), r.aggregate.begin(), r.aggregate.end());
        row.insert(row.end(), r.augmented.begin(), r.augmented.end());
        m.add_row(r.txid.str(), r.time_step.index, classes.at(r.txid.str()), row);
    }
    return m;
}

FeatureMatrix wallet_matrix(const DatasetBundle &b) {
    FeatureMatrix m(wallet_model_columns());
    const auto classes = b.wallet_class_map();
    std::vector<double> row;
    for (const auto &r : b.wallet_records) {
        row.clear();
        for (std::size_t i = 0; i < r.features.size(); ++i)
            if (i != WalletFeatures::class_slot)
                row.push_back(r.features[i]);
        m.add_row(fmt::format("{}@{}", r.address.str(), r.time_step.index), r.time_step.index,
                  classes.at(r.address.str()), row);
    }
    return m;
}

} // namespace chainsleuth
