#include <chainsleuth/rng.hpp>
#include <chainsleuth/synth.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>

namespace chainsleuth {

void ChainConfig::validate() const {
    auto fraction = [](double x) { return x >= 0.0 && x <= 1.0; };
    const char *why = nullptr;
    if (n_time_steps < 1)
        why = "n_time_steps must be at least 1";
    else if (blocks_per_step < 1)
        why = "blocks_per_step must be positive";
    else if (n_users < 1)
        why = "n_users must be positive";
    else if (min_addresses_per_user < 1 || max_addresses_per_user < min_addresses_per_user)
        why = "addresses per user must satisfy 1 <= min <= max";
    else if (n_payments < 0)
        why = "n_payments must be non-negative";
    else if (!fraction(illicit_user_fraction) || !fraction(unknown_fraction) || !fraction(cospend_rate) ||
             !fraction(illicit_isolation))
        why = "rates and fractions must lie in [0,1]";
    else if (!(separation >= 0) || !(illicit_fee_multiplier > 0) || !std::isfinite(fee_drift_per_step))
        why = "fee parameters out of range";
    else if (illicit_fan_out < 1 || burst_length < 1)
        why = "fan-out and burst length must be positive";
    else if (funding_satoshis < 100'000)
        why = "funding_satoshis too small";
    if (why)
        throw error(errc::config_invalid, why);
}

std::unordered_map<std::string, ClassLabel> ChainTruth::tx_label_map() const {
    std::unordered_map<std::string, ClassLabel> out;
    for (const auto &[id, l] : tx_labels)
        out.emplace(id.str(), l);
    return out;
}

namespace {

constexpr double log_fee_sd = 0.5;
const double log_fee_mean = std::log(2000.0);

struct Utxo {
    std::int64_t amount;
    std::size_t tx;
};

class Generator {
public:
    explicit Generator(const ChainConfig &cfg) : cfg_(cfg), rng_(cfg.seed) {}

    SyntheticChain run() {
        make_users();
        for (std::uint32_t u = 0; u < users_.size(); ++u)
            fund(u, 0, cfg_.funding_satoshis);
        for (std::uint32_t u = 0; u < users_.size(); ++u)
            if (users_[u].size() > 1)
                consolidate(u, 1);

        const std::int64_t total_blocks = cfg_.n_time_steps * cfg_.blocks_per_step;
        const std::int64_t span = std::max<std::int64_t>(1, total_blocks - 2);
        int burst_left = 0;
        std::uint32_t burst_user = 0;
        std::int64_t burst_block = 0;
        for (int i = 0; i < cfg_.n_payments; ++i) {
            std::int64_t block = std::min(total_blocks - 1, 2 + static_cast<std::int64_t>(i) * span / std::max(1, cfg_.n_payments));
            block = std::max<std::int64_t>(block, last_block_);
            std::uint32_t sender;
            if (burst_left > 0) {
                sender = burst_user;
                block = burst_block;
                --burst_left;
            } else {
                sender = static_cast<std::uint32_t>(rng_.below(users_.size()));
                if (truth_.user_illicit[sender] && cfg_.burst_length > 1) {
                    burst_user = sender;
                    burst_block = block;
                    burst_left = cfg_.burst_length - 1;
                }
            }
            pay(sender, block);
        }
        return {std::move(txs_), std::move(truth_)};
    }

private:
    void make_users() {
        const auto n = static_cast<std::size_t>(cfg_.n_users);
        std::vector<std::uint32_t> order(n);
        for (std::uint32_t u = 0; u < n; ++u)
            order[u] = u;
        rng_.shuffle(std::span(order));
        const auto n_illicit = static_cast<std::size_t>(std::llround(cfg_.illicit_user_fraction * static_cast<double>(n)));
        truth_.user_illicit.assign(n, false);
        for (std::size_t i = 0; i < n_illicit; ++i)
            truth_.user_illicit[order[i]] = true;
        for (std::uint32_t u = 0; u < n; ++u) {
            all_users_.push_back(u);
            if (truth_.user_illicit[u])
                illicit_users_.push_back(u);
        }

        users_.resize(n);
        for (std::uint32_t u = 0; u < n; ++u) {
            const auto k = rng_.between(cfg_.min_addresses_per_user, cfg_.max_addresses_per_user);
            std::vector<Address> members;
            for (std::int64_t j = 0; j < k; ++j) {
                Address a(fmt::format("addr{:05}x{:02}", u, j));
                truth_.user_of.emplace(a.str(), u);
                truth_.address_labels.emplace_back(a, truth_.user_illicit[u] ? ClassLabel::Illicit : ClassLabel::Licit);
                users_[u].push_back(static_cast<std::uint32_t>(names_.size()));
                names_.push_back(a);
                members.push_back(std::move(a));
            }
            truth_.users.push_back(std::move(members));
        }
        wallets_.resize(names_.size());
    }

    RawTransaction &open_tx(std::int64_t block) {
        last_block_ = std::max(last_block_, block);
        RawTransaction tx;
        tx.txid = TxId(std::to_string(100'000'000 + txs_.size()));
        tx.block_height = block;
        txs_.push_back(std::move(tx));
        return txs_.back();
    }

    // Spends the oldest output of an address so FIFO matching on (address,
    // amount) recovers exactly this parent.
    void spend_oldest(RawTransaction &tx, std::uint32_t addr, std::vector<std::size_t> &parents) {
        auto &q = wallets_[addr];
        const auto u = q.front();
        q.pop_front();
        tx.inputs.push_back({names_[addr], BtcAmount::from_satoshis(u.amount)});
        if (std::find(parents.begin(), parents.end(), u.tx) == parents.end())
            parents.push_back(u.tx);
    }

    void pay_out(RawTransaction &tx, std::uint32_t addr, std::int64_t amount) {
        tx.outputs.push_back({names_[addr], BtcAmount::from_satoshis(amount)});
        wallets_[addr].push_back({amount, txs_.size() - 1});
    }

    void close_tx(RawTransaction &tx, const std::vector<std::size_t> &parents, ClassLabel label) {
        tx.size_bytes = 10 + 148 * static_cast<std::int64_t>(tx.inputs.size()) +
                        34 * static_cast<std::int64_t>(tx.outputs.size()) + rng_.between(0, 20);
        validate(tx, 0);
        for (auto p : parents)
            truth_.spend_edges.emplace_back(txs_[p].txid.str(), tx.txid.str());
        truth_.tx_labels.emplace_back(tx.txid, label);
    }

    void fund(std::uint32_t user, std::int64_t block, std::int64_t amount) {
        auto &tx = open_tx(block);
        for (auto a : users_[user])
            pay_out(tx, a, amount);
        close_tx(tx, {}, ClassLabel::Unknown);
    }

    void consolidate(std::uint32_t user, std::int64_t block) {
        auto &tx = open_tx(block);
        std::vector<std::size_t> parents;
        std::int64_t total = 0;
        for (auto a : users_[user]) {
            spend_oldest(tx, a, parents);
            total += tx.inputs.back().amount.satoshis();
        }
        const std::int64_t fee = 1000;
        const auto n = static_cast<std::int64_t>(users_[user].size());
        const std::int64_t share = (total - fee) / n;
        for (std::int64_t j = 0; j < n; ++j)
            pay_out(tx, users_[user][static_cast<std::size_t>(j)], j == 0 ? total - fee - share * (n - 1) : share);
        tx.fee = BtcAmount::from_satoshis(fee);
        close_tx(tx, parents, ClassLabel::Unknown);
    }

    std::vector<std::uint32_t> funded_addresses(std::uint32_t user) const {
        std::vector<std::uint32_t> out;
        for (auto a : users_[user])
            if (!wallets_[a].empty())
                out.push_back(a);
        return out;
    }

    std::int64_t draw_fee(bool illicit, std::int64_t block) {
        const double step = static_cast<double>(block / cfg_.blocks_per_step);
        double mu = log_fee_mean + cfg_.fee_drift_per_step * step;
        if (illicit)
            mu += cfg_.separation * log_fee_sd;
        double fee = std::exp(rng_.normal(mu, log_fee_sd));
        if (illicit)
            fee *= cfg_.illicit_fee_multiplier;
        return std::max<std::int64_t>(0, std::llround(fee));
    }

    void pay(std::uint32_t sender, std::int64_t block) {
        const bool illicit = truth_.user_illicit[sender];
        auto funded = funded_addresses(sender);
        if (funded.empty()) {
            fund(sender, block, cfg_.funding_satoshis);
            funded = funded_addresses(sender);
        }

        auto &tx = open_tx(block);
        std::vector<std::size_t> parents;
        const auto first = funded[rng_.below(funded.size())];
        spend_oldest(tx, first, parents);
        if (rng_.bernoulli(0.3)) {
            auto again = funded_addresses(sender);
            if (!again.empty())
                spend_oldest(tx, again[rng_.below(again.size())], parents);
        }
        if (cfg_.cospend_rate > 0 && users_.size() > 1 && rng_.bernoulli(cfg_.cospend_rate)) {
            auto other = static_cast<std::uint32_t>(rng_.below(users_.size() - 1));
            other += other >= sender;
            auto theirs = funded_addresses(other);
            if (!theirs.empty())
                spend_oldest(tx, theirs[rng_.below(theirs.size())], parents);
        }
        std::int64_t total = 0;
        for (const auto &in : tx.inputs)
            total += in.amount.satoshis();

        const std::int64_t fee = std::min(draw_fee(illicit, block), total / 4);
        std::int64_t spendable = total - fee;

        std::size_t k = illicit ? static_cast<std::size_t>(rng_.between(2, std::max(2, cfg_.illicit_fan_out)))
                                : 1 + rng_.below(2);
        // Candidate recipient users, sender excluded unless alone.
        const std::vector<std::uint32_t> &pool =
            illicit && illicit_users_.size() > 1 && rng_.bernoulli(cfg_.illicit_isolation) ? illicit_users_ : all_users_;
        std::vector<std::uint32_t> recipients;
        for (int tries = 0; recipients.size() < k && tries < 50; ++tries) {
            std::uint32_t u = pool[rng_.below(pool.size())];
            if (u == sender && pool.size() > 1)
                continue;
            const auto a = users_[u][rng_.below(users_[u].size())];
            if (a != first && std::find(recipients.begin(), recipients.end(), a) == recipients.end())
                recipients.push_back(a);
        }
        if (recipients.empty() || spendable < static_cast<std::int64_t>(10 * (recipients.size() + 1))) {
            // Too little to split: everything goes back to the sender.
            pay_out(tx, first, spendable);
        } else {
            const std::int64_t pay = std::max<std::int64_t>(static_cast<std::int64_t>(recipients.size()),
                                                            std::llround(static_cast<double>(spendable) *
                                                                         (0.1 + 0.5 * rng_.uniform())));
            std::vector<double> weights(recipients.size());
            double wsum = 0;
            for (auto &w : weights)
                wsum += (w = 0.2 + rng_.uniform());
            std::int64_t left = pay;
            for (std::size_t r = 0; r < recipients.size(); ++r) {
                const auto slots_after = static_cast<std::int64_t>(recipients.size() - r - 1);
                std::int64_t amt = r + 1 == recipients.size()
                                       ? left
                                       : std::clamp<std::int64_t>(std::llround(static_cast<double>(pay) * weights[r] / wsum),
                                                                  1, left - slots_after);
                pay_out(tx, recipients[r], amt);
                left -= amt;
            }
            if (spendable > pay)
                pay_out(tx, first, spendable - pay);
        }
        tx.fee = BtcAmount::from_satoshis(fee);
        ClassLabel label = ClassLabel::Illicit;
        if (!illicit)
            label = rng_.bernoulli(cfg_.unknown_fraction) ? ClassLabel::Unknown : ClassLabel::Licit;
        close_tx(tx, parents, label);
    }

    const ChainConfig &cfg_;
    Rng rng_;
    std::vector<Address> names_;
    std::vector<std::vector<std::uint32_t>> users_;
    std::vector<std::uint32_t> all_users_, illicit_users_;
    std::vector<std::deque<Utxo>> wallets_;
    std::vector<RawTransaction> txs_;
    ChainTruth truth_;
    std::int64_t last_block_ = 0;
};

} // namespace

SyntheticChain generate_chain(const ChainConfig &cfg) {
    cfg.validate();
    return Generator(cfg).run();
}

} // namespace chainsleuth
