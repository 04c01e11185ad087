#include "mutachain/workload.hpp"

#include <algorithm>

namespace mutachain {

RandomWorkload::RandomWorkload(std::uint64_t seed, WorkloadConfig config)
    : seed_(seed), config_(config), rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    for (std::size_t i = 0; i < config_.entities; ++i) {
        WorkloadEntity e;
        e.name = "e" + std::to_string(i);
        e.kp = keypair_from_label("workload-" + e.name);
        e.reg = make_register(e.kp);
        e.reg_id = tx_id(e.reg);
        entities_.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < (entities_.size() + 1) / 2; ++i)
        register_sent_.insert(i);
}

std::vector<Transaction> RandomWorkload::genesis_txs() const {
    std::vector<Transaction> out;
    for (std::size_t i = 0; i < (entities_.size() + 1) / 2; ++i)
        out.push_back(entities_[i].reg);
    return out;
}

Bytes RandomWorkload::marker() {
    Encoder enc;
    enc.string("marker");
    enc.u64(seed_);
    enc.u64(counter_++);
    Hash32 h = digest(std::move(enc).take());
    return Bytes(h.bytes.begin(), h.bytes.begin() + 16);
}

std::vector<ClientAction> RandomWorkload::next(const SimNetwork& net) {
    std::vector<NodeId> nodes;
    for (const auto& n : net.nodes())
        if (n.online && n.honest())
            nodes.push_back(n.id);
    std::vector<ClientAction> actions;
    if (nodes.empty() || entities_.empty())
        return actions;

    const double total = config_.removable + config_.prepare + config_.del + config_.bogus_delete;
    std::size_t count = pick(config_.max_actions_per_step + 1);
    for (std::size_t a = 0; a < count; ++a) {
        NodeId node = nodes[pick(nodes.size())];
        const Ledger& ledger = net.node(node).ledger;
        std::size_t ei = pick(entities_.size());
        const auto& e = entities_[ei];

        if (!ledger.registration(e.kp.pubkey)) {
            if (!register_sent_.contains(ei)) {
                register_sent_.insert(ei);
                actions.push_back(ClientAction{node, e.reg});
            }
            continue;
        }

        // Intervals this entity could act on, as seen by the node.
        std::vector<IntervalIndex> prep_targets, del_targets, bogus_targets;
        for (const auto& [x, st] : ledger.intervals()) {
            if (st.state != IntervalStatus::State::Present || ledger.confirmed_delete(x))
                continue;
            const auto& p = ledger.permanent(x).header.p_list;
            bool member = std::find(p.begin(), p.end(), e.kp.pubkey) != p.end();
            if (member && p.size() > 1 && !ledger.confirmed_prepare(x, e.kp.pubkey) &&
                !prepare_sent_.contains({ei, x}))
                prep_targets.push_back(x);
            if (member && (p.size() == 1 || ledger.confirmed_prepare(x, e.kp.pubkey)))
                del_targets.push_back(x);
            if (p.size() > 1 && !ledger.confirmed_prepare(x, e.kp.pubkey))
                bogus_targets.push_back(x);
        }

        double r = std::uniform_real_distribution<double>(0.0, total)(rng_);
        if ((r -= config_.removable) < 0) {
            Transaction tx = make_removable(e.kp, e.reg_id, marker());
            payloads_[tx_id(tx)] = tx.removable_data();
            actions.push_back(ClientAction{node, std::move(tx)});
        } else if ((r -= config_.prepare) < 0) {
            if (prep_targets.empty())
                continue;
            IntervalIndex x = prep_targets[pick(prep_targets.size())];
            prepare_sent_.insert({ei, x});
            actions.push_back(ClientAction{node, make_prepare(e.kp, e.reg_id, x)});
        } else if ((r -= config_.del) < 0) {
            if (del_targets.empty())
                continue;
            IntervalIndex x = del_targets[pick(del_targets.size())];
            actions.push_back(ClientAction{node, make_delete(e.kp, x, ledger.confirmed_prepare(x, e.kp.pubkey))});
        } else {
            if (bogus_targets.empty())
                continue;
            IntervalIndex x = bogus_targets[pick(bogus_targets.size())];
            actions.push_back(ClientAction{node, make_delete(e.kp, x)});
        }
    }
    return actions;
}

}  // namespace mutachain
