#include "mutachain/simnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace mutachain {

std::string_view fault_name(NodeFault fault) {
    switch (fault) {
        case NodeFault::None: return "none";
        case NodeFault::WrongPListProducer: return "wrong-p-list-producer";
        case NodeFault::AttemptsUnauthorizedDelete: return "attempts-unauthorized-delete";
        case NodeFault::ServesCorruptSync: return "serves-corrupt-sync";
    }
    return "?";
}

std::optional<NodeFault> parse_fault(std::string_view name) {
    for (auto f : {NodeFault::None, NodeFault::WrongPListProducer, NodeFault::AttemptsUnauthorizedDelete,
                   NodeFault::ServesCorruptSync}) {
        if (fault_name(f) == name)
            return f;
    }
    return std::nullopt;
}

std::string_view message_name(const SimMessage& msg) {
    static constexpr std::string_view names[] = {"TxBroadcast",           "BlockAnnounce",   "SyncRequest",
                                                 "SyncPermanentResponse", "SyncFillRequest", "SyncFillResponse"};
    return names[msg.index()];
}

std::string SimEvent::to_string() const {
    std::string out = "node " + std::to_string(node) + " " + kind;
    if (!detail.empty())
        out += ": " + detail;
    return out;
}

namespace {

std::string tx_label(const Transaction& tx) {
    std::string out(kind_name(tx.kind));
    if (tx.kind == TxKind::Prepare || tx.kind == TxKind::Delete)
        out += "(" + std::to_string(tx.target_interval()) + ")";
    return out + " " + tx_id(tx).short_hex();
}

std::string bundle_label(const std::vector<RemovableBlock>& interval, const PermanentBlock& block) {
    std::size_t rems = 0;
    for (const auto& b : interval)
        rems += b.transactions.size();
    std::string out = "B_" + std::to_string(block.header.height) + " |I|=" + std::to_string(interval.size()) +
                      " rem=" + std::to_string(rems) + " body=" + std::to_string(block.transactions.size()) +
                      " P=" + std::to_string(block.header.p_list.size());
    for (const auto& tx : block.transactions)
        out += " " + tx_label(tx);
    return out;
}

std::string interval_list(const std::vector<IntervalIndex>& xs) {
    std::string out;
    for (auto x : xs)
        out += (out.empty() ? "" : ",") + std::to_string(x);
    return out;
}

}  // namespace

SimNode SimNetwork::make_node(NodeId id, NodeFault fault) const {
    MempoolConfig mcfg;
    mcfg.schedule = config_.schedule;
    mcfg.block_tx_capacity = config_.block_tx_capacity;
    return SimNode{id, fault, true, keypair_from_label("node-" + std::to_string(id)),
                   Ledger(genesis_, config_.ledger), Mempool(mcfg), {}};
}

SimNetwork::SimNetwork(SimConfig config)
    : config_(std::move(config)), genesis_(Ledger::make_genesis(config_.genesis_txs)), rng_(config_.seed) {
    if (config_.nodes == 0)
        throw std::invalid_argument("a network needs at least one node");
    if (config_.ledger.confirm_depth < 1)
        throw std::invalid_argument("confirm depth must be at least 1");
    if (config_.block_tx_capacity == 0)
        throw std::invalid_argument("block capacity must be positive");
    if (config_.tx_loss < 0.0 || config_.tx_loss > 1.0)
        throw std::invalid_argument("tx loss must be a probability");
    if (config_.proposers) {
        for (NodeId p : *config_.proposers)
            if (p >= config_.nodes)
                throw std::invalid_argument("proposer " + std::to_string(p) + " does not exist");
    }
    for (const auto& [id, f] : config_.faults)
        if (id >= config_.nodes)
            throw std::invalid_argument("fault flag for missing node " + std::to_string(id));
    for (NodeId i = 0; i < config_.nodes; ++i) {
        auto it = config_.faults.find(i);
        nodes_.push_back(make_node(i, it == config_.faults.end() ? NodeFault::None : it->second));
    }
}

std::optional<NodeId> SimNetwork::proposer_for(std::uint64_t step) const {
    if (config_.proposers) {
        if (config_.proposers->empty())
            return std::nullopt;
        return (*config_.proposers)[step % config_.proposers->size()];
    }
    return static_cast<NodeId>(step % config_.nodes);
}

void SimNetwork::broadcast(NodeId from, const SimMessage& msg) {
    const bool lossy = config_.tx_loss > 0.0 && std::holds_alternative<TxBroadcast>(msg);
    for (const auto& n : nodes_) {
        if (n.id == from || !n.online)
            continue;
        if (lossy && std::bernoulli_distribution(config_.tx_loss)(rng_))
            continue;
        queue_.push_back(Envelope{from, n.id, msg});
    }
}

Status SimNetwork::submit_client_action(NodeId node, const Transaction& tx) {
    SimNode& n = nodes_.at(node);
    Status s = n.mempool.submit(n.ledger, tx);
    if (s)
        broadcast(node, TxBroadcast{tx});
    return s;
}

std::size_t SimNetwork::deliver(StepReport& report) {
    std::vector<Envelope> batch;
    batch.swap(queue_);
    std::vector<Envelope> held;
    std::size_t delivered = 0;
    for (auto& env : batch) {
        if (isolated_.contains(env.from) || isolated_.contains(env.to)) {
            held.push_back(std::move(env));
            continue;
        }
        handle(env.to, env.from, env.msg, report);
        ++delivered;
    }
    held.insert(held.end(), std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_ = std::move(held);
    return delivered;
}

void SimNetwork::accept_bundle(SimNode& n, const std::vector<RemovableBlock>& interval, const PermanentBlock& block,
                               StepReport& report, const char* kind) {
    Status s = n.ledger.apply_bundle(interval, block);
    if (!s) {
        report.events.push_back(SimEvent{"block-rejected", n.id,
                                         "B_" + std::to_string(block.header.height) + " " + s.to_string()});
        return;
    }
    if (!interval.empty())
        n.received_intervals.insert(block.header.height);
    report.events.push_back(SimEvent{kind, n.id, bundle_label(interval, block)});
    auto pruned = n.ledger.prune_deletable();
    if (!pruned.empty())
        report.events.push_back(SimEvent{"pruned", n.id, "intervals " + interval_list(pruned)});
    n.mempool.on_block_applied(n.ledger, interval, block);
}

void SimNetwork::handle(NodeId to, NodeId from, const SimMessage& msg, StepReport& report) {
    (void)from;
    SimNode& n = nodes_.at(to);
    if (!n.online)
        return;
    if (const auto* tx = std::get_if<TxBroadcast>(&msg)) {
        (void)n.mempool.submit(n.ledger, tx->tx);
    } else if (const auto* ann = std::get_if<BlockAnnounce>(&msg)) {
        accept_bundle(n, ann->interval, ann->block, report, "applied");
    }
    // Sync messages are exchanged directly by sync_node.
}

void SimNetwork::propose(NodeId id, StepReport& report) {
    SimNode& n = nodes_.at(id);
    Candidate c = n.mempool.build_candidate(n.ledger);

    if (n.fault == NodeFault::WrongPListProducer) {
        auto& p = c.block.header.p_list;
        if (p.empty() || p.size() > 1)
            p = {n.key.pubkey};
        else
            p.clear();
        report.events.push_back(SimEvent{"fault", id, "forged P-list on B_" + std::to_string(c.block.header.height)});
    } else if (n.fault == NodeFault::AttemptsUnauthorizedDelete && n.ledger.tip_height() > 0) {
        std::vector<IntervalIndex> targets;
        for (const auto& [x, st] : n.ledger.intervals()) {
            const auto& p = n.ledger.permanent(x).header.p_list;
            if (st.state == IntervalStatus::State::Present && !n.ledger.confirmed_delete(x) &&
                std::find(p.begin(), p.end(), n.key.pubkey) == p.end())
                targets.push_back(x);
        }
        IntervalIndex x = targets.empty() ? 1 : targets[std::uniform_int_distribution<std::size_t>(
                                                    0, targets.size() - 1)(rng_)];
        auto txs = c.block.transactions;
        txs.push_back(make_delete(n.key, x));
        c.block = build_permanent_block(n.ledger, c.interval, std::move(txs));
        report.events.push_back(SimEvent{"fault", id, "inserted unauthorized Del(" + std::to_string(x) + ")"});
    }

    report.proposer = id;
    accept_bundle(n, c.interval, c.block, report, "proposed");
    broadcast(id, BlockAnnounce{c.interval, c.block});
}

StepReport SimNetwork::step(const std::vector<ClientAction>& actions) {
    StepReport report;
    report.step = step_;
    report.delivered = deliver(report);
    for (const auto& a : actions) {
        Status s = submit_client_action(a.node, a.tx);
        report.events.push_back(
            SimEvent{s ? "submitted" : "tx-rejected", a.node, tx_label(a.tx) + (s ? "" : " " + s.to_string())});
    }
    if (auto p = proposer_for(step_); p && nodes_.at(*p).online && !isolated_.contains(*p))
        propose(*p, report);
    report.digests = digests();
    ++step_;
    return report;
}

StepReport SimNetwork::drain() {
    StepReport report;
    report.step = step_;
    while (!queue_.empty()) {
        std::size_t n = deliver(report);
        report.delivered += n;
        if (n == 0)
            break;
    }
    report.digests = digests();
    return report;
}

NodeId SimNetwork::add_node(NodeFault fault) {
    NodeId id = nodes_.size();
    nodes_.push_back(make_node(id, fault));
    nodes_.back().online = false;
    return id;
}

SimMessage SimNetwork::serve(SimNode& peer, const SimMessage& request) {
    if (const auto* req = std::get_if<SyncRequest>(&request)) {
        SyncPermanentResponse resp;
        const auto& chain = peer.ledger.permanent_blocks();
        for (Height h = req->from; h < chain.size(); ++h)
            resp.blocks.push_back(chain[h]);
        return resp;
    }
    const auto& fill = std::get<SyncFillRequest>(request);
    SyncFillResponse resp;
    for (IntervalIndex x : fill.intervals) {
        auto blocks = peer.ledger.interval_blocks(x);
        if (!blocks.empty()) {
            resp.blocks[x] = std::vector<RemovableBlock>(blocks.begin(), blocks.end());
        } else if (const DeleteRecord* rec = peer.ledger.confirmed_delete(x)) {
            resp.delete_evidence[x] = rec->height;
        }
    }
    if (peer.fault == NodeFault::ServesCorruptSync) {
        for (auto& [x, blocks] : resp.blocks) {
            if (!blocks.empty() && !blocks.front().transactions.empty()) {
                blocks.front().transactions.pop_back();
                break;
            }
        }
    }
    return resp;
}

SyncReport SimNetwork::sync_node(NodeId late, std::optional<NodeId> peer_id) {
    SyncReport report;
    report.node = late;
    SimNode& node = nodes_.at(late);
    if (!peer_id) {
        for (const auto& n : nodes_) {
            if (n.id == late || !n.online || !n.honest())
                continue;
            if (!peer_id || n.ledger.tip_height() > nodes_[*peer_id].ledger.tip_height())
                peer_id = n.id;
        }
    }
    if (!peer_id) {
        report.error = "no online peer to sync from";
        return report;
    }
    report.peer = *peer_id;
    SimNode& peer = nodes_.at(*peer_id);

    // Phase 1: permanent blocks only.
    SimMessage req = SyncRequest{1};
    report.trace.push_back("-> " + std::string(message_name(req)) + " from=1");
    auto perm = std::get<SyncPermanentResponse>(serve(peer, req));
    report.trace.push_back("<- SyncPermanentResponse blocks=" + std::to_string(perm.blocks.size()));

    ChainData data;
    data.permanent.push_back(node.ledger.permanent(0));
    for (auto& b : perm.blocks)
        data.permanent.push_back(std::move(b));
    const Height tip = static_cast<Height>(data.permanent.size() - 1);
    report.tip = tip;
    for (Height h = 1; h <= tip; ++h) {
        const auto& hdr = data.permanent[h].header;
        if (hdr.height != h || hdr.prev_permanent != data.permanent[h - 1].hash() ||
            hdr.tx_root != compute_tx_root(data.permanent[h].transactions)) {
            report.error = "permanent chain from peer " + std::to_string(*peer_id) + " breaks at height " +
                           std::to_string(h);
            return report;
        }
    }

    // Delete evidence first: intervals whose Delete has matured are never
    // requested.
    const auto& cfg = config_.ledger;
    std::set<IntervalIndex> skip;
    for (Height h = 1; h <= tip; ++h) {
        for (const auto& tx : data.permanent[h].transactions) {
            if (tx.kind != TxKind::Delete)
                continue;
            IntervalIndex x = tx.target_interval();
            if (x >= h || data.permanent[x].header.interval_len == 0)
                continue;
            if (tip - h >= cfg.confirm_depth && h - x >= cfg.delete_lock)
                skip.insert(x);
        }
    }
    report.skipped_deleted.assign(skip.begin(), skip.end());

    // Phase 2: fill the gaps that should still exist.
    SyncFillRequest fill;
    for (Height h = 1; h <= tip; ++h) {
        if (data.permanent[h].header.interval_len > 0 && !skip.contains(h))
            fill.intervals.push_back(h);
    }
    report.requested = fill.intervals;
    if (!fill.intervals.empty()) {
        report.trace.push_back("-> SyncFillRequest intervals=" + interval_list(fill.intervals));
        auto resp = std::get<SyncFillResponse>(serve(peer, fill));
        std::vector<IntervalIndex> got, evidence;
        for (auto& [x, blocks] : resp.blocks) {
            got.push_back(x);
            data.removable[x] = std::move(blocks);
        }
        for (const auto& [x, h] : resp.delete_evidence)
            evidence.push_back(x);
        report.trace.push_back("<- SyncFillResponse blocks=" + interval_list(got) +
                               " delete-evidence=" + interval_list(evidence));
    }

    auto replay = replay_chain(data, cfg);
    report.verification = replay.report;
    if (!replay.ledger) {
        report.error = "chain served by peer " + std::to_string(*peer_id) + " fails verification";
        return report;
    }
    node.ledger = std::move(*replay.ledger);
    for (const auto& [x, blocks] : data.removable)
        node.received_intervals.insert(x);
    node.online = true;
    report.ok = true;
    return report;
}

std::vector<Hash32> SimNetwork::digests() const {
    std::vector<Hash32> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_)
        out.push_back(n.ledger.state_digest());
    return out;
}

bool SimNetwork::honest_agree() const {
    std::optional<Hash32> first;
    for (const auto& n : nodes_) {
        if (!n.online || !n.honest())
            continue;
        Hash32 d = n.ledger.state_digest();
        if (first && *first != d)
            return false;
        first = d;
    }
    return true;
}

}  // namespace mutachain
