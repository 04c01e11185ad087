#pragma once

// Deterministic multi-node simulation.
//
// A step delivers every message queued before it (one global FIFO queue, so
// each sender/receiver pair is FIFO too), then runs the client actions given
// for the step, then lets the scheduled proposer build a candidate, apply it
// and announce the interval together with its permanent block.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mutachain/mempool.hpp"
#include "mutachain/verify.hpp"

namespace mutachain {

using NodeId = std::size_t;

enum class NodeFault : std::uint8_t {
    None,
    WrongPListProducer,          // announces blocks whose P-list is forged
    AttemptsUnauthorizedDelete,  // slips a Delete it is not entitled to into its blocks
    ServesCorruptSync,           // tampers with removable blocks it serves to joining nodes
};

std::string_view fault_name(NodeFault fault);
std::optional<NodeFault> parse_fault(std::string_view name);

struct SimConfig {
    std::size_t nodes = 1;
    /// Proposer rotation. Unset means round-robin over all initial nodes;
    /// an empty list means nobody proposes.
    std::optional<std::vector<NodeId>> proposers;
    IntervalSchedule schedule = IntervalSchedule::constant(1);
    std::size_t block_tx_capacity = 8;
    LedgerConfig ledger;
    std::uint64_t seed = 0;
    std::map<NodeId, NodeFault> faults;
    std::vector<Transaction> genesis_txs;
    /// Probability that a transaction broadcast is lost. Blocks are never lost.
    double tx_loss = 0.0;
};

struct TxBroadcast {
    Transaction tx;
};
struct BlockAnnounce {
    std::vector<RemovableBlock> interval;
    PermanentBlock block;
};
struct SyncRequest {
    Height from = 1;
};
struct SyncPermanentResponse {
    std::vector<PermanentBlock> blocks;
};
struct SyncFillRequest {
    std::vector<IntervalIndex> intervals;
};
struct SyncFillResponse {
    std::map<IntervalIndex, std::vector<RemovableBlock>> blocks;
    /// Intervals the peer no longer holds, with the height of the block
    /// carrying their Delete.
    std::map<IntervalIndex, Height> delete_evidence;
};

using SimMessage =
    std::variant<TxBroadcast, BlockAnnounce, SyncRequest, SyncPermanentResponse, SyncFillRequest, SyncFillResponse>;

std::string_view message_name(const SimMessage& msg);

struct SimEvent {
    std::string kind;  // submitted, tx-rejected, proposed, applied, block-rejected, pruned, fault
    NodeId node = 0;
    std::string detail;

    [[nodiscard]] std::string to_string() const;
};

struct StepReport {
    std::uint64_t step = 0;
    std::optional<NodeId> proposer;
    std::size_t delivered = 0;
    std::vector<SimEvent> events;
    std::vector<Hash32> digests;  // per node, after the step

    [[nodiscard]] bool empty() const { return delivered == 0 && events.empty(); }
};

struct ClientAction {
    NodeId node = 0;
    Transaction tx;
};

struct SyncReport {
    bool ok = false;
    NodeId node = 0;
    NodeId peer = 0;
    Height tip = 0;
    std::vector<IntervalIndex> requested;        // phase 2 fill requests
    std::vector<IntervalIndex> skipped_deleted;  // covered by Delete evidence found in phase 1
    std::vector<std::string> trace;              // messages exchanged, in order
    VerificationReport verification;
    std::string error;
};

struct SimNode {
    NodeId id = 0;
    NodeFault fault = NodeFault::None;
    bool online = true;
    KeyPair key;
    Ledger ledger;
    Mempool mempool;
    /// Every interval this node ever received removable blocks for.
    std::set<IntervalIndex> received_intervals;

    [[nodiscard]] bool honest() const { return fault == NodeFault::None; }
};

class SimNetwork {
public:
    /// Throws std::invalid_argument on an unusable configuration.
    explicit SimNetwork(SimConfig config);

    [[nodiscard]] const SimConfig& config() const { return config_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] const SimNode& node(NodeId id) const { return nodes_.at(id); }
    [[nodiscard]] const std::vector<SimNode>& nodes() const { return nodes_; }
    [[nodiscard]] std::uint64_t current_step() const { return step_; }
    [[nodiscard]] std::size_t queued() const { return queue_.size(); }

    /// Submits to the node's pool and gossips on success. Throws
    /// std::out_of_range for an unknown node.
    Status submit_client_action(NodeId node, const Transaction& tx);

    StepReport step(const std::vector<ClientAction>& actions = {});
    /// Delivers until the queue is empty without proposing.
    StepReport drain();

    /// Adds an offline node holding only genesis; sync_node brings it up.
    NodeId add_node(NodeFault fault = NodeFault::None);
    /// Two-phase sync of `late` from `peer` (default: first honest online
    /// node). On success the node goes online with the replayed ledger.
    SyncReport sync_node(NodeId late, std::optional<NodeId> peer = std::nullopt);

    /// Messages to or from these nodes are held until the partition is lifted.
    void partition(std::set<NodeId> isolated) { isolated_ = std::move(isolated); }
    void heal() { isolated_.clear(); }

    [[nodiscard]] std::vector<Hash32> digests() const;
    /// True when every honest online node has the same state digest.
    [[nodiscard]] bool honest_agree() const;

private:
    struct Envelope {
        NodeId from;
        NodeId to;
        SimMessage msg;
    };

    std::optional<NodeId> proposer_for(std::uint64_t step) const;
    void broadcast(NodeId from, const SimMessage& msg);
    std::size_t deliver(StepReport& report);
    void handle(NodeId to, NodeId from, const SimMessage& msg, StepReport& report);
    void accept_bundle(SimNode& n, const std::vector<RemovableBlock>& interval, const PermanentBlock& block,
                       StepReport& report, const char* kind);
    void propose(NodeId id, StepReport& report);
    SimMessage serve(SimNode& peer, const SimMessage& request);
    SimNode make_node(NodeId id, NodeFault fault) const;

    SimConfig config_;
    PermanentBlock genesis_;
    std::vector<SimNode> nodes_;
    std::vector<Envelope> queue_;
    std::set<NodeId> isolated_;
    std::mt19937_64 rng_;
    std::uint64_t step_ = 0;
};

/// Same as constructing a SimNetwork; kept for symmetry with the CLI.
inline SimNetwork create_network(SimConfig config) { return SimNetwork(std::move(config)); }

}  // namespace mutachain
