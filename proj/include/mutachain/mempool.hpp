#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mutachain/ledger.hpp"

namespace mutachain {

/// Target interval length per height. "constant:N", "alternating:A,B" or
/// "scripted:H=N,H=N;default=N".
class IntervalSchedule {
public:
    static IntervalSchedule constant(std::size_t len);
    static IntervalSchedule alternating(std::size_t odd, std::size_t even);
    static IntervalSchedule scripted(std::map<Height, std::size_t> at, std::size_t fallback);
    /// Throws std::invalid_argument on malformed text.
    static IntervalSchedule parse(std::string_view text);

    /// Clamped to 255.
    [[nodiscard]] std::size_t at(Height h) const;
    [[nodiscard]] std::string describe() const;

    /// Replaces the length for every height >= `from` (catch-up mode).
    void force_from(Height from, std::size_t len);

private:
    enum class Kind { Constant, Alternating, Scripted };
    Kind kind_ = Kind::Constant;
    std::size_t a_ = 1;
    std::size_t b_ = 1;
    std::map<Height, std::size_t> script_;
    std::optional<std::pair<Height, std::size_t>> forced_;
};

struct MempoolConfig {
    IntervalSchedule schedule = IntervalSchedule::constant(1);
    std::size_t block_tx_capacity = 8;
};

struct PendingTx {
    TxId txid;
    Transaction tx;
};

/// A removable transaction of another signer that must be re-confirmed
/// before the triggering Prepare can be.
struct ReinclusionEntry {
    TxId txid;
    Transaction tx;
    TxId prepare;
    IntervalIndex target = 0;
};

struct Candidate {
    std::vector<RemovableBlock> interval;
    PermanentBlock block;
};

class Mempool {
public:
    explicit Mempool(MempoolConfig config = {}) : config_(std::move(config)) {}

    /// Stateless checks plus admission against `ledger`. Admitting a Prepare
    /// queues byte-identical copies of every other-signer removable
    /// transaction of its target interval.
    Status submit(const Ledger& ledger, const Transaction& tx);

    /// Reinclusion queue first, then pending removable transactions (FIFO),
    /// into at most schedule(height) removable blocks; then every pending
    /// non-removable transaction the staged ledger accepts. Always applies
    /// cleanly to `ledger`.
    [[nodiscard]] Candidate build_candidate(const Ledger& ledger) const;

    /// Call after `ledger` applied (and pruned) the bundle.
    void on_block_applied(const Ledger& ledger, const std::vector<RemovableBlock>& interval,
                          const PermanentBlock& block);

    [[nodiscard]] bool contains(const TxId& id) const { return index_.contains(id); }
    [[nodiscard]] std::size_t size() const { return pending_.size(); }
    [[nodiscard]] const std::vector<PendingTx>& pending() const { return pending_; }
    [[nodiscard]] const std::deque<ReinclusionEntry>& reinclusion_queue() const { return queue_; }
    [[nodiscard]] MempoolConfig& config() { return config_; }
    [[nodiscard]] const MempoolConfig& config() const { return config_; }

private:
    Status admit_removable(const Ledger& ledger, const Transaction& tx, const TxId& id) const;
    Status admit_prepare(const Ledger& ledger, const Transaction& tx) const;
    Status admit_delete(const Ledger& ledger, const Transaction& tx) const;
    Status admit_consent(const Ledger& ledger, const Transaction& tx) const;
    bool signer_known(const Ledger& ledger, const PubKey& pk, const TxId* reg_ref) const;
    void enqueue_duplicates(const Ledger& ledger, const Transaction& prep, const TxId& prep_id);
    const Transaction* find_pending(const TxId& id) const;

    MempoolConfig config_;
    std::vector<PendingTx> pending_;
    std::set<TxId> index_;
    std::deque<ReinclusionEntry> queue_;
};

}  // namespace mutachain
