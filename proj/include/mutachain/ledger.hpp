#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "mutachain/block.hpp"
#include "mutachain/status.hpp"
#include "mutachain/transaction.hpp"

namespace mutachain {

enum class RemovalPolicy : std::uint8_t { Authorized, Unauthorized };

std::string_view policy_name(RemovalPolicy policy);
std::optional<RemovalPolicy> parse_policy(std::string_view name);

struct LedgerConfig {
    /// D: permanent blocks that must extend past a Delete before pruning.
    std::uint32_t confirm_depth = 2;
    /// L: minimum distance between an interval and the block confirming
    /// its Delete before the interval may be pruned.
    std::uint32_t delete_lock = 1;
    RemovalPolicy policy = RemovalPolicy::Authorized;
    /// Unauthorized policy only: whether block producers accept a Delete.
    /// Empty means accept all.
    std::function<bool(const Transaction&)> miner_judgment;
};

struct IntervalStatus {
    enum class State : std::uint8_t { Present, Empty, Deleted };
    State state = State::Empty;
    TxId del_txid;                 // Deleted only
    Height deleted_at_height = 0;  // height of the block confirming the Delete

    static IntervalStatus of_length(std::size_t len) {
        IntervalStatus s;
        s.state = len > 0 ? State::Present : State::Empty;
        return s;
    }
    static IntervalStatus deleted(const TxId& del, Height at) {
        IntervalStatus s;
        s.state = State::Deleted;
        s.del_txid = del;
        s.deleted_at_height = at;
        return s;
    }

    friend bool operator==(const IntervalStatus&, const IntervalStatus&) = default;
};

std::string_view state_name(IntervalStatus::State state);

struct ConsentOutput {
    PubKey subject;
    TxId info;
    std::uint64_t value = 0;

    friend bool operator==(const ConsentOutput&, const ConsentOutput&) = default;
};

struct InfoRecord {
    TxId txid;
    PubKey controller_key;
    InfoPayload info;
    Height height = 0;
};

struct PrepareRecord {
    TxId txid;
    IntervalIndex interval = 0;
    PubKey signer;
    Height height = 0;
};

struct DeleteRecord {
    TxId txid;
    IntervalIndex interval = 0;
    PubKey signer;
    Height height = 0;
};

struct ConfirmedTx {
    Transaction tx;
    TxId txid;
    Height height = 0;
};

using Block = std::variant<RemovableBlock, PermanentBlock>;

class BlockDraft;

/// Validated chain state. Holds permanent blocks by height, removable blocks
/// of every interval still present, and the indexes needed to validate the
/// next block. Removable blocks of the open interval are buffered until the
/// permanent block closing it arrives; the pair is accepted atomically.
///
/// Single writer. Copies are independent values.
class Ledger {
public:
    /// Throws std::invalid_argument when `genesis` is not a valid B_0.
    explicit Ledger(const PermanentBlock& genesis, LedgerConfig config = {});

    static PermanentBlock make_genesis(std::vector<Transaction> txs);

    Status apply_removable(const RemovableBlock& block);
    Status apply_permanent(const PermanentBlock& block);
    Status apply_block(const Block& block);
    /// Removable blocks then the permanent block; on failure the buffered
    /// interval is discarded and the ledger is unchanged.
    Status apply_bundle(const std::vector<RemovableBlock>& interval, const PermanentBlock& block);
    void discard_pending() { pending_.clear(); }

    /// Marks interval `i` (> tip) as absent from the source being replayed:
    /// its permanent block is accepted without removable blocks, and the
    /// interval must later be covered by a confirmed Delete.
    void expect_withheld(IntervalIndex i) { withheld_.insert(i); }
    [[nodiscard]] bool is_withheld(IntervalIndex i) const { return withheld_.contains(i); }
    [[nodiscard]] const std::set<IntervalIndex>& withheld() const { return withheld_; }

    // Prepare/Delete rules against the committed state, as if the
    // transaction were confirmed at `confirming_height` (> tip for new
    // blocks). Duplicates counted are those already indexed.
    [[nodiscard]] Status validate_prepare(const Transaction& prep, Height confirming_height) const;
    [[nodiscard]] Status validate_delete(const Transaction& del, Height confirming_height) const;

    /// Intervals whose confirmed Delete has D confirmations and satisfies the
    /// deletion lock, and which are not yet pruned.
    [[nodiscard]] std::vector<IntervalIndex> deletable_intervals() const;
    /// Drops removable blocks of every deletable interval. Idempotent.
    std::vector<IntervalIndex> prune_deletable();

    [[nodiscard]] Height tip_height() const { return static_cast<Height>(permanent_.size() - 1); }
    [[nodiscard]] Hash32 tip_hash() const { return permanent_.back().hash(); }
    [[nodiscard]] const PermanentBlock& permanent(Height h) const { return permanent_.at(h); }
    [[nodiscard]] const std::vector<PermanentBlock>& permanent_blocks() const { return permanent_; }
    /// Empty when the interval has no stored blocks.
    [[nodiscard]] std::span<const RemovableBlock> interval_blocks(IntervalIndex i) const;
    [[nodiscard]] const std::map<IntervalIndex, std::vector<RemovableBlock>>& removable_blocks() const {
        return removable_;
    }
    [[nodiscard]] const std::vector<RemovableBlock>& pending_interval() const { return pending_; }

    [[nodiscard]] IntervalStatus interval_status(IntervalIndex i) const;
    [[nodiscard]] const std::map<IntervalIndex, IntervalStatus>& intervals() const { return state_.intervals; }

    [[nodiscard]] std::optional<TxId> registration(const PubKey& pk) const;
    [[nodiscard]] const std::map<PubKey, TxId>& registrations() const { return state_.registrations; }
    [[nodiscard]] const std::map<OutPoint, ConsentOutput>& consent_utxos() const { return state_.consent_utxos; }
    [[nodiscard]] const std::vector<ConfirmedTx>& consent_log() const { return state_.consent_log; }
    [[nodiscard]] const InfoRecord* info(const TxId& txid) const;
    [[nodiscard]] const std::map<TxId, InfoRecord>& infos() const { return state_.infos; }
    [[nodiscard]] std::optional<OutPoint> live_consent(const PubKey& subject, const TxId& info) const;
    [[nodiscard]] const PrepareRecord* prepare_record(const TxId& txid) const;
    [[nodiscard]] std::optional<TxId> confirmed_prepare(IntervalIndex i, const PubKey& signer) const;
    [[nodiscard]] const DeleteRecord* confirmed_delete(IntervalIndex i) const;
    [[nodiscard]] const std::map<IntervalIndex, DeleteRecord>& deletes() const { return state_.deletes; }
    /// Intervals still present that contain a removable transaction.
    [[nodiscard]] const std::set<IntervalIndex>* occurrences(const TxId& txid) const;
    [[nodiscard]] const std::map<TxId, std::set<IntervalIndex>>& occurrence_index() const {
        return state_.occurrences;
    }
    /// Height of the permanent block confirming a non-removable transaction.
    [[nodiscard]] std::optional<Height> confirmation_height(const TxId& txid) const;

    [[nodiscard]] const LedgerConfig& config() const { return config_; }

    /// Digest of the tip, every interval's status and the hashes of stored
    /// removable blocks. Equal chains with equal pruning give equal digests.
    [[nodiscard]] Hash32 state_digest() const;

private:
    friend class BlockDraft;

    struct State {
        std::map<IntervalIndex, IntervalStatus> intervals;
        std::map<PubKey, TxId> registrations;
        std::map<TxId, PubKey> register_txs;
        std::map<TxId, Height> confirmed;
        std::map<TxId, InfoRecord> infos;
        std::map<OutPoint, ConsentOutput> consent_utxos;
        std::set<OutPoint> consent_outputs_ever;
        std::map<std::pair<PubKey, TxId>, OutPoint> live_chains;
        std::vector<ConfirmedTx> consent_log;
        std::map<std::pair<IntervalIndex, PubKey>, TxId> prepares;
        std::map<TxId, PrepareRecord> prepare_records;
        std::map<IntervalIndex, DeleteRecord> deletes;
        std::map<TxId, std::set<IntervalIndex>> occurrences;
    };

    Status check_removable_tx(const State& st, const Transaction& tx) const;
    Status check_prepare(const State& st, const Transaction& prep, Height k) const;
    Status check_delete(const State& st, const Transaction& del, Height k) const;
    Status apply_body_tx(State& st, const Transaction& tx, Height k) const;

    LedgerConfig config_;
    std::vector<PermanentBlock> permanent_;
    std::map<IntervalIndex, std::vector<RemovableBlock>> removable_;
    std::vector<RemovableBlock> pending_;
    std::set<IntervalIndex> withheld_;
    State state_;
};

/// A permanent block under construction on top of a ledger: the interval
/// is indexed up front, then body transactions are validated and staged one
/// at a time with the same rules apply_permanent uses.
class BlockDraft {
public:
    BlockDraft(const Ledger& base, std::vector<RemovableBlock> interval_blocks);

    /// Non-Ok when the interval blocks themselves are invalid.
    [[nodiscard]] const Status& interval_status() const { return interval_status_; }
    [[nodiscard]] Height height() const { return height_; }

    /// Validates `tx` against the staged state; stages it on success.
    Status try_add(const Transaction& tx);
    [[nodiscard]] const std::vector<Transaction>& accepted() const { return txs_; }
    [[nodiscard]] const std::vector<RemovableBlock>& interval_blocks() const { return blocks_; }

    /// Throws BlockError when the interval cannot be sealed (e.g. P-list
    /// overflow).
    [[nodiscard]] PermanentBlock seal() const;

private:
    friend class Ledger;

    const Ledger* base_;
    Ledger::State state_;
    Height height_;
    std::vector<RemovableBlock> blocks_;
    std::vector<Transaction> txs_;
    Status interval_status_;
};

/// Header for the next block on `ledger`: interval_len, P-list, both links.
PermanentBlock build_permanent_block(const Ledger& ledger, std::span<const RemovableBlock> interval_blocks,
                                     std::vector<Transaction> txs);

}  // namespace mutachain
