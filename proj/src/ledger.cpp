#include "mutachain/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace mutachain {

std::string_view policy_name(RemovalPolicy policy) {
    return policy == RemovalPolicy::Authorized ? "authorized" : "unauthorized";
}

std::optional<RemovalPolicy> parse_policy(std::string_view name) {
    if (name == "authorized")
        return RemovalPolicy::Authorized;
    if (name == "unauthorized")
        return RemovalPolicy::Unauthorized;
    return std::nullopt;
}

std::string_view state_name(IntervalStatus::State state) {
    switch (state) {
        case IntervalStatus::State::Present: return "present";
        case IntervalStatus::State::Empty: return "empty";
        case IntervalStatus::State::Deleted: return "deleted";
    }
    return "?";
}

namespace {

std::string interval_str(IntervalIndex i) { return "I_" + std::to_string(i); }

bool contains_key(const std::vector<PubKey>& keys, const PubKey& pk) {
    return std::find(keys.begin(), keys.end(), pk) != keys.end();
}

bool sorted_unique(const std::vector<PubKey>& keys) {
    return std::adjacent_find(keys.begin(), keys.end(), [](const PubKey& a, const PubKey& b) { return !(a < b); }) ==
           keys.end();
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

PermanentBlock Ledger::make_genesis(std::vector<Transaction> txs) {
    return build_permanent_block(0, NULL_HASH, {}, std::move(txs));
}

Ledger::Ledger(const PermanentBlock& genesis, LedgerConfig config) : config_(std::move(config)) {
    const auto& h = genesis.header;
    if (h.height != 0 || h.prev_permanent != NULL_HASH || h.prev_removable != NULL_HASH || h.interval_len != 0 ||
        !h.p_list.empty())
        throw std::invalid_argument("genesis header must be height 0 with no links, interval or P-list");
    if (h.tx_root != compute_tx_root(genesis.transactions))
        throw std::invalid_argument("genesis tx_root does not match its body");
    for (std::size_t i = 0; i < genesis.transactions.size(); ++i) {
        if (auto st = apply_body_tx(state_, genesis.transactions[i], 0); !st)
            throw std::invalid_argument("genesis tx #" + std::to_string(i) + ": " + st.to_string());
    }
    state_.intervals[0] = IntervalStatus{};
    permanent_.push_back(genesis);
}

// ---------------------------------------------------------------------------
// stateful transaction rules

Status Ledger::check_removable_tx(const State& st, const Transaction& tx) const {
    if (tx.kind != TxKind::Removable)
        return {ErrorCode::BlockShapeError, std::string(kind_name(tx.kind)) + " transaction in a removable block"};
    if (auto s = validate_stateless(tx); !s)
        return s;
    auto reg = st.register_txs.find(tx.inputs[0].txid);
    if (reg == st.register_txs.end())
        return {ErrorCode::UnknownRegisterRef, "removable transaction references no confirmed register output"};
    if (reg->second != tx.signer)
        return {ErrorCode::UnknownRegisterRef, "removable transaction references another entity's register output"};
    return Status::ok();
}

namespace {

Status check_register_ref(const std::map<PubKey, TxId>& registrations, const Transaction& tx) {
    auto reg = registrations.find(tx.signer);
    if (reg == registrations.end())
        return {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " is not registered"};
    if (tx.inputs.empty() || tx.inputs[0] != register_output(reg->second))
        return {ErrorCode::UnknownRegisterRef, "input is not the signer's register output"};
    return Status::ok();
}

}  // namespace

Status Ledger::check_prepare(const State& st, const Transaction& prep, Height k) const {
    if (prep.kind != TxKind::Prepare)
        return {ErrorCode::InvalidPrepare, "not a prepare transaction"};
    const IntervalIndex x = prep.target_interval();
    if (x == 0 || x >= k || x > tip_height())
        return {ErrorCode::UnknownInterval, interval_str(x) + " is not closed before height " + std::to_string(k)};
    auto status = st.intervals.find(x);
    if ((status != st.intervals.end() && status->second.state == IntervalStatus::State::Deleted) ||
        st.deletes.contains(x))
        return {ErrorCode::IntervalAlreadyDeleted, interval_str(x) + " already has a confirmed delete"};
    const auto& p_list = permanent_[x].header.p_list;
    if (!contains_key(p_list, prep.signer))
        return {ErrorCode::NotEligible, "signer is not in P_" + std::to_string(x)};
    if (st.prepares.contains({x, prep.signer}))
        return {ErrorCode::DuplicatePrepare, "signer already has a confirmed prepare for " + interval_str(x)};
    if (withheld_.contains(x))
        return Status::ok();  // contents unavailable; eligibility is all that can be checked

    bool gap_after = std::any_of(withheld_.begin(), withheld_.end(),
                                 [&](IntervalIndex j) { return j > x && j <= k; });
    std::set<TxId> missing;
    for (const auto& block : interval_blocks(x)) {
        for (const auto& tx : block.transactions) {
            if (tx.signer == prep.signer)
                continue;
            TxId id = tx_id(tx);
            auto occ = st.occurrences.find(id);
            bool duplicated = occ != st.occurrences.end() &&
                              std::any_of(occ->second.begin(), occ->second.end(),
                                          [&](IntervalIndex j) { return j > x && j <= k; });
            if (!duplicated && !gap_after)
                missing.insert(id);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing)
            list += (list.empty() ? "" : ",") + id.short_hex();
        return {ErrorCode::MissingDuplicates, std::to_string(missing.size()) + " transaction(s) of " + interval_str(x) +
                                                  " not re-confirmed: " + list};
    }
    return Status::ok();
}

Status Ledger::check_delete(const State& st, const Transaction& del, Height k) const {
    if (del.kind != TxKind::Delete)
        return {ErrorCode::InvalidDelete, "not a delete transaction"};
    const IntervalIndex x = del.target_interval();
    if (x == 0 || x >= k || x > tip_height())
        return {ErrorCode::UnknownInterval, interval_str(x) + " is not closed before height " + std::to_string(k)};
    auto status = st.intervals.find(x);
    if ((status != st.intervals.end() && status->second.state == IntervalStatus::State::Deleted) ||
        st.deletes.contains(x))
        return {ErrorCode::IntervalAlreadyDeleted, interval_str(x) + " already has a confirmed delete"};
    if (permanent_[x].header.interval_len == 0)
        return {ErrorCode::UnknownInterval, interval_str(x) + " holds no removable blocks"};
    if (!st.registrations.contains(del.signer))
        return {ErrorCode::UnknownSigner, "signer " + del.signer.short_hex() + " is not registered"};

    if (config_.policy == RemovalPolicy::Unauthorized) {
        if (config_.miner_judgment && !config_.miner_judgment(del))
            return {ErrorCode::RejectedByMiners, "block producers refuse to delete " + interval_str(x)};
        return Status::ok();
    }

    const auto& p_list = permanent_[x].header.p_list;
    if (del.inputs.empty()) {
        if (p_list.size() == 1 && p_list[0] == del.signer)
            return Status::ok();
        return {ErrorCode::NotSoleOwnerAndNoPrepare,
                "P_" + std::to_string(x) + " holds other keys and no prepare is referenced"};
    }
    auto rec = st.prepare_records.find(del.inputs[0].txid);
    if (rec == st.prepare_records.end() || rec->second.height >= k)
        return {ErrorCode::UnknownPrepareRef, "referenced prepare is not confirmed in an earlier block"};
    if (rec->second.interval != x)
        return {ErrorCode::UnknownPrepareRef, "referenced prepare targets " + interval_str(rec->second.interval)};
    if (rec->second.signer != del.signer)
        return {ErrorCode::PrepareSignerMismatch, "prepare and delete are signed by different keys"};
    if (!contains_key(p_list, del.signer))
        return {ErrorCode::NotEligible, "signer is not in P_" + std::to_string(x)};
    return Status::ok();
}

Status Ledger::apply_body_tx(State& st, const Transaction& tx, Height k) const {
    if (tx.kind == TxKind::Removable)
        return {ErrorCode::BlockShapeError, "removable transaction in a permanent block"};
    if (auto s = validate_stateless(tx); !s)
        return s;
    const TxId id = tx_id(tx);
    if (st.confirmed.contains(id))
        return {ErrorCode::AlreadyConfirmed, "transaction " + id.short_hex() + " is already confirmed"};

    switch (tx.kind) {
        case TxKind::Register:
            if (st.registrations.contains(tx.signer))
                return {ErrorCode::DuplicateRegistration, "key " + tx.signer.short_hex() + " is already registered"};
            st.registrations[tx.signer] = id;
            st.register_txs[id] = tx.signer;
            break;

        case TxKind::Prepare: {
            if (auto s = check_register_ref(st.registrations, tx); !s)
                return s;
            if (auto s = check_prepare(st, tx, k); !s)
                return s;
            const IntervalIndex x = tx.target_interval();
            st.prepares[{x, tx.signer}] = id;
            st.prepare_records[id] = PrepareRecord{id, x, tx.signer, k};
            break;
        }

        case TxKind::Delete: {
            if (auto s = check_delete(st, tx, k); !s)
                return s;
            const IntervalIndex x = tx.target_interval();
            st.deletes[x] = DeleteRecord{id, x, tx.signer, k};
            if (withheld_.contains(x))
                st.intervals[x] = IntervalStatus::deleted(id, k);
            break;
        }

        case TxKind::Info:
            if (auto s = check_register_ref(st.registrations, tx); !s)
                return s;
            st.infos[id] = InfoRecord{id, tx.signer, tx.info(), k};
            break;

        case TxKind::Consent: {
            const TxId& info_id = tx.info_ref().txid;
            auto info = st.infos.find(info_id);
            if (info == st.infos.end())
                return {ErrorCode::UnknownInfo, "consent references no confirmed info transaction"};
            const std::size_t width = info->second.info.purposes.size();
            if (width < 64 && (tx.value >> width) != 0)
                return {ErrorCode::ShapeViolation, "consent value sets bits beyond the " + std::to_string(width) +
                                                       " declared purposes"};
            const OutPoint& input = tx.inputs[0];
            const auto chain_key = std::make_pair(tx.signer, info_id);
            auto reg = st.registrations.find(tx.signer);
            if (reg == st.registrations.end())
                return {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " is not registered"};

            if (input == register_output(reg->second)) {
                // Fresh chain: allowed when none is live or the live one is revoked.
                auto live = st.live_chains.find(chain_key);
                if (live != st.live_chains.end()) {
                    auto tip = st.consent_utxos.find(live->second);
                    if (tip != st.consent_utxos.end() && tip->second.value != 0)
                        return {ErrorCode::ConsentChainExists,
                                "subject already holds a live consent for this info; spend its output instead"};
                    if (tip != st.consent_utxos.end())
                        st.consent_utxos.erase(tip);
                }
            } else {
                auto utxo = st.consent_utxos.find(input);
                if (utxo == st.consent_utxos.end()) {
                    if (st.consent_outputs_ever.contains(input))
                        return {ErrorCode::ConsentInputSpent, "consent output " + input.txid.short_hex() +
                                                                  " is already spent"};
                    return {ErrorCode::UnknownRegisterRef, "consent input is neither a register nor a consent output"};
                }
                if (utxo->second.subject != tx.signer || utxo->second.info != info_id)
                    return {ErrorCode::ConsentInputSpent,
                            "consent input belongs to another subject or another info transaction"};
                st.consent_utxos.erase(utxo);
            }
            OutPoint out{id, 0};
            st.consent_utxos[out] = ConsentOutput{tx.signer, info_id, tx.value};
            st.consent_outputs_ever.insert(out);
            st.live_chains[chain_key] = out;
            st.consent_log.push_back(ConfirmedTx{tx, id, k});
            break;
        }

        case TxKind::Removable:
            break;
    }
    st.confirmed[id] = k;
    return Status::ok();
}

Status Ledger::validate_prepare(const Transaction& prep, Height confirming_height) const {
    return check_prepare(state_, prep, confirming_height);
}

Status Ledger::validate_delete(const Transaction& del, Height confirming_height) const {
    return check_delete(state_, del, confirming_height);
}

// ---------------------------------------------------------------------------
// block application

Status Ledger::apply_removable(const RemovableBlock& block) {
    const Height k = tip_height() + 1;
    const auto& h = block.header;
    if (h.interval <= tip_height()) {
        if (interval_status(h.interval).state == IntervalStatus::State::Deleted)
            return {ErrorCode::RemovableTxDependsOnDeletedState,
                    interval_str(h.interval) + " was deleted; its blocks are never re-accepted"};
        return {ErrorCode::UnknownParent, interval_str(h.interval) + " is already closed"};
    }
    if (h.interval != k)
        return {ErrorCode::UnknownParent, "no permanent block " + std::to_string(h.interval - 1) + " yet"};
    if (withheld_.contains(k))
        return {ErrorCode::BlockShapeError, interval_str(k) + " is marked withheld"};
    if (pending_.size() >= kMaxIntervalLen)
        return {ErrorCode::BlockShapeError, "interval longer than 255 blocks"};
    const Hash32 expected_prev = pending_.empty() ? tip_hash() : pending_.back().hash();
    if (h.position != pending_.size() + 1 || h.prev != expected_prev)
        return {ErrorCode::BrokenIntervalChain, "B_" + std::to_string(h.interval) + "." + std::to_string(h.position) +
                                                    " does not extend the buffered interval"};
    if (h.tx_root != compute_tx_root(block.transactions))
        return {ErrorCode::TxRootMismatch, "removable block tx_root does not match its body"};

    std::set<TxId> seen;
    for (const auto& b : pending_)
        for (const auto& tx : b.transactions)
            seen.insert(tx_id(tx));
    for (const auto& tx : block.transactions) {
        if (auto s = check_removable_tx(state_, tx); !s)
            return s;
        if (!seen.insert(tx_id(tx)).second)
            return {ErrorCode::BlockShapeError, "transaction appears twice in " + interval_str(k)};
    }
    std::vector<RemovableBlock> extended = pending_;
    extended.push_back(block);
    if (derive_p_list(extended).size() > kPListCapacity)
        return {ErrorCode::PListOverflow, interval_str(k) + " would need more than 4 P-list keys"};
    pending_ = std::move(extended);
    return Status::ok();
}

Status Ledger::apply_permanent(const PermanentBlock& block) {
    const Height k = tip_height() + 1;
    const auto& h = block.header;
    if (h.height != k)
        return {ErrorCode::UnknownParent, "expected height " + std::to_string(k) + ", got " + std::to_string(h.height)};
    if (h.prev_permanent != tip_hash())
        return {ErrorCode::UnknownParent, "B_" + std::to_string(k) + " does not link to the tip"};

    const bool gap = withheld_.contains(k) && h.interval_len > 0;
    if (h.p_list.size() > kPListCapacity)
        return {ErrorCode::PListOverflow, "P-list holds " + std::to_string(h.p_list.size()) + " keys"};
    if (gap) {
        if (!pending_.empty())
            return {ErrorCode::BlockShapeError, interval_str(k) + " is withheld but blocks were buffered"};
        if (h.p_list.empty() || !sorted_unique(h.p_list))
            return {ErrorCode::PListMismatch, "P-list of a non-empty interval must be sorted, unique, non-empty"};
    } else {
        if (h.interval_len != pending_.size())
            return {ErrorCode::IntervalLenMismatch, "header says |I_" + std::to_string(k) +
                                                        "| = " + std::to_string(h.interval_len) + ", buffered " +
                                                        std::to_string(pending_.size())};
        const Hash32 expected = pending_.empty() ? NULL_HASH : pending_.back().hash();
        if (h.prev_removable != expected)
            return {ErrorCode::BrokenIntervalChain, "prev_removable of B_" + std::to_string(k) +
                                                        " does not match the interval"};
        if (h.p_list != derive_p_list(pending_))
            return {ErrorCode::PListMismatch, "P_" + std::to_string(k) + " differs from the interval's signers"};
    }
    if (h.tx_root != compute_tx_root(block.transactions))
        return {ErrorCode::TxRootMismatch, "B_" + std::to_string(k) + " tx_root does not match its body"};

    BlockDraft draft(*this, gap ? std::vector<RemovableBlock>{} : pending_);
    if (!draft.interval_status())
        return draft.interval_status();
    for (std::size_t i = 0; i < block.transactions.size(); ++i) {
        if (auto s = draft.try_add(block.transactions[i]); !s)
            return {s.code(), "B_" + std::to_string(k) + " tx #" + std::to_string(i) + ": " + s.detail()};
    }

    state_ = std::move(draft.state_);
    state_.intervals[k] = IntervalStatus::of_length(h.interval_len);
    if (!pending_.empty())
        removable_[k] = std::move(pending_);
    pending_.clear();
    permanent_.push_back(block);
    return Status::ok();
}

Status Ledger::apply_block(const Block& block) {
    return std::visit(
        [this](const auto& b) -> Status {
            if constexpr (std::is_same_v<std::decay_t<decltype(b)>, RemovableBlock>)
                return apply_removable(b);
            else
                return apply_permanent(b);
        },
        block);
}

Status Ledger::apply_bundle(const std::vector<RemovableBlock>& interval, const PermanentBlock& block) {
    pending_.clear();
    for (const auto& b : interval) {
        if (auto s = apply_removable(b); !s) {
            pending_.clear();
            return s;
        }
    }
    if (auto s = apply_permanent(block); !s) {
        pending_.clear();
        return s;
    }
    return Status::ok();
}

// ---------------------------------------------------------------------------
// pruning

std::vector<IntervalIndex> Ledger::deletable_intervals() const {
    std::vector<IntervalIndex> out;
    const Height tip = tip_height();
    for (const auto& [x, rec] : state_.deletes) {
        if (interval_status(x).state == IntervalStatus::State::Deleted)
            continue;
        if (tip - rec.height >= config_.confirm_depth && rec.height - x >= config_.delete_lock)
            out.push_back(x);
    }
    return out;
}

std::vector<IntervalIndex> Ledger::prune_deletable() {
    auto targets = deletable_intervals();
    for (IntervalIndex x : targets) {
        const auto& rec = state_.deletes.at(x);
        removable_.erase(x);
        for (auto it = state_.occurrences.begin(); it != state_.occurrences.end();) {
            it->second.erase(x);
            it = it->second.empty() ? state_.occurrences.erase(it) : std::next(it);
        }
        state_.intervals[x] = IntervalStatus::deleted(rec.txid, rec.height);
    }
    return targets;
}

// ---------------------------------------------------------------------------
// queries

std::span<const RemovableBlock> Ledger::interval_blocks(IntervalIndex i) const {
    auto it = removable_.find(i);
    if (it == removable_.end())
        return {};
    return it->second;
}

IntervalStatus Ledger::interval_status(IntervalIndex i) const {
    auto it = state_.intervals.find(i);
    return it == state_.intervals.end() ? IntervalStatus{} : it->second;
}

std::optional<TxId> Ledger::registration(const PubKey& pk) const {
    auto it = state_.registrations.find(pk);
    if (it == state_.registrations.end())
        return std::nullopt;
    return it->second;
}

const InfoRecord* Ledger::info(const TxId& txid) const {
    auto it = state_.infos.find(txid);
    return it == state_.infos.end() ? nullptr : &it->second;
}

std::optional<OutPoint> Ledger::live_consent(const PubKey& subject, const TxId& info) const {
    auto it = state_.live_chains.find({subject, info});
    if (it == state_.live_chains.end() || !state_.consent_utxos.contains(it->second))
        return std::nullopt;
    return it->second;
}

const PrepareRecord* Ledger::prepare_record(const TxId& txid) const {
    auto it = state_.prepare_records.find(txid);
    return it == state_.prepare_records.end() ? nullptr : &it->second;
}

std::optional<TxId> Ledger::confirmed_prepare(IntervalIndex i, const PubKey& signer) const {
    auto it = state_.prepares.find({i, signer});
    if (it == state_.prepares.end())
        return std::nullopt;
    return it->second;
}

const DeleteRecord* Ledger::confirmed_delete(IntervalIndex i) const {
    auto it = state_.deletes.find(i);
    return it == state_.deletes.end() ? nullptr : &it->second;
}

const std::set<IntervalIndex>* Ledger::occurrences(const TxId& txid) const {
    auto it = state_.occurrences.find(txid);
    return it == state_.occurrences.end() ? nullptr : &it->second;
}

std::optional<Height> Ledger::confirmation_height(const TxId& txid) const {
    auto it = state_.confirmed.find(txid);
    if (it == state_.confirmed.end())
        return std::nullopt;
    return it->second;
}

Hash32 Ledger::state_digest() const {
    Encoder enc;
    enc.u32(tip_height());
    enc.fixed(tip_hash());
    for (Height i = 1; i <= tip_height(); ++i) {
        const IntervalStatus st = interval_status(i);
        enc.u8(static_cast<std::uint8_t>(st.state));
        const bool deleted = st.state == IntervalStatus::State::Deleted;
        enc.presence(deleted);
        if (deleted) {
            enc.fixed(st.del_txid);
            enc.u32(st.deleted_at_height);
        }
        auto blocks = interval_blocks(i);
        enc.count(blocks.size());
        for (const auto& b : blocks)
            enc.fixed(b.hash());
    }
    return digest(enc.data());
}

// ---------------------------------------------------------------------------
// drafts

BlockDraft::BlockDraft(const Ledger& base, std::vector<RemovableBlock> interval_blocks)
    : base_(&base), state_(base.state_), height_(base.tip_height() + 1), blocks_(std::move(interval_blocks)) {
    if (blocks_.size() > kMaxIntervalLen) {
        interval_status_ = {ErrorCode::BlockShapeError, "interval longer than 255 blocks"};
        return;
    }
    if (auto s = check_interval_chain(base.tip_hash(), height_, blocks_); !s) {
        interval_status_ = s;
        return;
    }
    std::set<TxId> seen;
    for (const auto& b : blocks_) {
        if (b.header.tx_root != compute_tx_root(b.transactions)) {
            interval_status_ = {ErrorCode::TxRootMismatch, "removable block tx_root does not match its body"};
            return;
        }
        for (const auto& tx : b.transactions) {
            if (auto s = base.check_removable_tx(state_, tx); !s) {
                interval_status_ = s;
                return;
            }
            TxId id = tx_id(tx);
            if (!seen.insert(id).second) {
                interval_status_ = {ErrorCode::BlockShapeError, "transaction appears twice in the interval"};
                return;
            }
            state_.occurrences[id].insert(height_);
        }
    }
    if (derive_p_list(blocks_).size() > kPListCapacity) {
        interval_status_ = {ErrorCode::PListOverflow, "interval needs more than 4 P-list keys"};
        return;
    }
    state_.intervals[height_] = IntervalStatus::of_length(blocks_.size());
}

Status BlockDraft::try_add(const Transaction& tx) {
    if (!interval_status_)
        return interval_status_;
    Ledger::State staged = state_;
    if (auto s = base_->apply_body_tx(staged, tx, height_); !s)
        return s;
    state_ = std::move(staged);
    txs_.push_back(tx);
    return Status::ok();
}

PermanentBlock BlockDraft::seal() const {
    return build_permanent_block(height_, base_->tip_hash(), blocks_, txs_);
}

PermanentBlock build_permanent_block(const Ledger& ledger, std::span<const RemovableBlock> interval_blocks,
                                     std::vector<Transaction> txs) {
    return build_permanent_block(ledger.tip_height() + 1, ledger.tip_hash(), interval_blocks, std::move(txs));
}

}  // namespace mutachain
