#include "mutachain/mempool.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace mutachain {

// ---------------------------------------------------------------------------
// schedule

IntervalSchedule IntervalSchedule::constant(std::size_t len) {
    IntervalSchedule s;
    s.kind_ = Kind::Constant;
    s.a_ = len;
    return s;
}

IntervalSchedule IntervalSchedule::alternating(std::size_t odd, std::size_t even) {
    IntervalSchedule s;
    s.kind_ = Kind::Alternating;
    s.a_ = odd;
    s.b_ = even;
    return s;
}

IntervalSchedule IntervalSchedule::scripted(std::map<Height, std::size_t> at, std::size_t fallback) {
    IntervalSchedule s;
    s.kind_ = Kind::Scripted;
    s.script_ = std::move(at);
    s.a_ = fallback;
    return s;
}

namespace {

std::size_t parse_size(std::string_view text) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

IntervalSchedule IntervalSchedule::parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("schedule must look like kind:args, got '" + std::string(text) + "'");
    std::string_view kind = text.substr(0, colon);
    std::string_view args = text.substr(colon + 1);
    if (kind == "constant")
        return constant(parse_size(args));
    if (kind == "alternating") {
        auto parts = split(args, ',');
        if (parts.size() != 2)
            throw std::invalid_argument("alternating schedule takes two lengths");
        return alternating(parse_size(parts[0]), parse_size(parts[1]));
    }
    if (kind == "scripted") {
        std::map<Height, std::size_t> at;
        std::size_t fallback = 0;
        for (auto group : split(args, ';')) {
            for (auto item : split(group, ',')) {
                if (item.empty())
                    continue;
                auto eq = item.find('=');
                if (eq == std::string_view::npos)
                    throw std::invalid_argument("scripted schedule entries look like H=N");
                auto key = item.substr(0, eq);
                auto val = parse_size(item.substr(eq + 1));
                if (key == "default")
                    fallback = val;
                else
                    at[static_cast<Height>(parse_size(key))] = val;
            }
        }
        return scripted(std::move(at), fallback);
    }
    throw std::invalid_argument("unknown schedule kind '" + std::string(kind) + "'");
}

std::size_t IntervalSchedule::at(Height h) const {
    std::size_t len = a_;
    if (forced_ && h >= forced_->first) {
        len = forced_->second;
    } else if (kind_ == Kind::Alternating) {
        len = h % 2 == 1 ? a_ : b_;
    } else if (kind_ == Kind::Scripted) {
        auto it = script_.find(h);
        if (it != script_.end())
            len = it->second;
    }
    return std::min(len, kMaxIntervalLen);
}

std::string IntervalSchedule::describe() const {
    std::string out;
    switch (kind_) {
        case Kind::Constant:
            out = "constant:" + std::to_string(a_);
            break;
        case Kind::Alternating:
            out = "alternating:" + std::to_string(a_) + "," + std::to_string(b_);
            break;
        case Kind::Scripted:
            out = "scripted:";
            for (const auto& [h, n] : script_)
                out += std::to_string(h) + "=" + std::to_string(n) + ",";
            out += ";default=" + std::to_string(a_);
            break;
    }
    if (forced_)
        out += " (forced " + std::to_string(forced_->second) + " from " + std::to_string(forced_->first) + ")";
    return out;
}

void IntervalSchedule::force_from(Height from, std::size_t len) { forced_ = {from, len}; }

// ---------------------------------------------------------------------------
// admission

namespace {

bool occurs_after(const Ledger& ledger, const TxId& id, IntervalIndex x) {
    const auto* occ = ledger.occurrences(id);
    return occ && occ->upper_bound(x) != occ->end();
}

}  // namespace

const Transaction* Mempool::find_pending(const TxId& id) const {
    if (!index_.contains(id))
        return nullptr;
    for (const auto& p : pending_)
        if (p.txid == id)
            return &p.tx;
    return nullptr;
}

bool Mempool::signer_known(const Ledger& ledger, const PubKey& pk, const TxId* reg_ref) const {
    if (auto reg = ledger.registration(pk))
        return !reg_ref || *reg == *reg_ref;
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Register && p.tx.signer == pk)
            return !reg_ref || p.txid == *reg_ref;
    }
    return false;
}

Status Mempool::admit_removable(const Ledger& ledger, const Transaction& tx, const TxId& id) const {
    if (ledger.occurrences(id))
        return {ErrorCode::AlreadyConfirmed, "removable transaction is already confirmed"};
    if (!signer_known(ledger, tx.signer, nullptr))
        return {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " has no registration"};
    if (!signer_known(ledger, tx.signer, &tx.inputs[0].txid))
        return {ErrorCode::UnknownRegisterRef, "input is not the signer's register output"};
    return Status::ok();
}

Status Mempool::admit_prepare(const Ledger& ledger, const Transaction& tx) const {
    auto reg = ledger.registration(tx.signer);
    if (!reg)
        return {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " is not registered"};
    if (tx.inputs[0] != register_output(*reg))
        return {ErrorCode::UnknownRegisterRef, "input is not the signer's register output"};
    const IntervalIndex x = tx.target_interval();
    if (x > ledger.tip_height())
        return {ErrorCode::UnknownInterval, "interval " + std::to_string(x) + " is not closed yet"};
    if (ledger.interval_status(x).state == IntervalStatus::State::Deleted || ledger.confirmed_delete(x))
        return {ErrorCode::IntervalAlreadyDeleted, "interval " + std::to_string(x) + " is already being deleted"};
    const auto& p_list = ledger.permanent(x).header.p_list;
    if (std::find(p_list.begin(), p_list.end(), tx.signer) == p_list.end())
        return {ErrorCode::IneligiblePrepare, "signer is not in P_" + std::to_string(x)};
    if (ledger.confirmed_prepare(x, tx.signer))
        return {ErrorCode::DuplicatePrepare, "signer already prepared interval " + std::to_string(x)};
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Prepare && p.tx.target_interval() == x)
            return {ErrorCode::ConflictingPending, "a prepare for interval " + std::to_string(x) + " is already pending"};
    }
    return Status::ok();
}

Status Mempool::admit_delete(const Ledger& ledger, const Transaction& tx) const {
    const IntervalIndex x = tx.target_interval();
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Delete && p.tx.target_interval() == x)
            return {ErrorCode::ConflictingPending, "a delete for interval " + std::to_string(x) + " is already pending"};
    }
    Status s = ledger.validate_delete(tx, ledger.tip_height() + 1);
    if (s)
        return s;
    if (s.code() != ErrorCode::NotSoleOwnerAndNoPrepare && s.code() != ErrorCode::UnknownPrepareRef)
        return s;
    // A prepare still waiting in the pool satisfies admission, not inclusion.
    if (!tx.inputs.empty()) {
        const Transaction* prep = find_pending(tx.inputs[0].txid);
        if (prep && prep->kind == TxKind::Prepare && prep->target_interval() == x) {
            if (prep->signer != tx.signer)
                return {ErrorCode::PrepareSignerMismatch, "pending prepare is signed by another key"};
            return Status::ok();
        }
    }
    return {ErrorCode::PrematureDelete, "interval " + std::to_string(x) +
                                            " has other signers and no confirmed or pending prepare is referenced"};
}

Status Mempool::admit_consent(const Ledger& ledger, const Transaction& tx) const {
    const TxId& info = tx.info_ref().txid;
    bool info_known = ledger.info(info) != nullptr;
    if (!info_known) {
        const Transaction* p = find_pending(info);
        info_known = p && p->kind == TxKind::Info;
    }
    if (!info_known)
        return {ErrorCode::UnknownInfo, "consent references no known info transaction"};
    if (!signer_known(ledger, tx.signer, nullptr))
        return {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " has no registration"};

    const OutPoint& input = tx.inputs[0];
    const bool fresh = signer_known(ledger, tx.signer, &input.txid) && input.output_index == 0;
    if (!fresh) {
        bool spendable = ledger.consent_utxos().contains(input);
        if (!spendable) {
            const Transaction* parent = find_pending(input.txid);
            spendable = parent && parent->kind == TxKind::Consent && parent->signer == tx.signer;
        }
        if (!spendable)
            return {ErrorCode::ConsentInputSpent, "consent input is not an unspent consent output"};
    }
    for (const auto& p : pending_) {
        if (p.tx.kind != TxKind::Consent || p.tx.signer != tx.signer || p.tx.info_ref().txid != info)
            continue;
        if (p.tx.inputs[0] == input)
            return {ErrorCode::ConflictingPending, "another pending consent spends the same input"};
    }
    return Status::ok();
}

Status Mempool::submit(const Ledger& ledger, const Transaction& tx) {
    if (auto s = validate_stateless(tx); !s)
        return {ErrorCode::StatelessInvalid, s.to_string()};
    const TxId id = tx_id(tx);
    if (index_.contains(id))
        return {ErrorCode::AlreadyPending, "transaction " + id.short_hex() + " is already pending"};
    if (tx.kind != TxKind::Removable && ledger.confirmation_height(id))
        return {ErrorCode::AlreadyConfirmed, "transaction " + id.short_hex() + " is already confirmed"};

    Status s;
    switch (tx.kind) {
        case TxKind::Register:
            if (signer_known(ledger, tx.signer, nullptr))
                s = {ErrorCode::DuplicateRegistration, "key is already registered or pending registration"};
            break;
        case TxKind::Removable:
            s = admit_removable(ledger, tx, id);
            break;
        case TxKind::Prepare:
            s = admit_prepare(ledger, tx);
            break;
        case TxKind::Delete:
            s = admit_delete(ledger, tx);
            break;
        case TxKind::Info:
            if (!signer_known(ledger, tx.signer, nullptr))
                s = {ErrorCode::UnknownSigner, "signer " + tx.signer.short_hex() + " has no registration"};
            else if (!signer_known(ledger, tx.signer, &tx.inputs[0].txid))
                s = {ErrorCode::UnknownRegisterRef, "input is not the signer's register output"};
            break;
        case TxKind::Consent:
            s = admit_consent(ledger, tx);
            break;
    }
    if (!s)
        return s;

    pending_.push_back(PendingTx{id, tx});
    index_.insert(id);
    if (tx.kind == TxKind::Prepare)
        enqueue_duplicates(ledger, tx, id);
    return Status::ok();
}

void Mempool::enqueue_duplicates(const Ledger& ledger, const Transaction& prep, const TxId& prep_id) {
    const IntervalIndex x = prep.target_interval();
    for (const auto& block : ledger.interval_blocks(x)) {
        for (const auto& t : block.transactions) {
            if (t.signer == prep.signer)
                continue;
            TxId id = tx_id(t);
            if (occurs_after(ledger, id, x))
                continue;
            bool queued = std::any_of(queue_.begin(), queue_.end(), [&](const ReinclusionEntry& e) {
                return e.txid == id && e.target == x;
            });
            if (!queued)
                queue_.push_back(ReinclusionEntry{id, t, prep_id, x});
        }
    }
}

// ---------------------------------------------------------------------------
// candidate assembly

Candidate Mempool::build_candidate(const Ledger& ledger) const {
    const Height k = ledger.tip_height() + 1;
    const std::size_t target = config_.schedule.at(k);
    const std::size_t capacity = std::max<std::size_t>(1, config_.block_tx_capacity);

    std::vector<std::vector<Transaction>> batches;
    std::set<TxId> placed;
    std::set<PubKey> signers;

    auto place = [&](const TxId& id, const Transaction& tx, bool duplicate) {
        if (target == 0 || placed.contains(id) || (!duplicate && ledger.occurrences(id)))
            return;
        auto reg = ledger.registration(tx.signer);
        if (!reg || tx.inputs[0].txid != *reg)
            return;  // register must be confirmed before the interval opens
        if (!signers.contains(tx.signer) && signers.size() >= kPListCapacity)
            return;
        if (batches.empty() || batches.back().size() >= capacity) {
            if (batches.size() >= target)
                return;
            batches.emplace_back();
        }
        batches.back().push_back(tx);
        placed.insert(id);
        signers.insert(tx.signer);
    };

    for (const auto& e : queue_) {
        if (!occurs_after(ledger, e.txid, e.target))
            place(e.txid, e.tx, true);
    }
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Removable)
            place(p.txid, p.tx, false);
    }

    std::vector<RemovableBlock> interval;
    Hash32 prev = ledger.tip_hash();
    for (auto& batch : batches) {
        interval.push_back(
            build_removable_block(prev, k, static_cast<std::uint16_t>(interval.size() + 1), std::move(batch)));
        prev = interval.back().hash();
    }

    BlockDraft draft(ledger, interval);
    if (!draft.interval_status()) {
        interval.clear();
        draft = BlockDraft(ledger, interval);
    }
    const std::uint32_t lock = ledger.config().delete_lock;
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Removable)
            continue;
        // Deletes wait for the deletion lock.
        if (p.tx.kind == TxKind::Delete && draft.height() < std::uint64_t{p.tx.target_interval()} + lock)
            continue;
        (void)draft.try_add(p.tx);
    }
    return Candidate{std::move(interval), draft.seal()};
}

// ---------------------------------------------------------------------------
// post-block maintenance

namespace {

bool terminal(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateRegistration:
        case ErrorCode::AlreadyConfirmed:
        case ErrorCode::IntervalAlreadyDeleted:
        case ErrorCode::ConsentInputSpent:
        case ErrorCode::ConsentChainExists:
        case ErrorCode::DuplicatePrepare:
        case ErrorCode::NotEligible:
        case ErrorCode::PrepareSignerMismatch:
        case ErrorCode::RejectedByMiners:
        case ErrorCode::BadSignature:
        case ErrorCode::ShapeViolation:
            return true;
        default:
            return false;
    }
}

}  // namespace

void Mempool::on_block_applied(const Ledger& ledger, const std::vector<RemovableBlock>& interval,
                               const PermanentBlock& block) {
    std::set<TxId> confirmed;
    for (const auto& b : interval)
        for (const auto& tx : b.transactions)
            confirmed.insert(tx_id(tx));
    for (const auto& tx : block.transactions)
        confirmed.insert(tx_id(tx));

    auto drop = [&](const PendingTx& p) {
        if (confirmed.contains(p.txid))
            return true;
        if (p.tx.kind == TxKind::Removable)
            return false;
        if (ledger.confirmation_height(p.txid))
            return true;
        BlockDraft probe(ledger, {});
        Status s = probe.try_add(p.tx);
        return !s && terminal(s.code());
    };
    std::erase_if(pending_, drop);
    index_.clear();
    for (const auto& p : pending_)
        index_.insert(p.txid);

    const IntervalIndex closed = block.header.height;
    std::erase_if(queue_, [&](const ReinclusionEntry& e) {
        if (confirmed.contains(e.txid) && closed > e.target)
            return true;
        if (occurs_after(ledger, e.txid, e.target))
            return true;
        return !index_.contains(e.prepare);
    });

    // Duplicates lost to a later deletion are queued again.
    for (const auto& p : pending_) {
        if (p.tx.kind == TxKind::Prepare)
            enqueue_duplicates(ledger, p.tx, p.txid);
    }
}

}  // namespace mutachain
