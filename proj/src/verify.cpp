#include "mutachain/verify.hpp"

#include <set>

namespace mutachain {

ChainData ChainData::from_ledger(const Ledger& ledger) {
    ChainData data;
    data.permanent = ledger.permanent_blocks();
    data.removable = ledger.removable_blocks();
    return data;
}

std::string Violation::to_string() const {
    std::string out(error_name(code));
    if (interval)
        out += " (interval " + std::to_string(*interval) + ")";
    else if (height)
        out += " (height " + std::to_string(*height) + ")";
    if (!detail.empty())
        out += ": " + detail;
    return out;
}

bool VerificationReport::has(ErrorCode code, std::optional<IntervalIndex> interval) const {
    for (const auto& v : violations) {
        if (v.code == code && (!interval || v.interval == interval))
            return true;
    }
    return false;
}

namespace {

std::map<IntervalIndex, std::vector<Height>> scan_delete_evidence(const std::vector<PermanentBlock>& chain) {
    std::map<IntervalIndex, std::vector<Height>> evidence;
    for (const auto& b : chain) {
        for (const auto& tx : b.transactions) {
            if (tx.kind == TxKind::Delete && std::holds_alternative<IntervalTarget>(tx.payload))
                evidence[tx.target_interval()].push_back(b.header.height);
        }
    }
    return evidence;
}

}  // namespace

ReplayResult replay_chain(const ChainData& data, const LedgerConfig& config) {
    ReplayResult result;
    auto& report = result.report;
    auto violate = [&](ErrorCode code, std::optional<Height> h, std::optional<IntervalIndex> i, std::string detail) {
        report.violations.push_back(Violation{code, h, i, std::move(detail)});
    };

    if (data.permanent.empty()) {
        violate(ErrorCode::UnknownParent, std::nullopt, std::nullopt, "store holds no genesis block");
        return result;
    }
    const auto& chain = data.permanent;
    const Height tip = static_cast<Height>(chain.size() - 1);
    report.tip_height = tip;

    std::optional<Ledger> ledger;
    try {
        ledger.emplace(chain[0], config);
    } catch (const std::exception& e) {
        violate(ErrorCode::BlockShapeError, 0, std::nullopt, e.what());
        return result;
    }

    // Pass 1: structure. Permanent links, then every interval's presence.
    for (Height h = 1; h <= tip; ++h) {
        const auto& hdr = chain[h].header;
        if (hdr.height != h)
            violate(ErrorCode::UnknownParent, h, std::nullopt, "header height " + std::to_string(hdr.height));
        if (hdr.prev_permanent != chain[h - 1].hash())
            violate(ErrorCode::UnknownParent, h, std::nullopt, "permanent link to B_" + std::to_string(h - 1) + " broken");
        if (hdr.tx_root != compute_tx_root(chain[h].transactions))
            violate(ErrorCode::TxRootMismatch, h, std::nullopt, "tx_root does not match body");
    }

    for (const auto& [i, blocks] : data.removable) {
        if (i == 0 || i > tip)
            violate(ErrorCode::BlockShapeError, std::nullopt, i, "removable blocks for an interval with no permanent block");
        else if (chain[i].header.interval_len == 0 && !blocks.empty())
            violate(ErrorCode::IntervalLenMismatch, i, i, "blocks stored for an empty interval");
    }

    const auto evidence = scan_delete_evidence(chain);
    std::set<IntervalIndex> gaps;
    for (Height h = 1; h <= tip; ++h) {
        const auto& hdr = chain[h].header;
        if (hdr.interval_len == 0)
            continue;
        auto it = data.removable.find(h);
        if (it == data.removable.end() || it->second.empty()) {
            bool has_evidence = false;
            if (auto ev = evidence.find(h); ev != evidence.end())
                for (Height at : ev->second)
                    has_evidence = has_evidence || at > h;
            if (has_evidence)
                gaps.insert(h);
            else
                violate(ErrorCode::MissingDeleteEvidence, h, h, "interval absent with no confirmed delete for it");
            continue;
        }
        const auto& blocks = it->second;
        if (blocks.size() != hdr.interval_len) {
            violate(ErrorCode::IntervalLenMismatch, h, h,
                    "header says " + std::to_string(hdr.interval_len) + ", store holds " + std::to_string(blocks.size()));
            continue;
        }
        if (auto s = check_interval_chain(chain[h - 1].hash(), h, blocks); !s) {
            violate(s.code(), h, h, s.detail());
            continue;
        }
        if (hdr.prev_removable != blocks.back().hash())
            violate(ErrorCode::BrokenIntervalChain, h, h, "prev_removable does not reach the interval's last block");
        if (hdr.p_list != derive_p_list(blocks))
            violate(ErrorCode::PListMismatch, h, h, "stored P-list differs from the interval's signers");
    }
    if (!report.valid())
        return result;

    // Pass 2: stateful replay with missing intervals withheld.
    for (IntervalIndex g : gaps)
        ledger->expect_withheld(g);
    for (Height h = 1; h <= tip; ++h) {
        Status s;
        if (gaps.contains(h)) {
            s = ledger->apply_permanent(chain[h]);
        } else {
            auto it = data.removable.find(h);
            static const std::vector<RemovableBlock> none;
            s = ledger->apply_bundle(it == data.removable.end() ? none : it->second, chain[h]);
        }
        if (!s) {
            violate(s.code(), h, h, s.detail());
            return result;
        }
    }
    for (IntervalIndex g : gaps) {
        if (ledger->interval_status(g).state != IntervalStatus::State::Deleted) {
            violate(ErrorCode::MissingDeleteEvidence, std::nullopt, g, "no valid confirmed delete covers the gap");
            continue;
        }
        const DeleteRecord* rec = ledger->confirmed_delete(g);
        if (tip - rec->height < config.confirm_depth || rec->height - g < config.delete_lock)
            violate(ErrorCode::PrematureGap, rec->height, g, "interval removed before its delete matured");
    }
    if (!report.valid())
        return result;

    ledger->prune_deletable();
    for (const auto& [i, st] : ledger->intervals()) {
        if (st.state == IntervalStatus::State::Present)
            ++report.present_intervals;
        else if (st.state == IntervalStatus::State::Deleted)
            ++report.deleted_intervals;
    }
    for (const auto& [i, blocks] : ledger->removable_blocks())
        report.removable_blocks += blocks.size();
    result.ledger = std::move(ledger);
    return result;
}

}  // namespace mutachain
