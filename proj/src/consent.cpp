#include "mutachain/consent.hpp"

#include <algorithm>
#include <map>

namespace mutachain {

PurposeSchema PurposeSchema::from_info(const InfoRecord& record) {
    return PurposeSchema{record.txid, record.info.controller, record.info.purposes};
}

std::uint64_t encode_consent_value(const PurposeSchema& schema, const std::set<std::string>& granted) {
    std::uint64_t value = 0;
    for (const auto& label : granted) {
        auto it = std::find(schema.purposes.begin(), schema.purposes.end(), label);
        if (it == schema.purposes.end())
            throw ConsentError(ErrorCode::UnknownLabel, "purpose '" + label + "' is not declared by the info");
        value |= std::uint64_t{1} << (it - schema.purposes.begin());
    }
    return value;
}

std::set<std::string> decode_consent_value(const PurposeSchema& schema, std::uint64_t value) {
    std::set<std::string> granted;
    for (std::size_t k = 0; k < schema.purposes.size() && k < 64; ++k) {
        if (value & (std::uint64_t{1} << k))
            granted.insert(schema.purposes[k]);
    }
    return granted;
}

namespace {

struct ConsentGraph {
    std::vector<const ConfirmedTx*> roots;                // chains started from a register output
    std::map<OutPoint, const ConfirmedTx*> spent_by;      // consent output -> spending consent
};

ConsentGraph build_graph(const Ledger& ledger, const TxId& info) {
    if (!ledger.info(info))
        throw ConsentError(ErrorCode::UnknownInfo, "no confirmed info transaction " + info.short_hex());
    ConsentGraph g;
    for (const auto& c : ledger.consent_log()) {
        if (c.tx.info_ref().txid != info)
            continue;
        const OutPoint& input = c.tx.inputs[0];
        auto reg = ledger.registration(c.tx.signer);
        if (reg && input == register_output(*reg))
            g.roots.push_back(&c);
        else
            g.spent_by[input] = &c;
    }
    return g;
}

std::vector<const ConfirmedTx*> walk(const ConsentGraph& g, const ConfirmedTx* root) {
    std::vector<const ConfirmedTx*> chain{root};
    while (true) {
        auto next = g.spent_by.find(OutPoint{chain.back()->txid, 0});
        if (next == g.spent_by.end())
            break;
        chain.push_back(next->second);
    }
    return chain;
}

ConsentStep step_of(const ConfirmedTx* c) { return ConsentStep{c->txid, c->tx.value, c->height}; }

}  // namespace

std::optional<ConsentState> current_consent(const Ledger& ledger, const PubKey& subject, const TxId& info) {
    ConsentGraph g = build_graph(ledger, info);
    const auto& utxos = ledger.consent_utxos();
    for (const ConfirmedTx* root : g.roots) {
        if (root->tx.signer != subject)
            continue;
        auto chain = walk(g, root);
        OutPoint tip{chain.back()->txid, 0};
        if (!utxos.contains(tip))
            continue;  // retired chain
        ConsentState state;
        state.subject = subject;
        state.info_txid = info;
        state.value = chain.back()->tx.value;
        state.tip = tip;
        for (const auto* c : chain)
            state.history.push_back(step_of(c));
        return state;
    }
    return std::nullopt;
}

std::vector<AuditEntry> audit_trail(const Ledger& ledger, const TxId& info) {
    ConsentGraph g = build_graph(ledger, info);
    const auto& utxos = ledger.consent_utxos();
    std::vector<AuditEntry> out;
    std::map<PubKey, std::size_t> slot;
    for (const ConfirmedTx* root : g.roots) {
        const PubKey& subject = root->tx.signer;
        auto [it, fresh] = slot.try_emplace(subject, out.size());
        if (fresh)
            out.push_back(AuditEntry{subject, {}, 0});
        AuditEntry& entry = out[it->second];
        auto chain = walk(g, root);
        for (const auto* c : chain)
            entry.history.push_back(step_of(c));
        if (utxos.contains(OutPoint{chain.back()->txid, 0}))
            entry.current = chain.back()->tx.value;
    }
    return out;
}

}  // namespace mutachain
