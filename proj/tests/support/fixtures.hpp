#pragma once

#include <string>
#include <vector>

#include "mutachain/ledger.hpp"

namespace mutachain::testing {

struct Entity {
    std::string name;
    KeyPair kp;
    Transaction reg;
    TxId reg_id;

    [[nodiscard]] const PubKey& pk() const { return kp.pubkey; }
    [[nodiscard]] Transaction rem(std::string_view data) const { return make_removable(kp, reg_id, to_bytes(data)); }
    [[nodiscard]] Transaction prep(IntervalIndex x) const { return make_prepare(kp, reg_id, x); }
};

inline Entity entity(const std::string& name) {
    Entity e{name, keypair_from_label(name), {}, {}};
    e.reg = make_register(e.kp);
    e.reg_id = tx_id(e.reg);
    return e;
}

inline Ledger genesis_ledger(const std::vector<Entity>& registered, LedgerConfig cfg = {}) {
    std::vector<Transaction> txs;
    for (const auto& e : registered)
        txs.push_back(e.reg);
    return Ledger(Ledger::make_genesis(std::move(txs)), std::move(cfg));
}

/// Interval blocks chained off the ledger tip, one block per inner vector.
inline std::vector<RemovableBlock> chain_interval(const Ledger& ledger, const std::vector<std::vector<Transaction>>& groups) {
    std::vector<RemovableBlock> out;
    Hash32 prev = ledger.tip_hash();
    IntervalIndex i = ledger.tip_height() + 1;
    std::uint16_t j = 1;
    for (const auto& g : groups) {
        out.push_back(build_removable_block(prev, i, j++, g));
        prev = out.back().hash();
    }
    return out;
}

/// Builds and applies the next interval plus its permanent block.
inline Status extend(Ledger& ledger, const std::vector<std::vector<Transaction>>& groups,
                     std::vector<Transaction> body = {}) {
    auto blocks = chain_interval(ledger, groups);
    PermanentBlock b = build_permanent_block(ledger, blocks, std::move(body));
    return ledger.apply_bundle(blocks, b);
}

/// The reference deletion walkthrough, built by hand:
///   B_0  Reg(A) Reg(B)
///   I_1  {Rem(m) by A, Rem(n) by B}           B_1
///   I_2  {Rem(n) duplicate}                   B_2  Prep(1) by A
///   I_3  {Rem(o) by A}                        B_3  Del(1) by A
///   B_4  empty
struct Walkthrough {
    Entity a = entity("A");
    Entity b = entity("B");
    Transaction rem_m = a.rem("m");
    Transaction rem_n = b.rem("n");
    Transaction rem_o = a.rem("o");
    Transaction prep1 = a.prep(1);
    Transaction del1 = make_delete(a.kp, 1, tx_id(prep1));
    Ledger ledger;

    explicit Walkthrough(LedgerConfig cfg = walkthrough_config()) : ledger(genesis_ledger({a, b}, std::move(cfg))) {}

    static LedgerConfig walkthrough_config() {
        LedgerConfig cfg;
        cfg.confirm_depth = 1;
        cfg.delete_lock = 0;
        return cfg;
    }

    Status state1() {
        if (auto s = extend(ledger, {{rem_m, rem_n}}); !s)
            return s;
        return extend(ledger, {{rem_n}}, {prep1});
    }
    Status state2() {
        if (auto s = extend(ledger, {{rem_o}}, {del1}); !s)
            return s;
        return extend(ledger, {});
    }
};

}  // namespace mutachain::testing
