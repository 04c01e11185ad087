#include <doctest.h>

#include "mutachain/verify.hpp"
#include "support/fixtures.hpp"

using namespace mutachain;
using namespace mutachain::testing;

namespace {

std::vector<PubKey> sorted_keys(std::vector<PubKey> keys) {
    std::sort(keys.begin(), keys.end());
    return keys;
}

}  // namespace

TEST_CASE("build_removable_block") {
    Walkthrough f;
    Hash32 b0 = f.ledger.tip_hash();
    auto b11 = build_removable_block(b0, 1, 1, {f.rem_m, f.rem_n});
    CHECK(b11.header.interval == 1);
    CHECK(b11.header.position == 1);
    CHECK(b11.header.prev == b0);
    CHECK(b11.transactions.size() == 2);
    CHECK(b11.header.tx_root == compute_tx_root(b11.transactions));

    auto empty = build_removable_block(b0, 1, 1, {});
    CHECK(empty.transactions.empty());

    CHECK_THROWS_AS(build_removable_block(b0, 1, 1, {f.a.reg}), BlockError);
    try {
        (void)build_removable_block(b0, 1, 1, {f.a.reg});
    } catch (const BlockError& e) {
        CHECK(e.code() == ErrorCode::BlockShapeError);
    }
}

TEST_CASE("build_permanent_block with a two-signer interval") {
    Walkthrough f;
    auto blocks = chain_interval(f.ledger, {{f.rem_m, f.rem_n}});
    PermanentBlock b1 = build_permanent_block(f.ledger, blocks, {});
    CHECK(b1.header.height == 1);
    CHECK(b1.header.interval_len == 1);
    CHECK(b1.header.p_list == sorted_keys({f.a.pk(), f.b.pk()}));
    CHECK(b1.header.prev_permanent == f.ledger.tip_hash());
    CHECK(b1.header.prev_removable == blocks.back().hash());
}

TEST_CASE("build_permanent_block with an empty interval") {
    Entity a = entity("A");
    Ledger ledger = genesis_ledger({});
    PermanentBlock b = build_permanent_block(ledger, {}, {a.reg});
    CHECK(b.header.interval_len == 0);
    CHECK(b.header.prev_removable == NULL_HASH);
    CHECK(b.header.p_list.empty());
    CHECK(ledger.apply_permanent(b));
    CHECK(ledger.registration(a.pk()) == a.reg_id);
}

TEST_CASE("five signers overflow the P-list") {
    std::vector<Entity> es;
    std::vector<Transaction> rems;
    for (int i = 0; i < 5; ++i) {
        es.push_back(entity("E" + std::to_string(i)));
        rems.push_back(es.back().rem("d" + std::to_string(i)));
    }
    Ledger ledger = genesis_ledger(es);
    auto blocks = chain_interval(ledger, {rems});
    try {
        (void)build_permanent_block(ledger, blocks, {});
        FAIL("expected PListOverflow");
    } catch (const BlockError& e) {
        CHECK(e.code() == ErrorCode::PListOverflow);
    }
    rems.pop_back();
    blocks = chain_interval(ledger, {rems});
    CHECK(build_permanent_block(ledger, blocks, {}).header.p_list.size() == 4);
}

TEST_CASE("broken interval chain is refused by the builder") {
    Walkthrough f;
    auto blocks = chain_interval(f.ledger, {{f.rem_m}, {f.rem_n}});
    blocks[1].header.prev = digest(to_bytes("elsewhere"));
    try {
        (void)build_permanent_block(f.ledger, blocks, {});
        FAIL("expected BrokenIntervalChain");
    } catch (const BlockError& e) {
        CHECK(e.code() == ErrorCode::BrokenIntervalChain);
    }
}

TEST_CASE("derive_p_list") {
    Walkthrough f;
    auto blocks = chain_interval(f.ledger, {{f.rem_m, f.rem_n}});
    CHECK(derive_p_list(blocks) == sorted_keys({f.a.pk(), f.b.pk()}));
    CHECK(derive_p_list({}).empty());
    auto only_b = chain_interval(f.ledger, {{f.b.rem("1"), f.b.rem("2")}, {f.b.rem("3")}});
    CHECK(derive_p_list(only_b) == std::vector<PubKey>{f.b.pk()});

    // Multiplicity never matters: every signer assignment over three keys
    // yields exactly the distinct set.
    std::vector<Entity> es{entity("X"), entity("Y"), entity("Z")};
    for (int mask = 0; mask < 27; ++mask) {
        std::vector<Transaction> txs;
        std::set<PubKey> expect;
        int m = mask;
        for (int slot = 0; slot < 3; ++slot, m /= 3) {
            txs.push_back(es[m % 3].rem("s" + std::to_string(slot)));
            expect.insert(es[m % 3].pk());
        }
        auto bl = chain_interval(f.ledger, {txs});
        CHECK(derive_p_list(bl) == std::vector<PubKey>(expect.begin(), expect.end()));
    }
}

TEST_CASE("genesis registers the initial keys") {
    Walkthrough f;
    CHECK(f.ledger.tip_height() == 0);
    CHECK(f.ledger.registration(f.a.pk()) == f.a.reg_id);
    CHECK(f.ledger.registration(f.b.pk()) == f.b.reg_id);
    CHECK_FALSE(f.ledger.registration(entity("C").pk()));
}

TEST_CASE("interval length mismatch") {
    Walkthrough f;
    auto blocks = chain_interval(f.ledger, {{f.rem_m, f.rem_n}});
    PermanentBlock b1 = build_permanent_block(f.ledger, blocks, {});
    b1.header.interval_len = 2;
    CHECK(f.ledger.apply_bundle(blocks, b1).code() == ErrorCode::IntervalLenMismatch);
    CHECK(f.ledger.tip_height() == 0);
    CHECK(f.ledger.pending_interval().empty());
}

TEST_CASE("wrong P-list is rejected") {
    Walkthrough f;
    auto blocks = chain_interval(f.ledger, {{f.rem_m, f.rem_n}});
    PermanentBlock b1 = build_permanent_block(f.ledger, blocks, {});
    b1.header.p_list = {f.a.pk()};
    CHECK(f.ledger.apply_bundle(blocks, b1).code() == ErrorCode::PListMismatch);
}

TEST_CASE("unknown parent") {
    Walkthrough f;
    PermanentBlock b1 = build_permanent_block(f.ledger, {}, {});
    b1.header.prev_permanent = digest(to_bytes("nowhere"));
    CHECK(f.ledger.apply_permanent(b1).code() == ErrorCode::UnknownParent);
    PermanentBlock b2 = build_permanent_block(f.ledger, {}, {});
    b2.header.height = 2;
    CHECK(f.ledger.apply_permanent(b2).code() == ErrorCode::UnknownParent);
}

TEST_CASE("stateful transaction errors") {
    Walkthrough f;
    Entity c = entity("C");
    CHECK(extend(f.ledger, {}, {f.a.reg}).code() == ErrorCode::AlreadyConfirmed);
    Transaction a_reg_again = make_register(f.a.kp);
    CHECK(a_reg_again == f.a.reg);

    CHECK(extend(f.ledger, {{c.rem("x")}}).code() == ErrorCode::UnknownRegisterRef);
    Transaction foreign = make_removable(c.kp, f.a.reg_id, to_bytes("x"));
    CHECK(extend(f.ledger, {{foreign}}).code() == ErrorCode::UnknownRegisterRef);
    CHECK(extend(f.ledger, {}, {c.prep(1)}).code() == ErrorCode::UnknownSigner);
    CHECK(extend(f.ledger, {}, {f.a.prep(1)}).code() == ErrorCode::UnknownInterval);
    CHECK(f.ledger.tip_height() == 0);

    CHECK(extend(f.ledger, {}, {c.reg}));
    Transaction dup_reg = make_register(c.kp);
    CHECK(dup_reg == c.reg);
}

TEST_CASE("a transaction may not appear twice in one interval") {
    Walkthrough f;
    CHECK(extend(f.ledger, {{f.rem_m}, {f.rem_m}}).code() == ErrorCode::BlockShapeError);
    CHECK(extend(f.ledger, {{f.rem_m, f.rem_m}}).code() == ErrorCode::BlockShapeError);
}

TEST_CASE("walkthrough: state 1") {
    Walkthrough f;
    REQUIRE(f.state1());
    CHECK(f.ledger.tip_height() == 2);
    const auto& b1 = f.ledger.permanent(1);
    const auto& b2 = f.ledger.permanent(2);
    CHECK(b1.header.p_list == sorted_keys({f.a.pk(), f.b.pk()}));
    CHECK(b2.header.p_list == std::vector<PubKey>{f.b.pk()});
    CHECK(b2.transactions == std::vector<Transaction>{f.prep1});
    auto i2 = f.ledger.interval_blocks(2);
    REQUIRE(i2.size() == 1);
    CHECK(i2[0].transactions == std::vector<Transaction>{f.rem_n});
    CHECK(*f.ledger.occurrences(tx_id(f.rem_n)) == std::set<IntervalIndex>{1, 2});
    CHECK(f.ledger.confirmed_prepare(1, f.a.pk()) == tx_id(f.prep1));
}

TEST_CASE("validate_prepare") {
    Walkthrough f;
    REQUIRE(extend(f.ledger, {{f.rem_m, f.rem_n}}));

    SUBCASE("ok once the duplicate is in a later interval") {
        REQUIRE(extend(f.ledger, {{f.rem_n}}));
        CHECK(f.ledger.validate_prepare(f.prep1, 3));
    }
    SUBCASE("duplicate in the interval closed by the confirming block counts") {
        BlockDraft draft(f.ledger, chain_interval(f.ledger, {{f.rem_n}}));
        CHECK(draft.try_add(f.prep1));
    }
    SUBCASE("missing duplicate") {
        Status s = f.ledger.validate_prepare(f.prep1, 2);
        CHECK(s.code() == ErrorCode::MissingDuplicates);
        CHECK(s.detail().find(tx_id(f.rem_n).short_hex()) != std::string::npos);
        CHECK(extend(f.ledger, {{f.rem_o}}, {f.prep1}).code() == ErrorCode::MissingDuplicates);
    }
    SUBCASE("signer outside the P-list") {
        Entity c = entity("C");
        REQUIRE(extend(f.ledger, {}, {c.reg}));
        CHECK(f.ledger.validate_prepare(c.prep(1), 3).code() == ErrorCode::NotEligible);
    }
    SUBCASE("already deleted") {
        REQUIRE(extend(f.ledger, {{f.rem_n}}, {f.prep1}));
        REQUIRE(extend(f.ledger, {}, {f.del1}));
        CHECK(f.ledger.validate_prepare(f.b.prep(1), 4).code() == ErrorCode::IntervalAlreadyDeleted);
    }
}

TEST_CASE("validate_delete") {
    Walkthrough f;
    REQUIRE(f.state1());

    CHECK(f.ledger.validate_delete(f.del1, 3));
    CHECK(f.ledger.validate_delete(make_delete(f.b.kp, 2), 3));
    CHECK(f.ledger.validate_delete(make_delete(f.b.kp, 1, tx_id(f.prep1)), 3).code() ==
          ErrorCode::PrepareSignerMismatch);
    CHECK(f.ledger.validate_delete(make_delete(f.a.kp, 1), 3).code() == ErrorCode::NotSoleOwnerAndNoPrepare);
    CHECK(f.ledger.validate_delete(make_delete(f.a.kp, 2), 3).code() == ErrorCode::NotSoleOwnerAndNoPrepare);
    CHECK(f.ledger.validate_delete(make_delete(f.a.kp, 7), 3).code() == ErrorCode::UnknownInterval);
    CHECK(f.ledger.validate_delete(make_delete(f.a.kp, 1, digest(to_bytes("no prepare"))), 3).code() ==
          ErrorCode::UnknownPrepareRef);

    REQUIRE(extend(f.ledger, {}, {f.del1}));
    CHECK(f.ledger.validate_delete(make_delete(f.b.kp, 1), 4).code() == ErrorCode::IntervalAlreadyDeleted);
}

TEST_CASE("a delete and its prepare may not share a block") {
    Walkthrough f;
    REQUIRE(extend(f.ledger, {{f.rem_m, f.rem_n}}));
    CHECK(extend(f.ledger, {{f.rem_n}}, {f.prep1, f.del1}).code() == ErrorCode::UnknownPrepareRef);
}

TEST_CASE("deleting an empty interval") {
    Walkthrough f;
    REQUIRE(extend(f.ledger, {}));
    CHECK(f.ledger.validate_delete(make_delete(f.a.kp, 1), 2).code() == ErrorCode::UnknownInterval);
}

TEST_CASE("unauthorized policy defers to miner judgment") {
    LedgerConfig cfg = Walkthrough::walkthrough_config();
    cfg.policy = RemovalPolicy::Unauthorized;
    Walkthrough f(cfg);
    REQUIRE(extend(f.ledger, {{f.rem_m, f.rem_n}}));
    Entity c = entity("C");
    REQUIRE(extend(f.ledger, {}, {c.reg}));
    CHECK(f.ledger.validate_delete(make_delete(c.kp, 1), 3));

    cfg.miner_judgment = [&](const Transaction& del) { return del.signer == f.a.pk(); };
    Walkthrough g(cfg);
    REQUIRE(extend(g.ledger, {{g.rem_m, g.rem_n}}));
    CHECK(g.ledger.validate_delete(make_delete(g.a.kp, 1), 2));
    CHECK(g.ledger.validate_delete(make_delete(g.b.kp, 1), 2).code() == ErrorCode::RejectedByMiners);
}

TEST_CASE("walkthrough: state 2 and pruning") {
    Walkthrough f;
    REQUIRE(f.state1());
    REQUIRE(extend(f.ledger, {{f.rem_o}}, {f.del1}));
    CHECK(f.ledger.deletable_intervals().empty());
    CHECK(f.ledger.prune_deletable().empty());
    CHECK(f.ledger.interval_status(1).state == IntervalStatus::State::Present);

    Hash32 b1_hash = f.ledger.permanent(1).hash();
    REQUIRE(extend(f.ledger, {}));
    CHECK(f.ledger.prune_deletable() == std::vector<IntervalIndex>{1});
    CHECK(f.ledger.interval_blocks(1).empty());
    CHECK(f.ledger.permanent(1).hash() == b1_hash);
    auto st = f.ledger.interval_status(1);
    CHECK(st.state == IntervalStatus::State::Deleted);
    CHECK(st.del_txid == tx_id(f.del1));
    CHECK(st.deleted_at_height == 3);
    CHECK(f.ledger.prune_deletable().empty());
    CHECK(*f.ledger.occurrences(tx_id(f.rem_n)) == std::set<IntervalIndex>{2});
    CHECK(f.ledger.occurrences(tx_id(f.rem_m)) == nullptr);
}

TEST_CASE("pruning waits for confirmations and the lock") {
    LedgerConfig cfg;
    cfg.confirm_depth = 3;
    cfg.delete_lock = 3;
    Walkthrough f(cfg);
    REQUIRE(f.state1());
    REQUIRE(extend(f.ledger, {}, {f.del1}));  // delete at height 3, lock distance 2
    for (int i = 0; i < 5; ++i) {
        REQUIRE(extend(f.ledger, {}));
        CHECK(f.ledger.prune_deletable().empty());
    }

    LedgerConfig cfg2;
    cfg2.confirm_depth = 3;
    cfg2.delete_lock = 0;
    Walkthrough g(cfg2);
    REQUIRE(g.state1());
    REQUIRE(extend(g.ledger, {}, {g.del1}));
    REQUIRE(extend(g.ledger, {}));
    REQUIRE(extend(g.ledger, {}));
    CHECK(g.ledger.prune_deletable().empty());  // D - 1 confirmations
    REQUIRE(extend(g.ledger, {}));
    CHECK(g.ledger.prune_deletable() == std::vector<IntervalIndex>{1});
}

TEST_CASE("deleted intervals never come back") {
    Walkthrough f;
    REQUIRE(f.state1());
    REQUIRE(f.state2());
    REQUIRE(f.ledger.prune_deletable() == std::vector<IntervalIndex>{1});
    auto old = build_removable_block(f.ledger.permanent(0).hash(), 1, 1, {f.rem_m, f.rem_n});
    CHECK(f.ledger.apply_removable(old).code() == ErrorCode::RemovableTxDependsOnDeletedState);
    CHECK(f.ledger.interval_status(1).state == IntervalStatus::State::Deleted);
}

TEST_CASE("no-prune queries with nothing deleted") {
    Walkthrough f;
    REQUIRE(f.state1());
    CHECK(f.ledger.prune_deletable().empty());
}

TEST_CASE("header overhead") {
    PermanentBlockHeader h;
    auto o = header_overhead(h);
    CHECK(o.second_link == 32);
    CHECK(o.interval_len == 1);
    CHECK(o.second_link + o.interval_len == 33);
    CHECK(o.fixed == 33);

    for (int i = 0; i < 4; ++i)
        h.p_list.push_back(keypair_from_label("k" + std::to_string(i)).pubkey);
    std::sort(h.p_list.begin(), h.p_list.end());
    auto o4 = header_overhead(h);
    CHECK(o4.p_list == 1 + 4 * 32);
    CHECK(o4.total == 162);
    CHECK(o4.fixed == 33);

    PermanentBlockHeader zero;
    zero.interval_len = 0;
    CHECK(header_overhead(zero).fixed == 33);
}

TEST_CASE("verify_chain on walkthrough state 2") {
    Walkthrough f;
    REQUIRE(f.state1());
    REQUIRE(f.state2());
    f.ledger.prune_deletable();
    ChainData data = ChainData::from_ledger(f.ledger);
    CHECK_FALSE(data.removable.contains(1));

    auto result = replay_chain(data, f.ledger.config());
    CHECK(result.report.valid());
    REQUIRE(result.ledger);
    CHECK(result.ledger->state_digest() == f.ledger.state_digest());
    CHECK(result.report.deleted_intervals == 1);

    ChainData stripped = data;
    auto& b3 = stripped.permanent[3];
    b3.transactions.clear();
    b3.header.tx_root = compute_tx_root(b3.transactions);
    auto bad = verify_chain(stripped, f.ledger.config());
    CHECK_FALSE(bad.valid());
    CHECK(bad.has(ErrorCode::MissingDeleteEvidence, 1));
}

TEST_CASE("verify_chain catches tampering") {
    Walkthrough f;
    REQUIRE(f.state1());
    ChainData data = ChainData::from_ledger(f.ledger);
    CHECK(verify_chain(data, f.ledger.config()).valid());

    SUBCASE("interval dropped without a delete") {
        data.removable.erase(2);
        CHECK(verify_chain(data, f.ledger.config()).has(ErrorCode::MissingDeleteEvidence, 2));
    }
    SUBCASE("removable body altered") {
        data.removable[1][0].transactions.pop_back();
        CHECK_FALSE(verify_chain(data, f.ledger.config()).valid());
    }
    SUBCASE("permanent link broken") {
        data.permanent[1].header.tx_root = digest(to_bytes("x"));
        auto r = verify_chain(data, f.ledger.config());
        CHECK_FALSE(r.valid());
    }
    SUBCASE("P-list forged") {
        data.permanent[2].header.p_list = {f.a.pk()};
        CHECK_FALSE(verify_chain(data, f.ledger.config()).valid());
    }
}

TEST_CASE("verify_chain rejects a gap removed before the delete matured") {
    LedgerConfig cfg;
    cfg.confirm_depth = 5;
    cfg.delete_lock = 0;
    Walkthrough f(cfg);
    REQUIRE(f.state1());
    REQUIRE(f.state2());
    ChainData data = ChainData::from_ledger(f.ledger);
    data.removable.erase(1);
    CHECK(verify_chain(data, cfg).has(ErrorCode::PrematureGap, 1));
}

TEST_CASE("chain of custody: prev links reach the previous permanent block") {
    Walkthrough f;
    REQUIRE(extend(f.ledger, {{f.rem_m}, {f.rem_n}, {f.b.rem("x")}}));
    const auto& b1 = f.ledger.permanent(1);
    auto blocks = f.ledger.interval_blocks(1);
    Hash32 cursor = b1.header.prev_removable;
    std::size_t hops = 0;
    while (cursor != f.ledger.permanent(0).hash()) {
        auto it = std::find_if(blocks.begin(), blocks.end(), [&](const auto& b) { return b.hash() == cursor; });
        REQUIRE(it != blocks.end());
        cursor = it->header.prev;
        ++hops;
    }
    CHECK(hops == b1.header.interval_len);
}

TEST_CASE("ledger copies are independent") {
    Walkthrough f;
    Ledger copy = f.ledger;
    REQUIRE(f.state1());
    CHECK(copy.tip_height() == 0);
    CHECK(copy.state_digest() != f.ledger.state_digest());
}
