#include <doctest.h>

#include "mutachain/consent.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace mutachain;
using namespace mutachain::testing;

namespace {

struct Shop {
    Entity alice = entity("Alice");
    Entity bob = entity("Bob");
    Entity carol = entity("Carol");
    Transaction info = make_info(alice.kp, alice.reg_id, "web shop", {"necessary", "functional", "performance"});
    TxId info_id = tx_id(info);
    Ledger ledger = genesis_ledger({alice, bob, carol});

    Shop() { REQUIRE(extend(ledger, {}, {info})); }

    PurposeSchema schema() const { return PurposeSchema::from_info(*ledger.info(info_id)); }
};

/// Naive oracle: a subject's consents to one info, in confirmation order,
/// read straight off the permanent blocks.
std::map<PubKey, std::vector<ConsentStep>> naive_history(const Ledger& ledger, const TxId& info) {
    std::map<PubKey, std::vector<ConsentStep>> out;
    for (const auto& b : ledger.permanent_blocks())
        for (const auto& tx : b.transactions)
            if (tx.kind == TxKind::Consent && tx.info_ref().txid == info)
                out[tx.signer].push_back(ConsentStep{tx_id(tx), tx.value, b.header.height});
    return out;
}

}  // namespace

TEST_CASE("purpose bitmask encoding") {
    Shop s;
    auto schema = s.schema();
    CHECK(schema.purposes == std::vector<std::string>{"necessary", "functional", "performance"});
    CHECK(encode_consent_value(schema, {"necessary"}) == 1);
    CHECK(encode_consent_value(schema, {"necessary", "functional"}) == 3);
    CHECK(encode_consent_value(schema, {}) == 0);
    CHECK(encode_consent_value(schema, {"performance"}) == 4);
    try {
        (void)encode_consent_value(schema, {"marketing"});
        FAIL("expected UnknownLabel");
    } catch (const ConsentError& e) {
        CHECK(e.code() == ErrorCode::UnknownLabel);
    }
}

TEST_CASE("property: decode inverts encode for every subset") {
    for (std::size_t n = 1; n <= 8; ++n) {
        PurposeSchema schema;
        for (std::size_t i = 0; i < n; ++i)
            schema.purposes.push_back("p" + std::to_string(i));
        for (std::uint64_t mask = 0; mask < (1u << n); ++mask) {
            std::set<std::string> granted;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i))
                    granted.insert(schema.purposes[i]);
            CHECK(encode_consent_value(schema, granted) == mask);
            CHECK(decode_consent_value(schema, mask) == granted);
        }
    }
}

TEST_CASE("consent chain 1, 3, 0") {
    Shop s;
    const auto& bob = s.bob;
    CHECK_FALSE(current_consent(s.ledger, bob.pk(), s.info_id));

    Transaction con1 = make_consent(bob.kp, register_output(bob.reg_id), s.info_id, 1);
    REQUIRE(extend(s.ledger, {}, {con1}));
    auto st1 = current_consent(s.ledger, bob.pk(), s.info_id);
    REQUIRE(st1);
    CHECK(st1->value == 1);
    CHECK(st1->tip == OutPoint{tx_id(con1), 0});

    Transaction con2 = make_consent(bob.kp, OutPoint{tx_id(con1), 0}, s.info_id, 3);
    REQUIRE(extend(s.ledger, {}, {con2}));
    auto st2 = current_consent(s.ledger, bob.pk(), s.info_id);
    REQUIRE(st2);
    CHECK(st2->value == 3);
    CHECK_FALSE(s.ledger.consent_utxos().contains(OutPoint{tx_id(con1), 0}));

    Transaction con3 = make_consent(bob.kp, OutPoint{tx_id(con2), 0}, s.info_id, 0);
    REQUIRE(extend(s.ledger, {}, {con3}));
    auto st3 = current_consent(s.ledger, bob.pk(), s.info_id);
    REQUIRE(st3);
    CHECK(st3->value == 0);
    CHECK(st3->revoked());
    CHECK(st3->tip == OutPoint{tx_id(con3), 0});
    CHECK(st3->history.size() == 3);
    CHECK(decode_consent_value(s.schema(), st2->value) == std::set<std::string>{"necessary", "functional"});

    auto trail = audit_trail(s.ledger, s.info_id);
    REQUIRE(trail.size() == 1);
    CHECK(trail[0].subject == bob.pk());
    CHECK(trail[0].current == 0);
    std::vector<std::pair<TxId, std::uint64_t>> got;
    for (const auto& step : trail[0].history)
        got.emplace_back(step.txid, step.value);
    CHECK(got == std::vector<std::pair<TxId, std::uint64_t>>{{tx_id(con1), 1}, {tx_id(con2), 3}, {tx_id(con3), 0}});

    SUBCASE("spent outputs cannot be reused") {
        Transaction replay = make_consent(bob.kp, OutPoint{tx_id(con1), 0}, s.info_id, 7);
        CHECK(extend(s.ledger, {}, {replay}).code() == ErrorCode::ConsentInputSpent);
    }
    SUBCASE("a fresh chain may start after revocation") {
        Transaction again = make_consent(bob.kp, register_output(bob.reg_id), s.info_id, 2);
        CHECK(again != con1);
        REQUIRE(extend(s.ledger, {}, {again}));
        auto st = current_consent(s.ledger, bob.pk(), s.info_id);
        REQUIRE(st);
        CHECK(st->value == 2);
        CHECK(st->history.size() == 1);
        auto t = audit_trail(s.ledger, s.info_id);
        REQUIRE(t.size() == 1);
        CHECK(t[0].history.size() == 4);
        CHECK(t[0].current == 2);
        CHECK_FALSE(s.ledger.consent_utxos().contains(OutPoint{tx_id(con3), 0}));
    }
}

TEST_CASE("consent rule violations") {
    Shop s;
    const auto& bob = s.bob;
    Transaction con1 = make_consent(bob.kp, register_output(bob.reg_id), s.info_id, 1);
    REQUIRE(extend(s.ledger, {}, {con1}));

    Transaction parallel = make_consent(bob.kp, register_output(bob.reg_id), s.info_id, 2);
    CHECK(extend(s.ledger, {}, {parallel}).code() == ErrorCode::ConsentChainExists);

    Transaction too_wide = make_consent(bob.kp, OutPoint{tx_id(con1), 0}, s.info_id, 8);
    CHECK(extend(s.ledger, {}, {too_wide}).code() == ErrorCode::ShapeViolation);

    Transaction no_info = make_consent(s.carol.kp, register_output(s.carol.reg_id), digest(to_bytes("none")), 1);
    CHECK(extend(s.ledger, {}, {no_info}).code() == ErrorCode::UnknownInfo);

    Transaction steal = make_consent(s.carol.kp, OutPoint{tx_id(con1), 0}, s.info_id, 1);
    CHECK_FALSE(extend(s.ledger, {}, {steal}));

    CHECK_THROWS_AS(current_consent(s.ledger, bob.pk(), digest(to_bytes("none"))), ConsentError);
    CHECK_THROWS_AS(audit_trail(s.ledger, digest(to_bytes("none"))), ConsentError);
}

TEST_CASE("info without consents has an empty trail") {
    Shop s;
    CHECK(audit_trail(s.ledger, s.info_id).empty());
}

TEST_CASE("two subjects keep independent chains") {
    Shop s;
    Transaction b1 = make_consent(s.bob.kp, register_output(s.bob.reg_id), s.info_id, 1);
    Transaction c1 = make_consent(s.carol.kp, register_output(s.carol.reg_id), s.info_id, 7);
    REQUIRE(extend(s.ledger, {}, {b1, c1}));
    Transaction b2 = make_consent(s.bob.kp, OutPoint{tx_id(b1), 0}, s.info_id, 5);
    REQUIRE(extend(s.ledger, {}, {b2}));

    auto trail = audit_trail(s.ledger, s.info_id);
    REQUIRE(trail.size() == 2);
    auto oracle = naive_history(s.ledger, s.info_id);
    for (const auto& entry : trail) {
        CHECK(entry.history == oracle.at(entry.subject));
        CHECK(entry.current == oracle.at(entry.subject).back().value);
    }
    CHECK(current_consent(s.ledger, s.bob.pk(), s.info_id)->value == 5);
    CHECK(current_consent(s.ledger, s.carol.pk(), s.info_id)->value == 7);
}

TEST_CASE("property: random consent histories match the naive oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        Shop s;
        std::vector<const Entity*> subjects{&s.bob, &s.carol, &s.alice};
        std::map<PubKey, OutPoint> tip;
        for (int step = 0; step < 12; ++step) {
            const Entity& e = *subjects[pick(rng, subjects.size())];
            std::uint64_t value = pick(rng, 8);
            OutPoint input = tip.contains(e.pk()) ? tip[e.pk()] : register_output(e.reg_id);
            Transaction con = make_consent(e.kp, input, s.info_id, value);
            REQUIRE(extend(s.ledger, {}, {con}));
            tip[e.pk()] = OutPoint{tx_id(con), 0};

            // At most one unspent consent output per subject.
            std::map<PubKey, int> live;
            for (const auto& [op, out] : s.ledger.consent_utxos())
                if (out.info == s.info_id)
                    ++live[out.subject];
            for (const auto& [pk, n] : live)
                CHECK(n == 1);
        }
        auto oracle = naive_history(s.ledger, s.info_id);
        auto trail = audit_trail(s.ledger, s.info_id);
        CHECK(trail.size() == oracle.size());
        for (const auto& entry : trail) {
            CHECK(entry.history == oracle.at(entry.subject));
            auto cur = current_consent(s.ledger, entry.subject, s.info_id);
            REQUIRE(cur);
            CHECK(cur->value == entry.current);
            CHECK(s.ledger.consent_utxos().contains(cur->tip));
        }
        Ledger copy = s.ledger;
        CHECK(audit_trail(copy, s.info_id) == trail);
    }
}
