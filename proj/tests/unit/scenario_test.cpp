#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mutachain/consent.hpp"
#include "mutachain/scenario.hpp"
#include "mutachain/store.hpp"
#include "support/fixtures.hpp"
#include "support/scan.hpp"
#include "support/tempdir.hpp"

using namespace mutachain;
using namespace mutachain::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = MUTACHAIN_SOURCE_DIR;

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t error_line(std::string_view text) {
    try {
        (void)parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.line();
    }
    return 0;
}

int cli(const std::string& args) {
    std::string cmd = std::string(MUTACHAIN_CLI) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("parser accepts the documented directives") {
    Scenario sc = parse_scenario(R"(
        # comment
        scenario name=demo
        config nodes=2 proposers=1 schedule=alternating:2,0 capacity=5 confirm_depth=3 delete_lock=2 policy=unauthorized seed=9 tx_loss=0.25
        fault node=1 kind=serves-corrupt-sync
        entity name=A,B
        entity name="C D"
        genesis register=A
        at step=2 node=1 action=removable entity=B data="two words" label=r   # trailing comment
        at step=0 action=checkpoint label="start"
        fuzz steps=5 entities=3
        run steps=7
    )");
    CHECK(sc.name == "demo");
    CHECK(sc.sim.nodes == 2);
    CHECK(sc.sim.proposers == std::vector<NodeId>{1});
    CHECK(sc.sim.block_tx_capacity == 5);
    CHECK(sc.sim.ledger.confirm_depth == 3);
    CHECK(sc.sim.ledger.delete_lock == 2);
    CHECK(sc.sim.ledger.policy == RemovalPolicy::Unauthorized);
    CHECK(sc.sim.seed == 9);
    CHECK(sc.sim.tx_loss == doctest::Approx(0.25));
    CHECK(sc.sim.faults.at(1) == NodeFault::ServesCorruptSync);
    CHECK(sc.entities == std::vector<std::string>{"A", "B", "C D"});
    CHECK(sc.genesis == std::vector<std::string>{"A"});
    REQUIRE(sc.actions.size() == 2);
    CHECK(sc.actions[0].action == "checkpoint");
    CHECK(sc.actions[1].params.at("data") == "two words");
    CHECK(sc.actions[1].node == 1);
    REQUIRE(sc.fuzz);
    CHECK(sc.fuzz->entities == 3);
    CHECK(sc.steps == 7);
    CHECK(parse_scenario("config proposers=none").sim.proposers == std::vector<NodeId>{});
}

TEST_CASE("parser errors carry the line number") {
    CHECK(error_line("entity name=A\nbogus x=1") == 2);
    CHECK(error_line("\n\nconfig nodes=two") == 3);
    CHECK(error_line("config colour=red") == 1);
    CHECK(error_line("config policy=sometimes") == 1);
    CHECK(error_line("config schedule=weekly:3") == 1);
    CHECK(error_line("config tx_loss=2") == 1);
    CHECK(error_line("fault node=0 kind=sleepy") == 1);
    CHECK(error_line("entity name=A\nentity name=A") == 2);
    CHECK(error_line("genesis register=Z") == 1);
    CHECK(error_line("at step=0 action=removable data=x") == 1);
    CHECK(error_line("entity name=A\nat step=0 action=mine entity=A") == 2);
    CHECK(error_line("at step=0 action=removable entity=Q data=x") == 1);
    CHECK(error_line("entity name=A\nat step=0 action=removable entity=A data=\"open") == 2);
    CHECK(error_line("config nodes=1 nodes=2") == 1);
    CHECK(error_line("config nodes") == 1);
    CHECK(error_line("fuzz entities=2") == 1);
}

TEST_CASE("run-time script errors") {
    auto run_text = [](std::string_view text) { return run_scenario(parse_scenario(text)); };
    CHECK_THROWS_AS(run_text("entity name=A\ngenesis register=A\nat step=0 action=delete entity=A interval=1 prepare=nope"),
                    ScenarioError);
    CHECK_THROWS_AS(run_text("entity name=A\nat step=0 node=4 action=register entity=A"), ScenarioError);
    CHECK_THROWS_AS(run_text("config nodes=0"), ScenarioError);
    CHECK_THROWS_AS(run_text("entity name=A\ngenesis register=A\nat step=0 action=info entity=A name=i purposes=x\n"
                             "at step=0 action=consent entity=A info=i grant=x"),
                    ScenarioError);
}

TEST_CASE("walkthrough scenario matches the golden report") {
    RunResult r = run_scenario(load_scenario(kSource / "scenarios/walkthrough.scn"));
    CHECK(r.ok);
    CHECK(r.text == read_text(kSource / "tests/golden/walkthrough.report"));
}

TEST_CASE("walkthrough checkpoints equal the hand-built chain") {
    RunResult r = run_scenario(load_scenario(kSource / "scenarios/walkthrough.scn"));
    auto j = nlohmann::json::parse(r.json);
    REQUIRE(j["checkpoints"].size() == 2);

    Walkthrough w;
    REQUIRE(w.state1());
    CHECK(j["checkpoints"][0]["tip"] == 2);
    CHECK(j["checkpoints"][0]["digest"] == w.ledger.state_digest().hex());
    REQUIRE(w.state2());
    w.ledger.prune_deletable();
    CHECK(j["checkpoints"][1]["tip"] == 4);
    CHECK(j["checkpoints"][1]["digest"] == w.ledger.state_digest().hex());
    CHECK(j["checkpoints"][1]["blocks"][1]["interval"] == "erased");
    CHECK(j["checkpoints"][1]["blocks"][2]["body"][0] == "Prep(1) by A");
    CHECK(j["checkpoints"][1]["blocks"][3]["body"][0] == "Del(1) by A");
    for (const auto& n : r.net->nodes())
        CHECK(n.ledger.state_digest() == w.ledger.state_digest());
}

TEST_CASE("consent scenario walks 1, 3, 0") {
    RunResult r = run_scenario(load_scenario(kSource / "scenarios/consent.scn"));
    CHECK(r.ok);
    const Ledger& l = r.net->node(0).ledger;
    REQUIRE(l.infos().size() == 1);
    TxId info = l.infos().begin()->first;
    auto st = current_consent(l, keypair_from_label("Bob").pubkey, info);
    REQUIRE(st);
    CHECK(st->revoked());
    std::vector<std::uint64_t> values;
    for (const auto& s : st->history)
        values.push_back(s.value);
    CHECK(values == std::vector<std::uint64_t>{1, 3, 0});
    CHECK(r.text.find("shop Bob: 1 -> 3 -> 0 now 0 {}") != std::string::npos);
}

TEST_CASE("overrides and determinism") {
    Scenario sc = load_scenario(kSource / "scenarios/fuzz.scn");
    RunOptions opts;
    opts.seed = 11;
    opts.steps = 20;
    TempDir d1("run");
    TempDir d2("run");
    opts.out = d1.path();
    RunResult a = run_scenario(sc, opts);
    opts.out = d2.path();
    RunResult b = run_scenario(sc, opts);
    CHECK(a.ok);
    CHECK(a.json == b.json);
    CHECK(a.text == b.text);
    CHECK(a.store_digests == b.store_digests);
    CHECK(a.store_digests.size() == a.net->size());
    CHECK(nlohmann::json::parse(a.json)["config"]["seed"] == 11);

    opts.seed = 12;
    opts.out.reset();
    CHECK(run_scenario(sc, opts).json != a.json);
}

TEST_CASE("per-node stores track the nodes and hold no erased payloads") {
    Scenario sc = load_scenario(kSource / "scenarios/fuzz.scn");
    TempDir out("run");
    RunOptions opts;
    opts.out = out.path();
    RunResult r = run_scenario(sc, opts);
    REQUIRE(r.ok);
    std::size_t erased = 0;
    for (const auto& n : r.net->nodes()) {
        fs::path root = out / ("node" + std::to_string(n.id));
        Ledger loaded = load_store(root);
        CHECK(loaded.state_digest() == n.ledger.state_digest());
        for (const auto& [id, payload] : r.removable_payloads) {
            if (n.ledger.occurrences(id) == nullptr) {
                ++erased;
                CHECK_FALSE(bytes_present(root, payload));
            }
        }
    }
    CHECK(erased > 0);
}

TEST_CASE("command line") {
    TempDir out("cli");
    std::string scn = (kSource / "scenarios/walkthrough.scn").string();
    std::string store = (out / "s/node0").string();
    CHECK(cli("run " + scn + " --out " + (out / "s").string() + " --json-report " + (out / "r.json").string()) == 0);
    CHECK(fs::exists(out / "r.json"));
    CHECK(cli("verify " + store) == 0);
    CHECK(cli("inspect " + store) == 0);
    CHECK(cli("inspect " + store + " --height 3") == 0);
    CHECK(cli("inspect " + store + " --interval 2") == 0);
    CHECK(cli("prune " + store) == 0);
    CHECK(cli("keygen --seed A") == 0);

    fs::remove_all(out / "s/node1/interval_2");
    CHECK(cli("verify " + (out / "s/node1").string()) == 1);
    CHECK(cli("verify " + (out / "missing").string()) == 2);

    std::ofstream(out / "bad.scn") << "config nodes=1\nwhatever\n";
    CHECK(cli("run " + (out / "bad.scn").string()) == 2);
    CHECK(cli("run " + scn + " --policy sometimes") == 2);
    CHECK(cli("frobnicate") != 0);
}

TEST_CASE("consent queries through the command line") {
    TempDir out("cli");
    std::string scn = (kSource / "scenarios/consent.scn").string();
    REQUIRE(cli("run " + scn + " --out " + out.path().string()) == 0);
    std::string store = (out / "node0").string();
    Ledger l = load_store(store);
    REQUIRE(l.infos().size() == 1);
    std::string info = l.infos().begin()->first.hex();
    std::string bob = keypair_from_label("Bob").pubkey.hex();
    CHECK(cli("consent status " + store + " --info " + info + " --subject " + bob) == 0);
    CHECK(cli("consent audit " + store + " --info " + info) == 0);
    CHECK(cli("consent audit " + store + " --info " + std::string(64, 'a')) == 1);
}
