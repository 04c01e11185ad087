#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mutachain/consent.hpp"
#include "mutachain/scenario.hpp"
#include "mutachain/store.hpp"

using namespace mutachain;
namespace fs = std::filesystem;

namespace {

void print_report(const VerificationReport& r) {
    std::cout << "tip " << r.tip_height << ", " << r.present_intervals << " present intervals, "
              << r.deleted_intervals << " deleted, " << r.removable_blocks << " removable blocks\n";
    for (const auto& v : r.violations)
        std::cout << "  " << v.to_string() << "\n";
    std::cout << (r.valid() ? "valid" : "INVALID") << "\n";
}

std::string tx_line(const Transaction& tx) {
    std::string out = std::string(kind_name(tx.kind)) + " " + tx_id(tx).hex() + " signer " + tx.signer.short_hex();
    switch (tx.kind) {
        case TxKind::Removable:
            out += " data " + to_hex(tx.removable_data());
            break;
        case TxKind::Prepare:
        case TxKind::Delete:
            out += " interval " + std::to_string(tx.target_interval());
            break;
        case TxKind::Info:
            out += " controller \"" + tx.info().controller + "\"";
            break;
        case TxKind::Consent:
            out += " value " + std::to_string(tx.value);
            break;
        case TxKind::Register:
            break;
    }
    return out;
}

void print_permanent(const PermanentBlock& b) {
    const auto& h = b.header;
    std::cout << "B_" << h.height << " " << b.hash().hex() << "\n"
              << "  prev_permanent " << h.prev_permanent.hex() << "\n"
              << "  prev_removable " << h.prev_removable.hex() << "\n"
              << "  interval_len " << int(h.interval_len) << "\n"
              << "  p_list";
    for (const auto& pk : h.p_list)
        std::cout << " " << pk.short_hex();
    std::cout << "\n  tx_root " << h.tx_root.hex() << "\n";
    for (const auto& tx : b.transactions)
        std::cout << "  " << tx_line(tx) << "\n";
}

int cmd_run(const std::string& file, const RunOptions& opts, const std::string& json_out) {
    Scenario sc = load_scenario(file);
    RunResult r = run_scenario(sc, opts);
    std::cout << r.text;
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + json_out);
        out << r.json;
    }
    return r.ok ? 0 : 1;
}

int cmd_inspect(const fs::path& store, std::optional<Height> height, std::optional<IntervalIndex> interval) {
    ChainData data = read_chain_data(store);
    if (height) {
        if (*height >= data.permanent.size())
            throw std::runtime_error("no block at height " + std::to_string(*height));
        print_permanent(data.permanent[*height]);
        return 0;
    }
    if (interval) {
        auto it = data.removable.find(*interval);
        if (it == data.removable.end()) {
            std::cout << "interval " << *interval << " has no stored blocks\n";
            return 0;
        }
        for (const auto& b : it->second) {
            std::cout << "B_" << *interval << "." << b.header.position << " " << b.hash().hex() << "\n"
                      << "  prev " << b.header.prev.hex() << "\n";
            for (const auto& tx : b.transactions)
                std::cout << "  " << tx_line(tx) << "\n";
        }
        return 0;
    }
    for (const auto& b : data.permanent) {
        const auto& h = b.header;
        std::cout << "B_" << h.height << " " << b.hash().short_hex() << " |I|=" << int(h.interval_len)
                  << " P=" << h.p_list.size() << " txs=" << b.transactions.size();
        if (h.height > 0 && h.interval_len > 0)
            std::cout << (data.removable.contains(h.height) ? " interval stored" : " interval absent");
        std::cout << "\n";
    }
    return 0;
}

int cmd_consent(const std::string& mode, const fs::path& store, const std::string& info_hex,
                const std::string& subject_hex) {
    Ledger ledger = load_store(store);
    TxId info = TxId::from_hex(info_hex);
    const InfoRecord* rec = ledger.info(info);
    if (!rec)
        throw ConsentError(ErrorCode::UnknownInfo, "no confirmed Info " + info_hex);
    PurposeSchema schema = PurposeSchema::from_info(*rec);
    auto granted = [&](std::uint64_t v) {
        std::string s;
        for (const auto& g : decode_consent_value(schema, v))
            s += (s.empty() ? "" : ",") + g;
        return "{" + s + "}";
    };
    if (mode == "status") {
        if (subject_hex.empty())
            throw std::runtime_error("consent status needs --subject");
        auto st = current_consent(ledger, PubKey::from_hex(subject_hex), info);
        if (!st) {
            std::cout << "no consent\n";
            return 0;
        }
        std::cout << "value " << st->value << " " << granted(st->value) << (st->revoked() ? " revoked" : "") << "\n";
        for (const auto& s : st->history)
            std::cout << "  " << s.txid.hex() << " value " << s.value << " at B_" << s.height << "\n";
        return 0;
    }
    for (const auto& e : audit_trail(ledger, info)) {
        if (!subject_hex.empty() && e.subject != PubKey::from_hex(subject_hex))
            continue;
        std::cout << e.subject.hex() << " now " << e.current << " " << granted(e.current) << "\n";
        for (const auto& s : e.history)
            std::cout << "  " << s.txid.hex() << " value " << s.value << " at B_" << s.height << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mutachain: a blockchain with erasable intervals"};
    app.require_subcommand(1);

    auto* keygen = app.add_subcommand("keygen", "derive a key pair from a seed label");
    std::string key_seed;
    keygen->add_option("--seed", key_seed, "seed label")->required();

    auto* run = app.add_subcommand("run", "run a scenario script");
    std::string scenario_file;
    std::string json_out;
    RunOptions opts;
    std::string policy;
    std::string out_dir;
    run->add_option("scenario", scenario_file)->required()->check(CLI::ExistingFile);
    run->add_option("--seed", opts.seed, "simulation seed");
    run->add_option("--steps", opts.steps, "minimum number of steps");
    run->add_option("--policy", policy, "authorized or unauthorized");
    run->add_option("--confirm-depth", opts.confirm_depth, "D");
    run->add_option("--lock", opts.delete_lock, "L");
    run->add_option("--out", out_dir, "directory for per-node stores");
    run->add_option("--json-report", json_out, "write the JSON report here");

    auto* verify = app.add_subcommand("verify", "verify a store");
    std::string store;
    verify->add_option("store", store)->required();

    auto* consent = app.add_subcommand("consent", "query consent state");
    consent->require_subcommand(1);
    std::string info_hex;
    std::string subject_hex;
    for (const char* mode : {"status", "audit"}) {
        auto* sub = consent->add_subcommand(mode, std::string(mode) == "status" ? "consent in force for a subject"
                                                                                : "full consent history");
        sub->add_option("store", store)->required();
        sub->add_option("--info", info_hex, "Info txid (hex)")->required();
        sub->add_option("--subject", subject_hex, "subject public key (hex)");
    }

    auto* prune = app.add_subcommand("prune", "erase every deletable interval");
    prune->add_option("store", store)->required();

    auto* inspect = app.add_subcommand("inspect", "print blocks from a store");
    std::optional<Height> height;
    std::optional<IntervalIndex> interval;
    inspect->add_option("store", store)->required();
    auto* hopt = inspect->add_option("--height", height, "permanent block at this height");
    inspect->add_option("--interval", interval, "removable blocks of this interval")->excludes(hopt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*keygen) {
            KeyPair kp = keypair_from_label(key_seed);
            std::cout << "pubkey " << kp.pubkey.hex() << "\n";
            return 0;
        }
        if (*run) {
            if (!policy.empty()) {
                opts.policy = parse_policy(policy);
                if (!opts.policy) {
                    std::cerr << "unknown policy " << policy << "\n";
                    return 2;
                }
            }
            if (!out_dir.empty())
                opts.out = out_dir;
            return cmd_run(scenario_file, opts, json_out);
        }
        if (*verify) {
            auto report = verify_chain(read_chain_data(store), read_store_config(store));
            print_report(report);
            return report.valid() ? 0 : 1;
        }
        if (*consent) {
            std::string mode = consent->get_subcommands().front()->get_name();
            return cmd_consent(mode, store, info_hex, subject_hex);
        }
        if (*prune) {
            Ledger ledger = load_store(store);
            auto pruned = prune_store(ledger, store);
            std::cout << "pruned";
            if (pruned.empty())
                std::cout << " nothing";
            for (auto i : pruned)
                std::cout << " " << i;
            std::cout << "\n";
            return 0;
        }
        if (*inspect)
            return cmd_inspect(store, height, interval);
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const StoreError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return e.code() == ErrorCode::Ok ? 2 : 1;
    } catch (const ConsentError& e) {
        std::cerr << "consent error: " << error_name(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
