#include "mutachain/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mutachain/consent.hpp"
#include "mutachain/store.hpp"
#include "mutachain/workload.hpp"

namespace mutachain {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using Params = std::map<std::string, std::string>;

std::vector<std::string> tokenize(std::string_view line, std::size_t lineno) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        if (i >= line.size() || line[i] == '#')
            break;
        std::string tok;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            if (line[i] == '#')
                break;
            if (line[i] != '"') {
                tok += line[i++];
                continue;
            }
            ++i;
            bool closed = false;
            while (i < line.size()) {
                char c = line[i++];
                if (c == '"') {
                    closed = true;
                    break;
                }
                if (c == '\\' && i < line.size())
                    c = line[i++];
                tok += c;
            }
            if (!closed)
                throw ScenarioError(lineno, "unterminated quote");
        }
        out.push_back(std::move(tok));
    }
    return out;
}

Params parse_params(const std::vector<std::string>& toks, std::size_t first, std::size_t lineno) {
    Params out;
    for (std::size_t k = first; k < toks.size(); ++k) {
        auto eq = toks[k].find('=');
        if (eq == std::string::npos || eq == 0)
            throw ScenarioError(lineno, "expected key=value, got '" + toks[k] + "'");
        if (!out.emplace(toks[k].substr(0, eq), toks[k].substr(eq + 1)).second)
            throw ScenarioError(lineno, "repeated key '" + toks[k].substr(0, eq) + "'");
    }
    return out;
}

void allow_only(const Params& p, std::initializer_list<std::string_view> keys, std::size_t lineno) {
    for (const auto& [k, v] : p) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ScenarioError(lineno, "unknown key '" + k + "'");
    }
}

std::uint64_t to_u64(const std::string& text, std::size_t lineno, const std::string& key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ScenarioError(lineno, key + " must be a non-negative integer, got '" + text + "'");
    return v;
}

std::uint32_t to_u32(const std::string& text, std::size_t lineno, const std::string& key) {
    std::uint64_t v = to_u64(text, lineno, key);
    if (v > UINT32_MAX)
        throw ScenarioError(lineno, key + " is out of range");
    return static_cast<std::uint32_t>(v);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

const std::string& required(const Params& p, const std::string& key, std::size_t lineno) {
    auto it = p.find(key);
    if (it == p.end())
        throw ScenarioError(lineno, "missing " + key + "=");
    return it->second;
}

const std::set<std::string> kActions = {"register", "removable", "prepare", "delete", "info",
                                        "consent",  "checkpoint", "join"};

}  // namespace

Scenario parse_scenario(std::string_view text, std::string default_name) {
    Scenario sc;
    sc.name = std::move(default_name);
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++lineno;

        auto toks = tokenize(line, lineno);
        if (toks.empty())
            continue;
        const std::string& dir = toks[0];
        Params p = parse_params(toks, 1, lineno);

        if (dir == "scenario") {
            allow_only(p, {"name"}, lineno);
            sc.name = required(p, "name", lineno);
        } else if (dir == "config") {
            allow_only(p,
                       {"nodes", "proposers", "schedule", "capacity", "confirm_depth", "delete_lock", "policy",
                        "seed", "tx_loss"},
                       lineno);
            for (const auto& [k, v] : p) {
                if (k == "nodes") {
                    sc.sim.nodes = to_u64(v, lineno, k);
                } else if (k == "proposers") {
                    std::vector<NodeId> ids;
                    if (v != "none") {
                        for (const auto& s : split_list(v))
                            ids.push_back(to_u64(s, lineno, k));
                    }
                    sc.sim.proposers = ids;
                } else if (k == "schedule") {
                    try {
                        sc.sim.schedule = IntervalSchedule::parse(v);
                    } catch (const std::invalid_argument& e) {
                        throw ScenarioError(lineno, e.what());
                    }
                } else if (k == "capacity") {
                    sc.sim.block_tx_capacity = to_u64(v, lineno, k);
                } else if (k == "confirm_depth") {
                    sc.sim.ledger.confirm_depth = to_u32(v, lineno, k);
                } else if (k == "delete_lock") {
                    sc.sim.ledger.delete_lock = to_u32(v, lineno, k);
                } else if (k == "policy") {
                    auto pol = parse_policy(v);
                    if (!pol)
                        throw ScenarioError(lineno, "unknown policy '" + v + "'");
                    sc.sim.ledger.policy = *pol;
                } else if (k == "seed") {
                    sc.sim.seed = to_u64(v, lineno, k);
                } else if (k == "tx_loss") {
                    try {
                        std::size_t used = 0;
                        sc.sim.tx_loss = std::stod(v, &used);
                        if (used != v.size() || sc.sim.tx_loss < 0 || sc.sim.tx_loss > 1)
                            throw std::invalid_argument(v);
                    } catch (const std::exception&) {
                        throw ScenarioError(lineno, "tx_loss must be a probability, got '" + v + "'");
                    }
                }
            }
        } else if (dir == "fault") {
            allow_only(p, {"node", "kind"}, lineno);
            auto kind = parse_fault(required(p, "kind", lineno));
            if (!kind)
                throw ScenarioError(lineno, "unknown fault '" + p.at("kind") + "'");
            sc.sim.faults[to_u64(required(p, "node", lineno), lineno, "node")] = *kind;
        } else if (dir == "entity") {
            allow_only(p, {"name"}, lineno);
            for (const auto& n : split_list(required(p, "name", lineno))) {
                if (std::find(sc.entities.begin(), sc.entities.end(), n) != sc.entities.end())
                    throw ScenarioError(lineno, "entity " + n + " declared twice");
                sc.entities.push_back(n);
            }
        } else if (dir == "genesis") {
            allow_only(p, {"register"}, lineno);
            for (const auto& n : split_list(required(p, "register", lineno))) {
                if (std::find(sc.entities.begin(), sc.entities.end(), n) == sc.entities.end())
                    throw ScenarioError(lineno, "unknown entity " + n);
                sc.genesis.push_back(n);
            }
        } else if (dir == "at") {
            ScenarioAction a;
            a.line = lineno;
            a.step = to_u64(required(p, "step", lineno), lineno, "step");
            a.action = required(p, "action", lineno);
            if (!kActions.contains(a.action))
                throw ScenarioError(lineno, "unknown action '" + a.action + "'");
            if (auto it = p.find("node"); it != p.end())
                a.node = to_u64(it->second, lineno, "node");
            p.erase("step");
            p.erase("action");
            p.erase("node");
            if (a.action != "checkpoint" && a.action != "join" && !p.contains("entity"))
                throw ScenarioError(lineno, "missing entity=");
            if (p.contains("entity") &&
                std::find(sc.entities.begin(), sc.entities.end(), p.at("entity")) == sc.entities.end())
                throw ScenarioError(lineno, "unknown entity " + p.at("entity"));
            a.params = std::move(p);
            sc.actions.push_back(std::move(a));
        } else if (dir == "fuzz") {
            allow_only(p, {"steps", "entities", "max_actions"}, lineno);
            FuzzSpec f;
            f.steps = to_u64(required(p, "steps", lineno), lineno, "steps");
            if (auto it = p.find("entities"); it != p.end())
                f.entities = to_u64(it->second, lineno, "entities");
            if (auto it = p.find("max_actions"); it != p.end())
                f.max_actions = to_u64(it->second, lineno, "max_actions");
            if (f.entities == 0)
                throw ScenarioError(lineno, "fuzz needs at least one entity");
            sc.fuzz = f;
        } else if (dir == "run") {
            allow_only(p, {"steps"}, lineno);
            sc.steps = to_u64(required(p, "steps", lineno), lineno, "steps");
        } else {
            throw ScenarioError(lineno, "unknown directive '" + dir + "'");
        }
    }
    std::stable_sort(sc.actions.begin(), sc.actions.end(),
                     [](const ScenarioAction& x, const ScenarioAction& y) { return x.step < y.step; });
    return sc;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ScenarioError(0, "cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenario(text, path.stem().string());
}

Hash32 store_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().filename() != "store.lock")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    Encoder enc;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        enc.bytes(to_bytes(fs::relative(f, root).generic_string()));
        enc.bytes(data);
    }
    return digest(std::move(enc).take());
}

namespace {

struct ScriptEntity {
    KeyPair kp;
    Transaction reg;
    TxId reg_id;
};

std::string printable(const Bytes& data) {
    bool text = !data.empty() && std::all_of(data.begin(), data.end(), [](std::uint8_t c) {
        return c >= 0x20 && c < 0x7f && c != '"';
    });
    if (text)
        return "\"" + std::string(data.begin(), data.end()) + "\"";
    return to_hex(data).substr(0, 16);
}

class Runner {
public:
    Runner(const Scenario& sc, const RunOptions& opt) : sc_(sc), opt_(opt) {}

    RunResult run();

private:
    SimConfig build_config();
    std::vector<ClientAction> scripted(const ScenarioAction& a);
    void checkpoint(const ScenarioAction& a);
    void join(const ScenarioAction& a);
    void save_stores();
    std::string name_of(const PubKey& pk) const;
    std::string describe(const Transaction& tx) const;
    void remember(const Transaction& tx);
    ordered_json blocks_json(const Ledger& ledger) const;
    void render_blocks(std::ostream& out, const Ledger& ledger) const;
    void finish(RunResult& result);

    const ScriptEntity& ent(const std::string& name) const { return entities_.at(name); }
    const TxId& label(const ScenarioAction& a, const std::string& key) const;

    const Scenario& sc_;
    const RunOptions& opt_;
    std::map<std::string, ScriptEntity> entities_;
    std::map<PubKey, std::string> key_names_;
    std::map<TxId, std::string> tx_names_;
    std::map<std::string, TxId> labels_;
    std::map<TxId, std::string> info_labels_;
    std::map<std::pair<std::string, TxId>, std::pair<TxId, std::uint64_t>> consent_tips_;
    std::optional<RandomWorkload> workload_;
    std::optional<SimNetwork> net_;
    std::map<TxId, Bytes> payloads_;

    std::ostringstream text_;
    ordered_json steps_ = ordered_json::array();
    ordered_json checkpoints_ = ordered_json::array();
    ordered_json syncs_ = ordered_json::array();
    std::uint64_t fuzz_steps_ = 0;
    std::uint64_t step_ = 0;
};

std::string Runner::name_of(const PubKey& pk) const {
    if (auto it = key_names_.find(pk); it != key_names_.end())
        return it->second;
    return pk.short_hex();
}

std::string Runner::describe(const Transaction& tx) const {
    std::string by = " by " + name_of(tx.signer);
    switch (tx.kind) {
        case TxKind::Register:
            return "Reg(" + name_of(tx.signer) + ")";
        case TxKind::Removable:
            return "Rem(" + printable(tx.removable_data()) + ")" + by;
        case TxKind::Prepare:
            return "Prep(" + std::to_string(tx.target_interval()) + ")" + by;
        case TxKind::Delete:
            return "Del(" + std::to_string(tx.target_interval()) + ")" + by;
        case TxKind::Info: {
            auto it = info_labels_.find(tx_id(tx));
            return "Info(" + (it != info_labels_.end() ? it->second : tx.info().controller) + ")" + by;
        }
        case TxKind::Consent:
            return "Consent(" + std::to_string(tx.value) + ")" + by;
    }
    return "?";
}

void Runner::remember(const Transaction& tx) {
    TxId id = tx_id(tx);
    if (tx.kind == TxKind::Removable)
        payloads_.emplace(id, tx.removable_data());
}

const TxId& Runner::label(const ScenarioAction& a, const std::string& key) const {
    const std::string& name = required(a.params, key, a.line);
    auto it = labels_.find(name);
    if (it == labels_.end())
        throw ScenarioError(a.line, "unknown label '" + name + "'");
    return it->second;
}

SimConfig Runner::build_config() {
    SimConfig cfg = sc_.sim;
    if (opt_.seed)
        cfg.seed = *opt_.seed;
    if (opt_.policy)
        cfg.ledger.policy = *opt_.policy;
    if (opt_.confirm_depth)
        cfg.ledger.confirm_depth = *opt_.confirm_depth;
    if (opt_.delete_lock)
        cfg.ledger.delete_lock = *opt_.delete_lock;

    for (const auto& name : sc_.entities) {
        ScriptEntity e{keypair_from_label(name), {}, {}};
        e.reg = make_register(e.kp);
        e.reg_id = tx_id(e.reg);
        key_names_[e.kp.pubkey] = name;
        entities_.emplace(name, std::move(e));
    }
    for (const auto& name : sc_.genesis)
        cfg.genesis_txs.push_back(ent(name).reg);

    if (sc_.fuzz) {
        WorkloadConfig wc;
        wc.entities = sc_.fuzz->entities;
        wc.max_actions_per_step = sc_.fuzz->max_actions;
        workload_.emplace(cfg.seed, wc);
        for (const auto& e : workload_->entities())
            key_names_.emplace(e.kp.pubkey, e.name);
        for (auto& tx : workload_->genesis_txs())
            cfg.genesis_txs.push_back(std::move(tx));
        fuzz_steps_ = opt_.steps.value_or(sc_.fuzz->steps);
    }
    for (std::size_t i = 0; i < cfg.nodes; ++i)
        key_names_.emplace(keypair_from_label("node-" + std::to_string(i)).pubkey, "node" + std::to_string(i));
    return cfg;
}

std::vector<ClientAction> Runner::scripted(const ScenarioAction& a) {
    const std::string& who = a.params.at("entity");
    const ScriptEntity& e = ent(who);
    Transaction tx;
    const std::string& act = a.action;
    if (act == "register") {
        allow_only(a.params, {"entity"}, a.line);
        tx = e.reg;
    } else if (act == "removable") {
        allow_only(a.params, {"entity", "data", "hex", "label"}, a.line);
        Bytes data;
        if (auto it = a.params.find("hex"); it != a.params.end()) {
            try {
                data = from_hex(it->second);
            } catch (const std::invalid_argument&) {
                throw ScenarioError(a.line, "hex= is not valid hex");
            }
        } else {
            data = to_bytes(required(a.params, "data", a.line));
        }
        tx = make_removable(e.kp, e.reg_id, std::move(data));
    } else if (act == "prepare") {
        allow_only(a.params, {"entity", "interval", "label"}, a.line);
        tx = make_prepare(e.kp, e.reg_id, to_u32(required(a.params, "interval", a.line), a.line, "interval"));
    } else if (act == "delete") {
        allow_only(a.params, {"entity", "interval", "prepare", "label"}, a.line);
        std::optional<TxId> prep;
        if (a.params.contains("prepare"))
            prep = label(a, "prepare");
        tx = make_delete(e.kp, to_u32(required(a.params, "interval", a.line), a.line, "interval"), prep);
    } else if (act == "info") {
        allow_only(a.params, {"entity", "name", "controller", "purposes"}, a.line);
        const std::string& name = required(a.params, "name", a.line);
        std::string controller = a.params.contains("controller") ? a.params.at("controller") : who;
        tx = make_info(e.kp, e.reg_id, controller, split_list(required(a.params, "purposes", a.line)));
        TxId id = tx_id(tx);
        labels_[name] = id;
        info_labels_[id] = name;
    } else if (act == "consent") {
        allow_only(a.params, {"entity", "info", "value", "grant", "label"}, a.line);
        const TxId& info = label(a, "info");
        std::uint64_t value = 0;
        if (a.params.contains("value")) {
            value = to_u64(a.params.at("value"), a.line, "value");
        } else if (a.params.contains("grant")) {
            const Ledger& l = net_->node(a.node).ledger;
            const InfoRecord* rec = l.info(info);
            if (!rec)
                throw ScenarioError(a.line, "info '" + a.params.at("info") + "' is not confirmed yet");
            auto granted = split_list(a.params.at("grant"));
            try {
                value = encode_consent_value(PurposeSchema::from_info(*rec), {granted.begin(), granted.end()});
            } catch (const ConsentError& err) {
                throw ScenarioError(a.line, err.what());
            }
        } else {
            throw ScenarioError(a.line, "consent needs value= or grant=");
        }
        OutPoint input = register_output(e.reg_id);
        auto tip = consent_tips_.find({who, info});
        if (tip != consent_tips_.end() && tip->second.second != 0)
            input = OutPoint{tip->second.first, 0};
        tx = make_consent(e.kp, input, info, value);
        consent_tips_[{who, info}] = {tx_id(tx), value};
    }
    if (auto it = a.params.find("label"); it != a.params.end() && act != "info")
        labels_[it->second] = tx_id(tx);
    tx_names_[tx_id(tx)] = describe(tx);
    remember(tx);
    if (a.node >= net_->size())
        throw ScenarioError(a.line, "node " + std::to_string(a.node) + " does not exist");
    return {ClientAction{a.node, std::move(tx)}};
}

void Runner::render_blocks(std::ostream& out, const Ledger& ledger) const {
    for (Height h = 0; h <= ledger.tip_height(); ++h) {
        const PermanentBlock& pb = ledger.permanent(h);
        std::size_t len = pb.header.interval_len;
        if (h > 0 && len > 0) {
            auto blocks = ledger.interval_blocks(h);
            if (blocks.empty()) {
                IntervalStatus st = ledger.interval_status(h);
                std::string why = "erased";
                if (const DeleteRecord* d = ledger.confirmed_delete(h))
                    why += ", Del(" + std::to_string(h) + ") in B_" + std::to_string(d->height);
                else if (st.state == IntervalStatus::State::Deleted)
                    why += ", Del(" + std::to_string(h) + ") in B_" + std::to_string(st.deleted_at_height);
                out << "  B_" << h << ".1" << (len > 1 ? "-" + std::to_string(len) : std::string()) << "  <" << why << ">\n";
            } else {
                for (const auto& b : blocks) {
                    out << "  B_" << h << "." << b.header.position << "  [";
                    for (std::size_t k = 0; k < b.transactions.size(); ++k)
                        out << (k ? ", " : "") << describe(b.transactions[k]);
                    out << "]\n";
                }
            }
        }
        out << "  B_" << h << "    |I|=" << len << " P={";
        for (std::size_t k = 0; k < pb.header.p_list.size(); ++k)
            out << (k ? "," : "") << name_of(pb.header.p_list[k]);
        out << "} body=[";
        for (std::size_t k = 0; k < pb.transactions.size(); ++k)
            out << (k ? ", " : "") << describe(pb.transactions[k]);
        out << "]\n";
    }
}

ordered_json Runner::blocks_json(const Ledger& ledger) const {
    ordered_json out = ordered_json::array();
    for (Height h = 0; h <= ledger.tip_height(); ++h) {
        const PermanentBlock& pb = ledger.permanent(h);
        ordered_json b;
        b["height"] = h;
        b["hash"] = pb.hash().hex();
        b["interval_len"] = pb.header.interval_len;
        ordered_json plist = ordered_json::array();
        for (const auto& pk : pb.header.p_list)
            plist.push_back(name_of(pk));
        b["p_list"] = std::move(plist);
        ordered_json body = ordered_json::array();
        for (const auto& tx : pb.transactions)
            body.push_back(describe(tx));
        b["body"] = std::move(body);
        if (h > 0 && pb.header.interval_len > 0) {
            auto blocks = ledger.interval_blocks(h);
            if (blocks.empty()) {
                b["interval"] = "erased";
            } else {
                ordered_json iv = ordered_json::array();
                for (const auto& rb : blocks) {
                    ordered_json txs = ordered_json::array();
                    for (const auto& tx : rb.transactions)
                        txs.push_back(describe(tx));
                    iv.push_back(std::move(txs));
                }
                b["interval"] = std::move(iv);
            }
        }
        out.push_back(std::move(b));
    }
    return out;
}

void Runner::checkpoint(const ScenarioAction& a) {
    allow_only(a.params, {"label"}, a.line);
    const std::string& name = required(a.params, "label", a.line);
    const SimNode* best = nullptr;
    for (const auto& n : net_->nodes()) {
        if (n.honest() && n.online && (!best || n.ledger.tip_height() > best->ledger.tip_height()))
            best = &n;
    }
    if (!best)
        throw ScenarioError(a.line, "no honest online node to checkpoint");
    text_ << "checkpoint \"" << name << "\" after step " << step_ << " (node " << best->id << ", tip "
          << best->ledger.tip_height() << ")\n";
    render_blocks(text_, best->ledger);
    ordered_json c;
    c["label"] = name;
    c["step"] = step_;
    c["node"] = best->id;
    c["tip"] = best->ledger.tip_height();
    c["digest"] = best->ledger.state_digest().hex();
    c["blocks"] = blocks_json(best->ledger);
    checkpoints_.push_back(std::move(c));
}

void Runner::join(const ScenarioAction& a) {
    allow_only(a.params, {"fault", "peer"}, a.line);
    NodeFault fault = NodeFault::None;
    if (auto it = a.params.find("fault"); it != a.params.end()) {
        auto f = parse_fault(it->second);
        if (!f)
            throw ScenarioError(a.line, "unknown fault '" + it->second + "'");
        fault = *f;
    }
    std::optional<NodeId> peer;
    if (auto it = a.params.find("peer"); it != a.params.end())
        peer = to_u64(it->second, a.line, "peer");
    NodeId id = net_->add_node(fault);
    key_names_.emplace(net_->node(id).key.pubkey, "node" + std::to_string(id));
    SyncReport r = net_->sync_node(id, peer);

    auto list = [](const std::vector<IntervalIndex>& xs) {
        std::string s;
        for (auto x : xs)
            s += (s.empty() ? "" : ",") + std::to_string(x);
        return "[" + s + "]";
    };
    text_ << "  join node " << id << " from peer " << r.peer << ": " << (r.ok ? "ok" : "failed") << " tip "
          << r.tip << " skipped-deleted " << list(r.skipped_deleted) << " requested " << list(r.requested);
    if (!r.ok)
        text_ << " error: " << r.error;
    text_ << "\n";
    for (const auto& t : r.trace)
        text_ << "    " << t << "\n";

    ordered_json j;
    j["step"] = step_;
    j["node"] = id;
    j["peer"] = r.peer;
    j["ok"] = r.ok;
    j["tip"] = r.tip;
    j["skipped_deleted"] = r.skipped_deleted;
    j["requested"] = r.requested;
    j["trace"] = r.trace;
    j["valid"] = r.verification.valid();
    if (!r.ok)
        j["error"] = r.error;
    syncs_.push_back(std::move(j));
}

void Runner::save_stores() {
    if (!opt_.out)
        return;
    for (const auto& n : net_->nodes()) {
        if (n.online)
            save_store(n.ledger, *opt_.out / ("node" + std::to_string(n.id)));
    }
}

void Runner::finish(RunResult& result) {
    const SimConfig& cfg = net_->config();
    ordered_json nodes = ordered_json::array();
    bool all_valid = true;
    text_ << "final\n";
    for (const auto& n : net_->nodes()) {
        auto report = verify_chain(ChainData::from_ledger(n.ledger), n.ledger.config());
        if (n.honest() && n.online && !report.valid())
            all_valid = false;
        std::vector<IntervalIndex> present;
        std::vector<IntervalIndex> deleted;
        for (const auto& [i, st] : n.ledger.intervals()) {
            if (st.state == IntervalStatus::State::Present)
                present.push_back(i);
            else if (st.state == IntervalStatus::State::Deleted)
                deleted.push_back(i);
        }
        text_ << "  node " << n.id << " " << (n.honest() ? "honest" : fault_name(n.fault))
              << (n.online ? "" : " offline") << " tip=" << n.ledger.tip_height()
              << " digest=" << n.ledger.state_digest().short_hex() << " verify="
              << (report.valid() ? "valid" : "INVALID") << " present=" << present.size()
              << " deleted=" << deleted.size() << " removable-blocks=" << report.removable_blocks
              << " pending=" << n.mempool.size() << "\n";
        for (const auto& v : report.violations)
            text_ << "    " << v.to_string() << "\n";

        ordered_json j;
        j["id"] = n.id;
        j["fault"] = std::string(fault_name(n.fault));
        j["online"] = n.online;
        j["tip"] = n.ledger.tip_height();
        j["digest"] = n.ledger.state_digest().hex();
        j["valid"] = report.valid();
        ordered_json vs = ordered_json::array();
        for (const auto& v : report.violations)
            vs.push_back(v.to_string());
        j["violations"] = std::move(vs);
        j["present"] = present;
        j["deleted"] = deleted;
        j["removable_blocks"] = report.removable_blocks;
        j["pending"] = n.mempool.size();
        nodes.push_back(std::move(j));
    }
    bool agree = net_->honest_agree();
    result.ok = all_valid && agree;
    text_ << "  honest nodes agree: " << (agree ? "yes" : "no") << "\n";

    // Header overhead, measured on the first honest online node.
    const SimNode* ref = nullptr;
    for (const auto& n : net_->nodes()) {
        if (n.honest() && n.online) {
            ref = &n;
            break;
        }
    }
    ordered_json overhead;
    if (ref) {
        std::size_t headers = 0;
        std::size_t header_bytes = 0;
        std::size_t fixed = 0;
        std::size_t plist = 0;
        std::size_t max_total = 0;
        for (const auto& b : ref->ledger.permanent_blocks()) {
            HeaderOverhead o = header_overhead(b.header);
            ++headers;
            header_bytes += b.header.encode().size();
            fixed += o.fixed;
            plist += o.p_list;
            max_total = std::max(max_total, o.total);
        }
        text_ << "overhead (node " << ref->id << ")\n"
              << "  permanent headers " << headers << ", " << header_bytes << " bytes\n"
              << "  mutability fields " << fixed << " bytes fixed (" << (headers ? fixed / headers : 0)
              << " per header), " << plist << " bytes P-list, largest " << max_total << " per header\n";
        overhead["node"] = ref->id;
        overhead["headers"] = headers;
        overhead["header_bytes"] = header_bytes;
        overhead["fixed_bytes"] = fixed;
        overhead["p_list_bytes"] = plist;
        overhead["max_per_header"] = max_total;
    }

    ordered_json consent = ordered_json::array();
    if (ref && !info_labels_.empty()) {
        text_ << "consent (node " << ref->id << ")\n";
        for (const auto& [info, name] : info_labels_) {
            if (!ref->ledger.info(info)) {
                text_ << "  " << name << ": not confirmed\n";
                continue;
            }
            auto schema = PurposeSchema::from_info(*ref->ledger.info(info));
            for (const auto& entry : audit_trail(ref->ledger, info)) {
                std::string hist;
                ordered_json hj = ordered_json::array();
                for (const auto& s : entry.history) {
                    hist += (hist.empty() ? "" : " -> ") + std::to_string(s.value);
                    hj.push_back({{"value", s.value}, {"height", s.height}});
                }
                std::string granted;
                for (const auto& g : decode_consent_value(schema, entry.current))
                    granted += (granted.empty() ? "" : ",") + g;
                text_ << "  " << name << " " << name_of(entry.subject) << ": " << hist << " now " << entry.current
                      << " {" << granted << "}\n";
                consent.push_back({{"info", name},
                                   {"subject", name_of(entry.subject)},
                                   {"history", std::move(hj)},
                                   {"current", entry.current}});
            }
        }
    }

    ordered_json stores = ordered_json::object();
    if (opt_.out) {
        for (const auto& n : net_->nodes()) {
            fs::path root = *opt_.out / ("node" + std::to_string(n.id));
            if (fs::exists(root)) {
                Hash32 d = store_digest(root);
                result.store_digests[n.id] = d;
                stores[std::to_string(n.id)] = d.hex();
            }
        }
    }
    text_ << "result: " << (result.ok ? "ok" : "FAILED") << "\n";

    ordered_json j;
    j["scenario"] = sc_.name;
    j["config"] = {{"nodes", cfg.nodes},
                   {"schedule", cfg.schedule.describe()},
                   {"capacity", cfg.block_tx_capacity},
                   {"confirm_depth", cfg.ledger.confirm_depth},
                   {"delete_lock", cfg.ledger.delete_lock},
                   {"policy", std::string(policy_name(cfg.ledger.policy))},
                   {"seed", cfg.seed},
                   {"tx_loss", cfg.tx_loss}};
    ordered_json ents = ordered_json::object();
    for (const auto& [name, e] : entities_)
        ents[name] = e.kp.pubkey.hex();
    j["entities"] = std::move(ents);
    j["steps"] = std::move(steps_);
    j["checkpoints"] = std::move(checkpoints_);
    j["syncs"] = std::move(syncs_);
    j["nodes"] = std::move(nodes);
    j["agree"] = agree;
    j["overhead"] = std::move(overhead);
    j["consent"] = std::move(consent);
    j["stores"] = std::move(stores);
    j["ok"] = result.ok;
    result.json = j.dump(2) + "\n";
    result.text = text_.str();
}

RunResult Runner::run() {
    SimConfig cfg = build_config();
    try {
        net_.emplace(cfg);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(0, e.what());
    }

    std::uint64_t total = sc_.steps.value_or(0);
    if (!sc_.actions.empty())
        total = std::max<std::uint64_t>(total, sc_.actions.back().step + 1);
    total = std::max(total, fuzz_steps_);
    if (opt_.steps)
        total = std::max(total, *opt_.steps);

    text_ << "scenario " << sc_.name << "\n"
          << "config nodes=" << cfg.nodes << " schedule=" << cfg.schedule.describe()
          << " capacity=" << cfg.block_tx_capacity << " D=" << cfg.ledger.confirm_depth
          << " L=" << cfg.ledger.delete_lock << " policy=" << policy_name(cfg.ledger.policy) << " seed=" << cfg.seed
          << "\n";
    for (const auto& [id, f] : cfg.faults)
        text_ << "fault node " << id << " " << fault_name(f) << "\n";
    for (const auto& name : sc_.entities)
        text_ << "entity " << name << " " << ent(name).kp.pubkey.short_hex() << "\n";
    save_stores();

    auto next_action = sc_.actions.begin();
    auto record = [&](const StepReport& r, const std::string& label) {
        text_ << label;
        if (r.proposer)
            text_ << " proposer=" << *r.proposer;
        text_ << " delivered=" << r.delivered << "\n";
        ordered_json events = ordered_json::array();
        for (const auto& e : r.events) {
            text_ << "  " << e.to_string() << "\n";
            events.push_back(e.to_string());
        }
        ordered_json digests = ordered_json::array();
        for (const auto& d : r.digests)
            digests.push_back(d.hex());
        ordered_json s;
        s["step"] = label;
        if (r.proposer)
            s["proposer"] = *r.proposer;
        s["delivered"] = r.delivered;
        s["events"] = std::move(events);
        s["digests"] = std::move(digests);
        steps_.push_back(std::move(s));
    };

    for (step_ = 0; step_ < total; ++step_) {
        std::vector<ClientAction> actions;
        std::vector<const ScenarioAction*> after;
        for (; next_action != sc_.actions.end() && next_action->step == step_; ++next_action) {
            const ScenarioAction& a = *next_action;
            if (a.action == "checkpoint" || a.action == "join") {
                after.push_back(&a);
                continue;
            }
            for (auto& c : scripted(a))
                actions.push_back(std::move(c));
        }
        if (workload_ && step_ < fuzz_steps_) {
            for (auto& c : workload_->next(*net_)) {
                tx_names_[tx_id(c.tx)] = describe(c.tx);
                remember(c.tx);
                actions.push_back(std::move(c));
            }
        }
        StepReport r = net_->step(actions);
        record(r, "step " + std::to_string(step_));
        for (const ScenarioAction* a : after) {
            if (a->action == "checkpoint")
                checkpoint(*a);
            else
                join(*a);
        }
        save_stores();
    }
    StepReport tail = net_->drain();
    if (!tail.empty()) {
        record(tail, "drain");
        save_stores();
    }

    RunResult result;
    finish(result);
    if (workload_) {
        for (const auto& [id, data] : workload_->payloads())
            payloads_.emplace(id, data);
    }
    result.removable_payloads = std::move(payloads_);
    result.net = std::move(net_);
    return result;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunOptions& options) {
    Runner runner(scenario, options);
    return runner.run();
}

}  // namespace mutachain
