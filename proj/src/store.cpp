#include "mutachain/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>

namespace mutachain {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kFormat = 1;

fs::path interval_dir(const fs::path& root, IntervalIndex i) { return root / ("interval_" + std::to_string(i)); }

Bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw StoreError("cannot read " + p.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& p, ByteView data) {
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StoreError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out)
            throw StoreError("short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::vector<Bytes> read_log(const fs::path& p) {
    std::vector<Bytes> records;
    if (!fs::exists(p))
        return records;
    Bytes raw = read_file(p);
    Decoder dec(raw);
    try {
        while (!dec.done())
            records.push_back(dec.bytes());
    } catch (const DecodeError& e) {
        throw StoreError("permanent.log is truncated or corrupt: " + std::string(e.what()));
    }
    return records;
}

/// Interval indexes with a directory on disk.
std::set<IntervalIndex> interval_dirs(const fs::path& root) {
    std::set<IntervalIndex> out;
    if (!fs::exists(root))
        return out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory())
            continue;
        std::string name = entry.path().filename().string();
        if (name.rfind("interval_", 0) != 0)
            continue;
        try {
            out.insert(static_cast<IntervalIndex>(std::stoul(name.substr(9))));
        } catch (const std::exception&) {
            throw StoreError("unexpected directory " + name);
        }
    }
    return out;
}

ordered_json manifest_json(const Ledger& ledger) {
    ordered_json m;
    m["format"] = kFormat;
    m["tip_height"] = ledger.tip_height();
    m["tip_hash"] = ledger.tip_hash().hex();
    m["digest"] = ledger.state_digest().hex();
    m["config"] = {{"confirm_depth", ledger.config().confirm_depth},
                   {"delete_lock", ledger.config().delete_lock},
                   {"policy", std::string(policy_name(ledger.config().policy))}};
    ordered_json intervals = ordered_json::array();
    for (const auto& [i, st] : ledger.intervals()) {
        if (st.state == IntervalStatus::State::Empty)
            continue;
        ordered_json e;
        e["index"] = i;
        e["state"] = std::string(state_name(st.state));
        if (st.state == IntervalStatus::State::Deleted) {
            e["del_txid"] = st.del_txid.hex();
            e["deleted_at"] = st.deleted_at_height;
        } else {
            e["blocks"] = ledger.permanent(i).header.interval_len;
        }
        intervals.push_back(std::move(e));
    }
    m["intervals"] = std::move(intervals);
    return m;
}

ordered_json read_manifest(const fs::path& root) {
    fs::path p = root / "manifest";
    if (!fs::exists(p))
        throw StoreError("no manifest in " + root.string());
    Bytes raw = read_file(p);
    try {
        ordered_json m = ordered_json::parse(raw.begin(), raw.end());
        if (m.value("format", 0) != kFormat)
            throw StoreError("unsupported store format");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw StoreError("manifest is not valid JSON: " + std::string(e.what()));
    }
}

std::set<IntervalIndex> manifest_deleted(const ordered_json& m) {
    std::set<IntervalIndex> out;
    for (const auto& e : m.at("intervals"))
        if (e.at("state") == "deleted")
            out.insert(e.at("index").get<IntervalIndex>());
    return out;
}

void commit_manifest(const Ledger& ledger, const fs::path& root, const StoreFaults& faults) {
    std::string text = manifest_json(ledger).dump(2) + "\n";
    fs::path tmp = root / "manifest.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StoreError("cannot write " + tmp.string());
        out << text;
    }
    if (faults.fail_manifest_rename) {
        fs::remove(tmp);
        throw StoreError("injected failure: manifest rename");
    }
    fs::rename(tmp, root / "manifest");
}

void write_unlocked(const Ledger& ledger, const fs::path& root, const StoreFaults& faults) {
    fs::create_directories(root);

    // Permanent blocks: append whatever the log lacks.
    fs::path log = root / "permanent.log";
    auto existing = read_log(log);
    const auto& chain = ledger.permanent_blocks();
    if (existing.size() > chain.size())
        throw StoreError("store is ahead of the ledger being saved");
    for (std::size_t h = 0; h < existing.size(); ++h) {
        if (existing[h] != chain[h].encode())
            throw StoreError("store holds a different block at height " + std::to_string(h));
    }
    if (existing.size() < chain.size()) {
        Encoder enc;
        for (std::size_t h = existing.size(); h < chain.size(); ++h)
            enc.bytes(chain[h].encode());
        std::ofstream out(log, std::ios::binary | std::ios::app);
        if (!out)
            throw StoreError("cannot append to " + log.string());
        Bytes data = std::move(enc).take();
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out)
            throw StoreError("short write to " + log.string());
    }

    // Removable blocks of present intervals.
    for (const auto& [i, blocks] : ledger.removable_blocks()) {
        fs::path dir = interval_dir(root, i);
        fs::create_directories(dir);
        for (const auto& b : blocks) {
            fs::path file = dir / (std::to_string(b.header.position) + ".blk");
            if (!fs::exists(file))
                write_file_atomic(file, b.encode());
        }
    }

    commit_manifest(ledger, root, faults);
    if (faults.stop_after_commit)
        return;

    for (IntervalIndex i : interval_dirs(root)) {
        if (!ledger.removable_blocks().contains(i))
            fs::remove_all(interval_dir(root, i));
    }
}

}  // namespace

StoreLock::StoreLock(const fs::path& root) : path_(root / "store.lock") {
    fs::create_directories(root);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw StoreError("store " + root.string() + " is locked by another process");
    std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd, pid.data(), pid.size());
    ::close(fd);
}

StoreLock::~StoreLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

void save_store(const Ledger& ledger, const fs::path& root, const StoreFaults& faults) {
    StoreLock lock(root);
    write_unlocked(ledger, root, faults);
}

ChainData read_chain_data(const fs::path& root) {
    ChainData data;
    for (const auto& rec : read_log(root / "permanent.log")) {
        try {
            data.permanent.push_back(PermanentBlock::decode(rec));
        } catch (const DecodeError& e) {
            throw StoreError("corrupt permanent block at height " + std::to_string(data.permanent.size()) + ": " +
                             e.what());
        }
    }
    for (IntervalIndex i : interval_dirs(root)) {
        std::vector<std::pair<std::size_t, fs::path>> files;
        for (const auto& entry : fs::directory_iterator(interval_dir(root, i))) {
            if (entry.path().extension() != ".blk")
                continue;
            try {
                files.emplace_back(std::stoul(entry.path().stem().string()), entry.path());
            } catch (const std::exception&) {
                throw StoreError("unexpected file " + entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        auto& blocks = data.removable[i];
        for (const auto& [j, path] : files) {
            try {
                blocks.push_back(RemovableBlock::decode(read_file(path)));
            } catch (const DecodeError& e) {
                throw StoreError("corrupt removable block " + path.string() + ": " + e.what());
            }
        }
    }
    return data;
}

LedgerConfig read_store_config(const fs::path& root) {
    ordered_json m = read_manifest(root);
    LedgerConfig cfg;
    const auto& c = m.at("config");
    cfg.confirm_depth = c.at("confirm_depth").get<std::uint32_t>();
    cfg.delete_lock = c.at("delete_lock").get<std::uint32_t>();
    auto policy = parse_policy(c.at("policy").get<std::string>());
    if (!policy)
        throw StoreError("unknown policy in manifest");
    cfg.policy = *policy;
    return cfg;
}

Ledger load_store(const fs::path& root) {
    StoreLock lock(root);
    ordered_json m = read_manifest(root);
    LedgerConfig cfg = read_store_config(root);

    // Roll an interrupted prune forward.
    for (IntervalIndex i : manifest_deleted(m))
        fs::remove_all(interval_dir(root, i));

    ChainData data = read_chain_data(root);
    auto result = replay_chain(data, cfg);
    if (!result.ledger) {
        const auto& v = result.report.violations.front();
        throw StoreError("store does not verify: " + v.to_string(), v.code);
    }
    return std::move(*result.ledger);
}

std::vector<IntervalIndex> prune_store(Ledger& ledger, const fs::path& root, const StoreFaults& faults) {
    StoreLock lock(root);
    Ledger next = ledger;
    std::vector<IntervalIndex> pruned = next.prune_deletable();
    std::set<IntervalIndex> on_disk = interval_dirs(root);
    for (IntervalIndex i : on_disk) {
        if (next.interval_status(i).state == IntervalStatus::State::Deleted &&
            std::find(pruned.begin(), pruned.end(), i) == pruned.end())
            pruned.push_back(i);
    }
    std::sort(pruned.begin(), pruned.end());
    write_unlocked(next, root, faults);
    ledger = std::move(next);
    return pruned;
}

}  // namespace mutachain
