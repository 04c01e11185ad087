#pragma once

// On-disk block store.
//
//   <root>/permanent.log        u32 length + encoded permanent block, appended
//   <root>/interval_<i>/<j>.blk one encoded removable block per file
//   <root>/manifest             JSON: tip, interval statuses, config echo
//   <root>/store.lock           present while a process holds the store
//
// Deleting an interval removes its directory, so no bytes of its blocks
// remain in the store. The manifest is replaced by write-then-rename; that
// rename is the commit point of a prune, and directories are removed only
// after it. A load finishes an interrupted prune by removing directories
// the manifest already lists as deleted.

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "mutachain/verify.hpp"

namespace mutachain {

class StoreError : public std::runtime_error {
public:
    explicit StoreError(const std::string& what, ErrorCode code = ErrorCode::Ok)
        : std::runtime_error(what), code_(code) {}
    /// Ok for I/O and format problems; the violation code when the stored
    /// chain does not verify.
    [[nodiscard]] ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// Exclusive access to a store directory for the lifetime of the object.
class StoreLock {
public:
    /// Throws StoreError when another holder exists.
    explicit StoreLock(const std::filesystem::path& root);
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    std::filesystem::path path_;
};

/// Fault injection for crash-safety tests.
struct StoreFaults {
    bool fail_manifest_rename = false;  // throws before the commit point
    bool stop_after_commit = false;     // returns before removing directories
};

/// Brings the store in line with `ledger`: appends missing permanent blocks,
/// writes missing removable blocks, commits the manifest and removes the
/// directories of deleted intervals.
void save_store(const Ledger& ledger, const std::filesystem::path& root, const StoreFaults& faults = {});

/// Raw contents, with no verification beyond decoding.
ChainData read_chain_data(const std::filesystem::path& root);

/// Config echoed in the manifest (the miner-judgment hook is not stored).
LedgerConfig read_store_config(const std::filesystem::path& root);

/// Reads and replays the store. Throws StoreError carrying the first
/// violation code (e.g. MissingDeleteEvidence) when it does not verify.
Ledger load_store(const std::filesystem::path& root);

/// Prunes every deletable interval in `ledger` and on disk. On a failure
/// before the manifest commit both are left untouched.
std::vector<IntervalIndex> prune_store(Ledger& ledger, const std::filesystem::path& root,
                                       const StoreFaults& faults = {});

}  // namespace mutachain
