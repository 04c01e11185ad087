#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mutachain/ledger.hpp"

namespace mutachain {

/// Raw store contents: every permanent block, and whatever removable blocks
/// survive, keyed by interval.
struct ChainData {
    std::vector<PermanentBlock> permanent;
    std::map<IntervalIndex, std::vector<RemovableBlock>> removable;

    static ChainData from_ledger(const Ledger& ledger);
};

struct Violation {
    ErrorCode code = ErrorCode::Ok;
    std::optional<Height> height;
    std::optional<IntervalIndex> interval;
    std::string detail;

    [[nodiscard]] std::string to_string() const;
};

struct VerificationReport {
    std::vector<Violation> violations;
    Height tip_height = 0;
    std::size_t present_intervals = 0;
    std::size_t deleted_intervals = 0;
    std::size_t removable_blocks = 0;

    [[nodiscard]] bool valid() const { return violations.empty(); }
    [[nodiscard]] bool has(ErrorCode code, std::optional<IntervalIndex> interval = std::nullopt) const;
};

struct ReplayResult {
    VerificationReport report;
    std::optional<Ledger> ledger;  // set when the report is valid
};

/// Verifies permanent links from genesis to tip, each present interval's
/// hash chain, length and P-list, Delete evidence for every missing
/// interval, and all stateful rules by replay. Missing intervals are
/// replayed as withheld, so Delete evidence is processed before any rule
/// that would need their contents. On success the returned ledger has
/// already been pruned to the replayed tip.
ReplayResult replay_chain(const ChainData& data, const LedgerConfig& config);

inline VerificationReport verify_chain(const ChainData& data, const LedgerConfig& config) {
    return replay_chain(data, config).report;
}

}  // namespace mutachain
