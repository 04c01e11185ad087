#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mutachain/simnet.hpp"

namespace mutachain {

struct WorkloadConfig {
    std::size_t entities = 4;
    std::size_t max_actions_per_step = 3;
    // Relative weights of the action kinds.
    double removable = 0.5;
    double prepare = 0.15;
    double del = 0.2;
    double bogus_delete = 0.05;
};

struct WorkloadEntity {
    std::string name;
    KeyPair kp;
    Transaction reg;
    TxId reg_id;
};

/// Seeded client traffic for a SimNetwork: registrations, removable
/// transactions with unique 16-byte payloads, and prepares/deletes chosen
/// from what the submitting node's ledger currently allows, plus the odd
/// delete that must be refused.
class RandomWorkload {
public:
    RandomWorkload(std::uint64_t seed, WorkloadConfig config);

    /// Registers of the first half of the entities; the rest register later.
    [[nodiscard]] std::vector<Transaction> genesis_txs() const;
    std::vector<ClientAction> next(const SimNetwork& net);

    [[nodiscard]] const std::vector<WorkloadEntity>& entities() const { return entities_; }
    /// Payload of every removable transaction generated so far.
    [[nodiscard]] const std::map<TxId, Bytes>& payloads() const { return payloads_; }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    Bytes marker();

    std::uint64_t seed_;
    WorkloadConfig config_;
    std::mt19937_64 rng_;
    std::vector<WorkloadEntity> entities_;
    std::set<std::size_t> register_sent_;
    std::set<std::pair<std::size_t, IntervalIndex>> prepare_sent_;
    std::map<TxId, Bytes> payloads_;
    std::uint64_t counter_ = 0;
};

}  // namespace mutachain
