#pragma once

// Scenario scripts: line-oriented, `directive key=value ...`, `#` comments,
// values with spaces in double quotes.
//
//   scenario name=walkthrough
//   config nodes=3 schedule=constant:1 confirm_depth=1 delete_lock=0
//   fault node=2 kind=wrong-p-list-producer
//   entity name=A
//   genesis register=A,B
//   at step=0 node=0 action=removable entity=A data="m"
//   at step=1 node=1 action=prepare entity=A interval=1 label=p1
//   at step=1 node=1 action=delete entity=A interval=1 prepare=p1
//   at step=1 action=checkpoint label="State 1"
//   fuzz steps=40 entities=4
//   run steps=6
//
// Actions: register, removable (data= or hex=), prepare, delete, info
// (name= controller= purposes=a,b,c), consent (info= value= | grant=a,b),
// checkpoint, join (fault=...).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mutachain/simnet.hpp"

namespace mutachain {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ScenarioAction {
    std::uint64_t step = 0;
    NodeId node = 0;
    std::string action;
    std::map<std::string, std::string> params;
    std::size_t line = 0;
};

struct FuzzSpec {
    std::uint64_t steps = 0;
    std::size_t entities = 4;
    std::size_t max_actions = 3;
};

struct Scenario {
    std::string name;
    SimConfig sim;
    std::vector<std::string> entities;
    std::vector<std::string> genesis;
    std::vector<ScenarioAction> actions;
    std::optional<FuzzSpec> fuzz;
    std::optional<std::uint64_t> steps;
};

/// Throws ScenarioError with the offending line.
Scenario parse_scenario(std::string_view text, std::string default_name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> steps;
    std::optional<RemovalPolicy> policy;
    std::optional<std::uint32_t> confirm_depth;
    std::optional<std::uint32_t> delete_lock;
    /// When set, every node's store is kept under <out>/node<i>, updated
    /// after each step.
    std::optional<std::filesystem::path> out;
};

struct RunResult {
    /// Every honest online node verifies and all of them agree.
    bool ok = false;
    std::string text;
    std::string json;
    std::optional<SimNetwork> net;
    /// Payload of every removable transaction submitted during the run.
    std::map<TxId, Bytes> removable_payloads;
    /// SHA-256 over every store file (path and contents), per node.
    std::map<NodeId, Hash32> store_digests;
};

/// Throws ScenarioError for actions that cannot be resolved (unknown
/// entity, label, ...).
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Digest of a store directory's files, ignoring the lock file.
Hash32 store_digest(const std::filesystem::path& root);

}  // namespace mutachain
