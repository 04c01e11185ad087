#pragma once

// Consent management on top of the ledger.
//
// A controller publishes an Info transaction naming its purposes; bit k of a
// consent value grants purposes[k]. A subject's consent is a chain of Consent
// transactions, each spending the previous one's output; the unspent tip is
// the consent in force, and value 0 is a revocation.
//
// Info and Consent transactions live in permanent blocks and can never be
// erased. Anything personal that may need erasing later belongs in a
// Removable transaction instead.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mutachain/ledger.hpp"

namespace mutachain {

class ConsentError : public std::runtime_error {
public:
    ConsentError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct PurposeSchema {
    TxId info_txid;
    std::string controller;
    std::vector<std::string> purposes;  // bit position = index, lowest first

    static PurposeSchema from_info(const InfoRecord& record);
};

/// Throws ConsentError(UnknownLabel) for a label outside the schema.
std::uint64_t encode_consent_value(const PurposeSchema& schema, const std::set<std::string>& granted);
std::set<std::string> decode_consent_value(const PurposeSchema& schema, std::uint64_t value);

struct ConsentStep {
    TxId txid;
    std::uint64_t value = 0;
    Height height = 0;

    friend bool operator==(const ConsentStep&, const ConsentStep&) = default;
};

struct ConsentState {
    PubKey subject;
    TxId info_txid;
    std::uint64_t value = 0;
    OutPoint tip;
    std::vector<ConsentStep> history;  // the live chain, oldest first

    [[nodiscard]] bool revoked() const { return value == 0; }
};

/// Throws ConsentError(UnknownInfo) when `info` is not a confirmed Info.
std::optional<ConsentState> current_consent(const Ledger& ledger, const PubKey& subject, const TxId& info);

struct AuditEntry {
    PubKey subject;
    std::vector<ConsentStep> history;  // every chain, in confirmation order
    std::uint64_t current = 0;

    friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

/// One entry per subject that ever consented to `info`, ordered by first
/// consent. Throws ConsentError(UnknownInfo).
std::vector<AuditEntry> audit_trail(const Ledger& ledger, const TxId& info);

}  // namespace mutachain
