#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mutachain/bytes.hpp"
#include "mutachain/codec.hpp"
#include "mutachain/crypto.hpp"
#include "mutachain/status.hpp"

namespace mutachain {

using TxId = Hash32;
using Height = std::uint32_t;
using IntervalIndex = std::uint32_t;

/// Wire tags are fixed; see the layout table in codec.hpp.
enum class TxKind : std::uint8_t {
    Register = 1,
    Removable = 2,
    Prepare = 3,
    Delete = 4,
    Info = 5,
    Consent = 6,
};

std::string_view kind_name(TxKind kind);

struct OutPoint {
    TxId txid;
    std::uint16_t output_index = 0;

    friend auto operator<=>(const OutPoint&, const OutPoint&) = default;
};

struct RemovablePayload {
    Bytes data;
    friend bool operator==(const RemovablePayload&, const RemovablePayload&) = default;
};

/// Shared by Prepare and Delete.
struct IntervalTarget {
    IntervalIndex interval = 0;
    friend bool operator==(const IntervalTarget&, const IntervalTarget&) = default;
};

/// Purpose labels are bit positions, lowest bit first.
struct InfoPayload {
    std::string controller;
    std::vector<std::string> purposes;
    friend bool operator==(const InfoPayload&, const InfoPayload&) = default;
};

struct ConsentPayload {
    OutPoint info_ref;
    friend bool operator==(const ConsentPayload&, const ConsentPayload&) = default;
};

using Payload = std::variant<std::monostate, RemovablePayload, IntervalTarget, InfoPayload, ConsentPayload>;

/// A signed protocol transaction. Outputs carry no amounts; only their count
/// is part of the record, and each kind fixes how many it must have:
///
///   kind       inputs                       outputs
///   Register   none                         1 (reusable register output)
///   Removable  signer's register output     none
///   Prepare    signer's register output     1 (referenced by a Delete)
///   Delete     none, or one Prepare output  none
///   Info       signer's register output     1 (reusable info output)
///   Consent    register or prior consent    1 (open consent output)
///
/// Register, Removable, Prepare and Info inputs are references, not spends.
struct Transaction {
    TxKind kind = TxKind::Register;
    PubKey signer;
    std::vector<OutPoint> inputs;
    std::uint8_t output_count = 0;
    Payload payload;
    std::uint64_t value = 0;
    Signature signature;

    /// Canonical encoding with the signature omitted.
    [[nodiscard]] Bytes signing_payload() const;
    [[nodiscard]] Bytes encode() const;
    void encode_to(Encoder& enc) const;
    static Transaction decode_from(Decoder& dec);
    static Transaction decode(ByteView data);

    /// Accessors for the kind-specific payload. They throw
    /// std::bad_variant_access when the kind does not match.
    [[nodiscard]] const Bytes& removable_data() const { return std::get<RemovablePayload>(payload).data; }
    [[nodiscard]] IntervalIndex target_interval() const { return std::get<IntervalTarget>(payload).interval; }
    [[nodiscard]] const InfoPayload& info() const { return std::get<InfoPayload>(payload); }
    [[nodiscard]] const OutPoint& info_ref() const { return std::get<ConsentPayload>(payload).info_ref; }

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

[[nodiscard]] TxId tx_id(const Transaction& tx);

/// Parameters for build_transaction. Which fields are required depends on
/// the kind; anything else must be left empty.
struct TxParams {
    std::optional<OutPoint> input;  // register ref, prepare ref, or consent input
    std::optional<Bytes> data;
    std::optional<IntervalIndex> interval;
    std::optional<std::string> controller;
    std::optional<std::vector<std::string>> purposes;
    std::optional<OutPoint> info;
    std::optional<std::uint64_t> value;
};

class TxBuildError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Builds and signs a transaction. Throws TxBuildError on missing or extra
/// parameters for the kind.
Transaction build_transaction(TxKind kind, const KeyPair& signer, const TxParams& params);

/// Signs in place; used by builders and by tests that hand-craft malformed
/// transactions.
void sign_transaction(Transaction& tx, const KeyPair& signer);

/// Register output of a register transaction.
inline OutPoint register_output(const TxId& reg) { return {reg, 0}; }

Transaction make_register(const KeyPair& kp);
Transaction make_removable(const KeyPair& kp, const TxId& register_tx, Bytes data);
Transaction make_prepare(const KeyPair& kp, const TxId& register_tx, IntervalIndex interval);
Transaction make_delete(const KeyPair& kp, IntervalIndex interval, std::optional<TxId> prepare = std::nullopt);
Transaction make_info(const KeyPair& kp, const TxId& register_tx, std::string controller,
                      std::vector<std::string> purposes);
Transaction make_consent(const KeyPair& kp, OutPoint input, const TxId& info_tx, std::uint64_t value);

/// Signature plus the kind's shape rules; no ledger lookups.
Status validate_stateless(const Transaction& tx);

constexpr std::size_t kMaxPurposes = 64;

}  // namespace mutachain
