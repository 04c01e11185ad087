#include "mutachain/transaction.hpp"

#include <set>

namespace mutachain {

std::string_view kind_name(TxKind kind) {
    switch (kind) {
        case TxKind::Register: return "Reg";
        case TxKind::Removable: return "Rem";
        case TxKind::Prepare: return "Prep";
        case TxKind::Delete: return "Del";
        case TxKind::Info: return "Info";
        case TxKind::Consent: return "Con";
    }
    return "?";
}

namespace {

void encode_outpoint(Encoder& enc, const OutPoint& op) {
    enc.fixed(op.txid);
    enc.u16(op.output_index);
}

OutPoint decode_outpoint(Decoder& dec) {
    OutPoint op;
    op.txid = dec.fixed<Hash32>();
    op.output_index = dec.u16();
    return op;
}

void encode_unsigned(Encoder& enc, const Transaction& tx) {
    enc.u8(static_cast<std::uint8_t>(tx.kind));
    enc.fixed(tx.signer);
    enc.count(tx.inputs.size());
    for (const auto& in : tx.inputs)
        encode_outpoint(enc, in);
    enc.u8(tx.output_count);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, RemovablePayload>) {
                enc.bytes(p.data);
            } else if constexpr (std::is_same_v<P, IntervalTarget>) {
                enc.u32(p.interval);
            } else if constexpr (std::is_same_v<P, InfoPayload>) {
                enc.string(p.controller);
                enc.count(p.purposes.size());
                for (const auto& label : p.purposes)
                    enc.string(label);
            } else if constexpr (std::is_same_v<P, ConsentPayload>) {
                encode_outpoint(enc, p.info_ref);
            }
        },
        tx.payload);
    enc.u64(tx.value);
}

// Payload alternative each kind must carry.
std::size_t payload_index_for(TxKind kind) {
    switch (kind) {
        case TxKind::Register: return 0;
        case TxKind::Removable: return 1;
        case TxKind::Prepare:
        case TxKind::Delete: return 2;
        case TxKind::Info: return 3;
        case TxKind::Consent: return 4;
    }
    return 0;
}

}  // namespace

Bytes Transaction::signing_payload() const {
    Encoder enc;
    encode_unsigned(enc, *this);
    return std::move(enc).take();
}

void Transaction::encode_to(Encoder& enc) const {
    encode_unsigned(enc, *this);
    enc.fixed(signature);
}

Bytes Transaction::encode() const {
    Encoder enc;
    encode_to(enc);
    return std::move(enc).take();
}

Transaction Transaction::decode_from(Decoder& dec) {
    Transaction tx;
    std::uint8_t tag = dec.u8();
    if (tag < 1 || tag > 6)
        throw DecodeError("unknown transaction kind tag " + std::to_string(tag));
    tx.kind = static_cast<TxKind>(tag);
    tx.signer = dec.fixed<PubKey>();
    std::size_t n_inputs = dec.count();
    for (std::size_t i = 0; i < n_inputs; ++i)
        tx.inputs.push_back(decode_outpoint(dec));
    tx.output_count = dec.u8();
    switch (tx.kind) {
        case TxKind::Register:
            break;
        case TxKind::Removable:
            tx.payload = RemovablePayload{dec.bytes()};
            break;
        case TxKind::Prepare:
        case TxKind::Delete:
            tx.payload = IntervalTarget{dec.u32()};
            break;
        case TxKind::Info: {
            InfoPayload info;
            info.controller = dec.string();
            std::size_t n = dec.count();
            for (std::size_t i = 0; i < n; ++i)
                info.purposes.push_back(dec.string());
            tx.payload = std::move(info);
            break;
        }
        case TxKind::Consent:
            tx.payload = ConsentPayload{decode_outpoint(dec)};
            break;
    }
    tx.value = dec.u64();
    tx.signature = dec.fixed<Signature>();
    return tx;
}

Transaction Transaction::decode(ByteView data) {
    Decoder dec(data);
    Transaction tx = decode_from(dec);
    dec.expect_done();
    return tx;
}

TxId tx_id(const Transaction& tx) { return digest(tx.encode()); }

void sign_transaction(Transaction& tx, const KeyPair& signer) {
    tx.signer = signer.pubkey;
    tx.signature = sign_payload(signer, tx.signing_payload());
}

namespace {

void require(bool present, TxKind kind, const char* field) {
    if (!present)
        throw TxBuildError(std::string(kind_name(kind)) + " requires parameter '" + field + "'");
}

void forbid(bool present, TxKind kind, const char* field) {
    if (present)
        throw TxBuildError(std::string(kind_name(kind)) + " does not take parameter '" + field + "'");
}

}  // namespace

Transaction build_transaction(TxKind kind, const KeyPair& signer, const TxParams& p) {
    Transaction tx;
    tx.kind = kind;

    const bool wants_input = kind != TxKind::Register && kind != TxKind::Delete;
    const bool wants_data = kind == TxKind::Removable;
    const bool wants_interval = kind == TxKind::Prepare || kind == TxKind::Delete;
    const bool wants_info_fields = kind == TxKind::Info;
    const bool wants_consent = kind == TxKind::Consent;

    if (wants_input)
        require(p.input.has_value(), kind, "input");
    else if (kind != TxKind::Delete)
        forbid(p.input.has_value(), kind, "input");
    (wants_data ? require : forbid)(p.data.has_value(), kind, "data");
    (wants_interval ? require : forbid)(p.interval.has_value(), kind, "interval");
    (wants_info_fields ? require : forbid)(p.controller.has_value(), kind, "controller");
    (wants_info_fields ? require : forbid)(p.purposes.has_value(), kind, "purposes");
    (wants_consent ? require : forbid)(p.info.has_value(), kind, "info");
    if (wants_consent)
        require(p.value.has_value(), kind, "value");
    else if (p.value.value_or(0) != 0)
        throw TxBuildError(std::string(kind_name(kind)) + " must carry value 0");

    if (p.input)
        tx.inputs.push_back(*p.input);

    switch (kind) {
        case TxKind::Register:
            tx.output_count = 1;
            break;
        case TxKind::Removable:
            tx.payload = RemovablePayload{*p.data};
            break;
        case TxKind::Prepare:
            tx.output_count = 1;
            tx.payload = IntervalTarget{*p.interval};
            break;
        case TxKind::Delete:
            tx.payload = IntervalTarget{*p.interval};
            break;
        case TxKind::Info:
            tx.output_count = 1;
            tx.payload = InfoPayload{*p.controller, *p.purposes};
            break;
        case TxKind::Consent:
            tx.output_count = 1;
            tx.payload = ConsentPayload{*p.info};
            tx.value = *p.value;
            break;
    }
    sign_transaction(tx, signer);
    return tx;
}

Transaction make_register(const KeyPair& kp) { return build_transaction(TxKind::Register, kp, {}); }

Transaction make_removable(const KeyPair& kp, const TxId& register_tx, Bytes data) {
    TxParams p;
    p.input = register_output(register_tx);
    p.data = std::move(data);
    return build_transaction(TxKind::Removable, kp, p);
}

Transaction make_prepare(const KeyPair& kp, const TxId& register_tx, IntervalIndex interval) {
    TxParams p;
    p.input = register_output(register_tx);
    p.interval = interval;
    return build_transaction(TxKind::Prepare, kp, p);
}

Transaction make_delete(const KeyPair& kp, IntervalIndex interval, std::optional<TxId> prepare) {
    TxParams p;
    p.interval = interval;
    if (prepare)
        p.input = OutPoint{*prepare, 0};
    return build_transaction(TxKind::Delete, kp, p);
}

Transaction make_info(const KeyPair& kp, const TxId& register_tx, std::string controller,
                      std::vector<std::string> purposes) {
    TxParams p;
    p.input = register_output(register_tx);
    p.controller = std::move(controller);
    p.purposes = std::move(purposes);
    return build_transaction(TxKind::Info, kp, p);
}

Transaction make_consent(const KeyPair& kp, OutPoint input, const TxId& info_tx, std::uint64_t value) {
    TxParams p;
    p.input = input;
    p.info = OutPoint{info_tx, 0};
    p.value = value;
    return build_transaction(TxKind::Consent, kp, p);
}

namespace {

Status shape(std::string rule) { return {ErrorCode::ShapeViolation, std::move(rule)}; }

}  // namespace

Status validate_stateless(const Transaction& tx) {
    // Signature first: any post-signing mutation reports BadSignature.
    if (!verify_signature(tx.signer, tx.signing_payload(), tx.signature))
        return {ErrorCode::BadSignature, "signature does not verify under the signer key"};
    if (tx.payload.index() != payload_index_for(tx.kind))
        return shape("payload does not match kind");

    switch (tx.kind) {
        case TxKind::Register:
            if (!tx.inputs.empty())
                return shape("a register transaction has no input");
            if (tx.output_count != 1)
                return shape("a register transaction has exactly one reusable output");
            break;
        case TxKind::Removable:
            if (tx.output_count != 0)
                return shape("removable transactions have no output");
            if (tx.inputs.size() != 1 || tx.inputs[0].output_index != 0)
                return shape("a removable transaction references exactly one register output");
            break;
        case TxKind::Prepare:
            if (tx.inputs.size() != 1 || tx.inputs[0].output_index != 0)
                return shape("a prepare transaction references exactly one register output");
            if (tx.output_count != 1)
                return shape("a prepare transaction has exactly one output");
            if (tx.target_interval() == 0)
                return shape("interval 0 does not exist");
            break;
        case TxKind::Delete:
            if (tx.inputs.size() > 1 || (tx.inputs.size() == 1 && tx.inputs[0].output_index != 0))
                return shape("a delete transaction has no input or one prepare output");
            if (tx.output_count != 0)
                return shape("a delete transaction has no output");
            if (tx.target_interval() == 0)
                return shape("interval 0 does not exist");
            break;
        case TxKind::Info: {
            if (tx.inputs.size() != 1 || tx.inputs[0].output_index != 0)
                return shape("an info transaction references exactly one register output");
            if (tx.output_count != 1)
                return shape("an info transaction has exactly one reusable output");
            const auto& purposes = tx.info().purposes;
            if (purposes.empty() || purposes.size() > kMaxPurposes)
                return shape("an info transaction declares 1 to 64 purposes");
            std::set<std::string> unique(purposes.begin(), purposes.end());
            if (unique.size() != purposes.size())
                return shape("purpose labels must be unique");
            break;
        }
        case TxKind::Consent:
            if (tx.inputs.size() != 1)
                return shape("a consent transaction consumes exactly one input");
            if (tx.output_count != 1)
                return shape("a consent transaction has exactly one open output");
            if (tx.info_ref().output_index != 0)
                return shape("a consent transaction references an info output");
            break;
    }
    if (tx.kind != TxKind::Consent && tx.value != 0)
        return shape("only consent transactions carry a value");

    return Status::ok();
}

}  // namespace mutachain
