#include "mutachain/block.hpp"

#include <algorithm>
#include <set>

namespace mutachain {

void RemovableBlockHeader::encode_to(Encoder& enc) const {
    enc.u32(interval);
    enc.u16(position);
    enc.fixed(prev);
    enc.fixed(tx_root);
}

RemovableBlockHeader RemovableBlockHeader::decode_from(Decoder& dec) {
    RemovableBlockHeader h;
    h.interval = dec.u32();
    h.position = dec.u16();
    h.prev = dec.fixed<Hash32>();
    h.tx_root = dec.fixed<Hash32>();
    return h;
}

Hash32 RemovableBlockHeader::hash() const {
    Encoder enc;
    encode_to(enc);
    return digest(enc.data());
}

namespace {

void encode_txs(Encoder& enc, const std::vector<Transaction>& txs) {
    enc.count(txs.size());
    for (const auto& tx : txs)
        tx.encode_to(enc);
}

std::vector<Transaction> decode_txs(Decoder& dec) {
    std::size_t n = dec.count();
    std::vector<Transaction> txs;
    txs.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        txs.push_back(Transaction::decode_from(dec));
    return txs;
}

}  // namespace

Bytes RemovableBlock::encode() const {
    Encoder enc;
    header.encode_to(enc);
    encode_txs(enc, transactions);
    return std::move(enc).take();
}

RemovableBlock RemovableBlock::decode(ByteView data) {
    Decoder dec(data);
    RemovableBlock b;
    b.header = RemovableBlockHeader::decode_from(dec);
    b.transactions = decode_txs(dec);
    dec.expect_done();
    return b;
}

void PermanentBlockHeader::encode_to(Encoder& enc) const {
    enc.u32(height);
    enc.fixed(prev_permanent);
    enc.fixed(prev_removable);
    enc.u8(interval_len);
    enc.small_count(p_list.size());
    for (const auto& pk : p_list)
        enc.fixed(pk);
    enc.fixed(tx_root);
}

Bytes PermanentBlockHeader::encode() const {
    Encoder enc;
    encode_to(enc);
    return std::move(enc).take();
}

PermanentBlockHeader PermanentBlockHeader::decode_from(Decoder& dec) {
    PermanentBlockHeader h;
    h.height = dec.u32();
    h.prev_permanent = dec.fixed<Hash32>();
    h.prev_removable = dec.fixed<Hash32>();
    h.interval_len = dec.u8();
    std::size_t n = dec.small_count();
    for (std::size_t i = 0; i < n; ++i)
        h.p_list.push_back(dec.fixed<PubKey>());
    h.tx_root = dec.fixed<Hash32>();
    return h;
}

Hash32 PermanentBlockHeader::hash() const { return digest(encode()); }

Bytes PermanentBlock::encode() const {
    Encoder enc;
    header.encode_to(enc);
    encode_txs(enc, transactions);
    return std::move(enc).take();
}

PermanentBlock PermanentBlock::decode(ByteView data) {
    Decoder dec(data);
    PermanentBlock b;
    b.header = PermanentBlockHeader::decode_from(dec);
    b.transactions = decode_txs(dec);
    dec.expect_done();
    return b;
}

Hash32 compute_tx_root(std::span<const Transaction> txs) {
    Encoder enc;
    enc.count(txs.size());
    for (const auto& tx : txs)
        enc.fixed(tx_id(tx));
    return digest(enc.data());
}

RemovableBlock build_removable_block(const Hash32& prev, IntervalIndex interval, std::uint16_t position,
                                     std::vector<Transaction> txs) {
    if (position == 0)
        throw BlockError(ErrorCode::BlockShapeError, "removable block positions start at 1");
    for (const auto& tx : txs) {
        if (tx.kind != TxKind::Removable)
            throw BlockError(ErrorCode::BlockShapeError,
                             std::string(kind_name(tx.kind)) + " transaction in a removable block");
    }
    RemovableBlock b;
    b.header.interval = interval;
    b.header.position = position;
    b.header.prev = prev;
    b.header.tx_root = compute_tx_root(txs);
    b.transactions = std::move(txs);
    return b;
}

std::vector<PubKey> derive_p_list(std::span<const RemovableBlock> interval_blocks) {
    std::set<PubKey> keys;
    for (const auto& b : interval_blocks)
        for (const auto& tx : b.transactions)
            keys.insert(tx.signer);
    return {keys.begin(), keys.end()};
}

Status check_interval_chain(const Hash32& anchor, IntervalIndex interval, std::span<const RemovableBlock> blocks) {
    Hash32 expected_prev = anchor;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& h = blocks[k].header;
        if (h.interval != interval || h.position != k + 1)
            return {ErrorCode::BrokenIntervalChain, "block " + std::to_string(k) + " of interval " +
                                                        std::to_string(interval) + " has coordinates (" +
                                                        std::to_string(h.interval) + "." +
                                                        std::to_string(h.position) + ")"};
        if (h.prev != expected_prev)
            return {ErrorCode::BrokenIntervalChain, "B_" + std::to_string(interval) + "." +
                                                        std::to_string(k + 1) + " does not link to its predecessor"};
        expected_prev = blocks[k].hash();
    }
    return Status::ok();
}

PermanentBlock build_permanent_block(Height height, const Hash32& prev_permanent,
                                     std::span<const RemovableBlock> interval_blocks,
                                     std::vector<Transaction> txs) {
    if (interval_blocks.size() > kMaxIntervalLen)
        throw BlockError(ErrorCode::BlockShapeError, "interval longer than 255 blocks");
    if (auto st = check_interval_chain(prev_permanent, height, interval_blocks); !st)
        throw BlockError(st.code(), st.detail());
    for (const auto& tx : txs) {
        if (tx.kind == TxKind::Removable)
            throw BlockError(ErrorCode::BlockShapeError, "removable transaction in a permanent block");
    }
    auto p_list = derive_p_list(interval_blocks);
    if (p_list.size() > kPListCapacity)
        throw BlockError(ErrorCode::PListOverflow, std::to_string(p_list.size()) + " distinct signers exceed the " +
                                                       std::to_string(kPListCapacity) + "-key P-list");

    PermanentBlock b;
    b.header.height = height;
    b.header.prev_permanent = prev_permanent;
    b.header.prev_removable = interval_blocks.empty() ? NULL_HASH : interval_blocks.back().hash();
    b.header.interval_len = static_cast<std::uint8_t>(interval_blocks.size());
    b.header.p_list = std::move(p_list);
    b.header.tx_root = compute_tx_root(txs);
    b.transactions = std::move(txs);
    return b;
}

HeaderOverhead header_overhead(const PermanentBlockHeader& header) {
    HeaderOverhead o;
    o.second_link = Hash32::size_bytes;
    o.interval_len = sizeof(header.interval_len);
    o.fixed = o.second_link + o.interval_len;
    o.p_list = 1 + header.p_list.size() * PubKey::size_bytes;
    o.total = o.fixed + o.p_list;
    return o;
}

}  // namespace mutachain
