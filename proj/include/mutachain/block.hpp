#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mutachain/status.hpp"
#include "mutachain/transaction.hpp"

namespace mutachain {

constexpr std::size_t kPListCapacity = 4;
constexpr std::size_t kMaxIntervalLen = 255;
constexpr std::size_t kRemovableHeaderSize = 70;
/// Permanent header size with an empty P-list; each key adds 32 bytes.
constexpr std::size_t kPermanentHeaderFixedSize = 102;

/// Raised by the block builders. Carries the same codes the ledger reports.
class BlockError : public std::runtime_error {
public:
    BlockError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// B_{i.j}: position j (1-based) of interval i. `prev` is B_{i.j-1}, or
/// B_{i-1} for the first block. No nonce.
struct RemovableBlockHeader {
    IntervalIndex interval = 0;
    std::uint16_t position = 0;
    Hash32 prev;
    Hash32 tx_root;

    void encode_to(Encoder& enc) const;
    static RemovableBlockHeader decode_from(Decoder& dec);
    [[nodiscard]] Hash32 hash() const;

    friend bool operator==(const RemovableBlockHeader&, const RemovableBlockHeader&) = default;
};

struct RemovableBlock {
    RemovableBlockHeader header;
    std::vector<Transaction> transactions;

    [[nodiscard]] Hash32 hash() const { return header.hash(); }
    [[nodiscard]] Bytes encode() const;
    static RemovableBlock decode(ByteView data);

    friend bool operator==(const RemovableBlock&, const RemovableBlock&) = default;
};

/// B_i. Links both to B_{i-1} and to the last block of interval I_i.
struct PermanentBlockHeader {
    Height height = 0;
    Hash32 prev_permanent;
    Hash32 prev_removable;  // NULL_HASH when interval_len == 0
    std::uint8_t interval_len = 0;
    std::vector<PubKey> p_list;  // sorted, unique, at most kPListCapacity
    Hash32 tx_root;

    void encode_to(Encoder& enc) const;
    [[nodiscard]] Bytes encode() const;
    static PermanentBlockHeader decode_from(Decoder& dec);
    [[nodiscard]] Hash32 hash() const;

    friend bool operator==(const PermanentBlockHeader&, const PermanentBlockHeader&) = default;
};

struct PermanentBlock {
    PermanentBlockHeader header;
    std::vector<Transaction> transactions;

    [[nodiscard]] Hash32 hash() const { return header.hash(); }
    [[nodiscard]] Bytes encode() const;
    static PermanentBlock decode(ByteView data);

    friend bool operator==(const PermanentBlock&, const PermanentBlock&) = default;
};

Hash32 compute_tx_root(std::span<const Transaction> txs);

/// Throws BlockError(BlockShapeError) if any transaction is not Removable.
RemovableBlock build_removable_block(const Hash32& prev, IntervalIndex interval, std::uint16_t position,
                                     std::vector<Transaction> txs);

/// Sorted, deduplicated signers of every transaction in the interval.
std::vector<PubKey> derive_p_list(std::span<const RemovableBlock> interval_blocks);

/// Assembles B_height on top of `prev_permanent`. Throws BlockError with
/// PListOverflow, BrokenIntervalChain or BlockShapeError.
PermanentBlock build_permanent_block(Height height, const Hash32& prev_permanent,
                                     std::span<const RemovableBlock> interval_blocks,
                                     std::vector<Transaction> txs);

/// Checks that `blocks` form interval `interval` hanging off `anchor`.
Status check_interval_chain(const Hash32& anchor, IntervalIndex interval, std::span<const RemovableBlock> blocks);

/// Bytes a permanent header spends on mutability, split by field.
struct HeaderOverhead {
    std::size_t second_link = 0;   // prev_removable
    std::size_t interval_len = 0;  // |I_i|
    std::size_t fixed = 0;         // second_link + interval_len
    std::size_t p_list = 0;        // count byte + 32 per key
    std::size_t total = 0;         // fixed + p_list
};

HeaderOverhead header_overhead(const PermanentBlockHeader& header);

}  // namespace mutachain
