#pragma once

// Canonical binary encoding.
//
// Rules shared by every encodable value:
//   * fields are written in declaration order, with no padding;
//   * fixed-width integers are little-endian;
//   * variable byte strings carry a 4-byte (u32) length prefix;
//   * collections carry a 2-byte (u16) element count, except the P-list,
//     whose capacity is 4 and which uses a 1-byte count;
//   * optional fields carry a 1-byte presence flag (0 or 1) followed by the
//     value when present.
//
// Layout table (normative; all byte counts in the library derive from it):
//
//   OutPoint                      34 B
//     txid                        32
//     output_index                u16
//
//   Transaction
//     kind                        u8   (Register=1 Removable=2 Prepare=3
//                                       Delete=4 Info=5 Consent=6)
//     signer                      32
//     inputs                      u16 count + count * OutPoint
//     output_count                u8
//     payload                     per kind:
//       Register                  (empty)
//       Removable                 data: u32 len + bytes
//       Prepare                   target_interval: u32
//       Delete                    target_interval: u32
//       Info                      controller: u32 len + bytes,
//                                 purposes: u16 count + (u32 len + bytes)*
//       Consent                   info_ref: OutPoint
//     value                       u64
//     signature                   64   (absent from the signing payload)
//
//   RemovableBlockHeader          70 B
//     interval_index              u32
//     position                    u16  (1-based)
//     prev                        32
//     tx_root                     32
//
//   PermanentBlockHeader          102 B + 32 B per P-list key
//     height                      u32
//     prev_permanent              32
//     prev_removable              32   (NULL_HASH for an empty interval)
//     interval_len                u8
//     p_list                      u8 count + count * 32
//     tx_root                     32
//
//   RemovableBlock / PermanentBlock
//     header                      as above
//     transactions                u16 count + count * Transaction
//
//   tx_root   = SHA-256(u16 count || txid_1 || ... || txid_n)
//   block id  = SHA-256(encoded header)
//   txid      = SHA-256(encoded transaction, signature included)

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "mutachain/bytes.hpp"

namespace mutachain {

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Encoder {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }

    /// Raw bytes, no prefix. For fixed-width fields.
    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }
    template <std::size_t N, typename Tag>
    void fixed(const FixedBytes<N, Tag>& v) { raw(v.view()); }

    /// u32 length prefix + bytes.
    void bytes(ByteView data);
    void string(std::string_view s) { bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}); }

    /// u16 collection count; throws EncodeError above 65535.
    void count(std::size_t n);
    /// u8 collection count; throws EncodeError above 255.
    void small_count(std::size_t n);

    void presence(bool present) { u8(present ? 1 : 0); }

    [[nodiscard]] const Bytes& data() const& { return out_; }
    [[nodiscard]] Bytes take() && { return std::move(out_); }
    [[nodiscard]] std::size_t size() const { return out_.size(); }

private:
    void put_le(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes out_;
};

class Decoder {
public:
    explicit Decoder(ByteView in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }

    ByteView raw(std::size_t n);
    template <typename T>
    T fixed() { return T::from(raw(T::size_bytes)); }

    Bytes bytes();
    std::string string();
    std::size_t count() { return u16(); }
    std::size_t small_count() { return u8(); }
    bool presence();

    [[nodiscard]] std::size_t remaining() const { return in_.size() - pos_; }
    [[nodiscard]] bool done() const { return pos_ == in_.size(); }
    /// Throws DecodeError when unread bytes remain.
    void expect_done() const;

private:
    std::uint64_t get_le(int width);

    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace mutachain
