#include "mutachain/codec.hpp"

#include <limits>

namespace mutachain {

void Encoder::bytes(ByteView data) {
    if (data.size() > std::numeric_limits<std::uint32_t>::max())
        throw EncodeError("byte string exceeds u32 length prefix");
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

void Encoder::count(std::size_t n) {
    if (n > std::numeric_limits<std::uint16_t>::max())
        throw EncodeError("collection of " + std::to_string(n) + " elements exceeds u16 count");
    u16(static_cast<std::uint16_t>(n));
}

void Encoder::small_count(std::size_t n) {
    if (n > std::numeric_limits<std::uint8_t>::max())
        throw EncodeError("collection of " + std::to_string(n) + " elements exceeds u8 count");
    u8(static_cast<std::uint8_t>(n));
}

ByteView Decoder::raw(std::size_t n) {
    if (remaining() < n)
        throw DecodeError("truncated input: need " + std::to_string(n) + " bytes, have " +
                          std::to_string(remaining()));
    ByteView out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

Bytes Decoder::bytes() {
    std::uint32_t len = u32();
    ByteView v = raw(len);
    return Bytes(v.begin(), v.end());
}

std::string Decoder::string() {
    Bytes b = bytes();
    return std::string(b.begin(), b.end());
}

bool Decoder::presence() {
    std::uint8_t flag = u8();
    if (flag > 1)
        throw DecodeError("presence byte must be 0 or 1");
    return flag == 1;
}

void Decoder::expect_done() const {
    if (!done())
        throw DecodeError(std::to_string(remaining()) + " trailing bytes");
}

std::uint64_t Decoder::get_le(int width) {
    ByteView b = raw(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
        v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

}  // namespace mutachain
