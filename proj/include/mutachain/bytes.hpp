#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mutachain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
/// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Fixed-width byte string. The tag keeps digests, keys and signatures from
/// being mixed up at compile time.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t size_bytes = N;
    std::array<std::uint8_t, N> bytes{};

    constexpr FixedBytes() = default;
    explicit FixedBytes(const std::array<std::uint8_t, N>& raw) : bytes(raw) {}

    /// Throws std::invalid_argument when `raw` is not exactly N bytes.
    static FixedBytes from(ByteView raw);
    static FixedBytes from_hex(std::string_view hex) { return from(mutachain::from_hex(hex)); }

    [[nodiscard]] ByteView view() const { return {bytes.data(), bytes.size()}; }
    [[nodiscard]] std::string hex() const { return to_hex(view()); }
    [[nodiscard]] std::string short_hex() const { return hex().substr(0, 12); }
    [[nodiscard]] bool is_zero() const {
        return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
    }
    [[nodiscard]] constexpr std::size_t size() const { return N; }

    friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

void throw_size_mismatch(std::size_t expected, std::size_t got);

template <std::size_t N, typename Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from(ByteView raw) {
    if (raw.size() != N)
        throw_size_mismatch(N, raw.size());
    FixedBytes out;
    std::copy(raw.begin(), raw.end(), out.bytes.begin());
    return out;
}

struct HashTag {};
struct PubKeyTag {};
struct SignatureTag {};

using Hash32 = FixedBytes<32, HashTag>;
using PubKey = FixedBytes<32, PubKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

/// All-zero digest. Marks "no removable predecessor"; never produced by
/// hashing protocol content.
inline const Hash32 NULL_HASH{};

}  // namespace mutachain
