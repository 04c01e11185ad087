#pragma once

#include <array>

#include "mutachain/bytes.hpp"

namespace mutachain {

/// SHA-256.
Hash32 digest(ByteView data);

/// Ed25519 key pair. The secret half never leaves this struct except through
/// sign_payload.
struct KeyPair {
    std::array<std::uint8_t, 64> secret{};
    PubKey pubkey;

    friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

/// Deterministic: the same 32-byte seed always yields the same keys.
/// Throws std::invalid_argument when the seed is not 32 bytes.
KeyPair keypair_from_seed(ByteView seed);

/// Convenience for tests and scenarios: seed = SHA-256(label).
KeyPair keypair_from_label(std::string_view label);

/// Throws std::invalid_argument on an empty payload.
Signature sign_payload(const KeyPair& kp, ByteView payload);

/// Total: malformed keys or signatures simply fail to verify.
bool verify_signature(const PubKey& pk, ByteView payload, const Signature& sig) noexcept;

}  // namespace mutachain
