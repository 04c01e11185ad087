#include "mutachain/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

namespace mutachain {

namespace {
void ensure_sodium() {
    static const bool ready = [] {
        if (sodium_init() < 0)
            throw std::runtime_error("libsodium initialisation failed");
        return true;
    }();
    (void)ready;
}
}  // namespace

Hash32 digest(ByteView data) {
    ensure_sodium();
    Hash32 out;
    crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
    return out;
}

KeyPair keypair_from_seed(ByteView seed) {
    if (seed.size() != crypto_sign_SEEDBYTES)
        throw std::invalid_argument("key seed must be 32 bytes, got " + std::to_string(seed.size()));
    ensure_sodium();
    KeyPair kp;
    crypto_sign_seed_keypair(kp.pubkey.bytes.data(), kp.secret.data(), seed.data());
    return kp;
}

KeyPair keypair_from_label(std::string_view label) {
    Hash32 seed = digest({reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
    return keypair_from_seed(seed.view());
}

Signature sign_payload(const KeyPair& kp, ByteView payload) {
    if (payload.empty())
        throw std::invalid_argument("refusing to sign an empty payload");
    ensure_sodium();
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, payload.data(), payload.size(), kp.secret.data());
    return sig;
}

bool verify_signature(const PubKey& pk, ByteView payload, const Signature& sig) noexcept {
    try {
        ensure_sodium();
    } catch (...) {
        return false;
    }
    return crypto_sign_verify_detached(sig.bytes.data(), payload.data(), payload.size(),
                                       pk.bytes.data()) == 0;
}

}  // namespace mutachain
