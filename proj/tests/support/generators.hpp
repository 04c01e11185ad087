#pragma once

#include <random>
#include <string>
#include <vector>

#include "mutachain/block.hpp"

namespace mutachain::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline Bytes random_bytes(Rng& rng, std::size_t max_len) {
    Bytes out(pick(rng, max_len + 1));
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng());
    return out;
}

template <typename Fixed>
Fixed random_fixed(Rng& rng) {
    Fixed f;
    for (auto& b : f.bytes)
        b = static_cast<std::uint8_t>(rng());
    return f;
}

inline OutPoint random_outpoint(Rng& rng) {
    return OutPoint{random_fixed<Hash32>(rng), static_cast<std::uint16_t>(pick(rng, 3))};
}

inline std::string random_label(Rng& rng) {
    std::string s;
    std::size_t n = 1 + pick(rng, 10);
    for (std::size_t i = 0; i < n; ++i)
        s.push_back(static_cast<char>('a' + pick(rng, 26)));
    return s;
}

/// A signed, well-formed transaction of a random kind with random parameters.
inline Transaction random_transaction(Rng& rng, const KeyPair& kp) {
    auto kind = static_cast<TxKind>(1 + pick(rng, 6));
    TxParams p;
    switch (kind) {
        case TxKind::Register:
            break;
        case TxKind::Removable:
            p.input = OutPoint{random_fixed<Hash32>(rng), 0};
            p.data = random_bytes(rng, 48);
            break;
        case TxKind::Prepare:
            p.input = OutPoint{random_fixed<Hash32>(rng), 0};
            p.interval = 1 + static_cast<IntervalIndex>(pick(rng, 1000));
            break;
        case TxKind::Delete:
            p.interval = 1 + static_cast<IntervalIndex>(pick(rng, 1000));
            if (coin(rng))
                p.input = OutPoint{random_fixed<Hash32>(rng), 0};
            break;
        case TxKind::Info: {
            p.input = OutPoint{random_fixed<Hash32>(rng), 0};
            p.controller = random_label(rng);
            std::vector<std::string> purposes;
            std::size_t n = 1 + pick(rng, 6);
            for (std::size_t i = 0; i < n; ++i)
                purposes.push_back(random_label(rng) + std::to_string(i));
            p.purposes = purposes;
            break;
        }
        case TxKind::Consent:
            p.input = random_outpoint(rng);
            p.info = OutPoint{random_fixed<Hash32>(rng), 0};
            p.value = rng();
            break;
    }
    return build_transaction(kind, kp, p);
}

inline Transaction random_removable(Rng& rng, const KeyPair& kp) {
    TxParams p;
    p.input = OutPoint{random_fixed<Hash32>(rng), 0};
    p.data = random_bytes(rng, 32);
    return build_transaction(TxKind::Removable, kp, p);
}

}  // namespace mutachain::testing
