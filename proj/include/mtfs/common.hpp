// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtfs {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

// 32-byte SHA-256 digest; the universal identifier type (object ids, node ids,
// message ids, ledger hashes all share it).
struct Digest {
    std::array<uint8_t, 32> v{};

    bool operator==(const Digest&) const = default;
    auto operator<=>(const Digest&) const = default;

    bool is_zero() const;
    std::string hex() const;
    static Digest from_hex(std::string_view h);
};

struct DigestHash {
    size_t operator()(const Digest& d) const {
        size_t out;
        static_assert(sizeof(out) <= sizeof(d.v));
        __builtin_memcpy(&out, d.v.data(), sizeof(out));
        return out;
    }
};

Digest sha256(ByteView data);
Digest sha256_concat(const Digest& a, const Digest& b);

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view h); // throws Errc::invalid_hex
Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

// Randomness source. Seeded mode is a SHA-512 counter DRBG so every protocol
// test is reproducible; unseeded mode pulls from the OS via libsodium.
class RandomSource {
public:
    RandomSource();                 // system entropy
    explicit RandomSource(uint64_t seed);
    RandomSource(uint64_t seed, std::string_view domain);

    void fill(uint8_t* out, size_t n);
    Bytes bytes(size_t n);
    uint64_t next_u64();
    // uniform 64 bytes, the shape ristretto255 scalar reduction wants
    std::array<uint8_t, 64> block64();

    bool deterministic() const { return deterministic_; }

private:
    bool deterministic_ = false;
    std::array<uint8_t, 32> state_{};
    uint64_t counter_ = 0;
};

// Must run before any crypto use; safe to call repeatedly.
void crypto_init();

} // namespace mtfs
