// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"

#include <array>

namespace mtfs::pre {

// Capsule-based proxy re-encryption over ristretto255.
//
// Bulk data is sealed once with an AEAD under a key that only the capsule can
// recover. Sharing re-targets the capsule alone: the holder of a
// re-encryption key transforms an original capsule into one the receiver's
// private key opens, and the ciphertext is never read or rewritten. The
// transform is unidirectional and single hop; a re-encrypted capsule cannot
// be transformed again.

using Element = std::array<uint8_t, 32>; // ristretto255 group element
using Scalar = std::array<uint8_t, 32>;  // scalar mod group order

inline constexpr size_t kCipherOverhead = 40;         // 24-byte nonce + 16-byte tag
inline constexpr size_t kCapsuleOriginalSize = 98;    // ver, flag, E, V, s
inline constexpr size_t kCapsuleReencryptedSize = 130; // ver, flag, E', V', s, X
inline constexpr size_t kSignatureSize = 64;

struct PublicKey {
    Element point{};

    bool operator==(const PublicKey&) const = default;
    Bytes serialize() const;                 // ver(1) tag(1) point(32)
    static PublicKey deserialize(ByteView);
    Digest digest() const;                   // identity digest used across the system
};

struct PrivateKey {
    Scalar scalar{};

    bool operator==(const PrivateKey&) const = default;
    PublicKey public_key() const;
};

struct KeyPair {
    PrivateKey sk;
    PublicKey pk;
};

enum class CapsuleFlag : uint8_t { original = 1, reencrypted = 2 };

struct Capsule {
    CapsuleFlag flag = CapsuleFlag::original;
    Element e{}; // ephemeral commitment
    Element v{}; // second ephemeral commitment
    Scalar s{};  // binding value: s = v + e * H(E || V)
    Element x{}; // re-encryption precursor, re-encrypted capsules only

    bool operator==(const Capsule&) const = default;
    Bytes serialize() const;
    static Capsule deserialize(ByteView);
};

// Transform value from one sender to one receiver. Applying it to a capsule
// made under any other key yields garbage that fails downstream decryption.
struct ReencryptionKey {
    Scalar rk{};
    Element x{};

    bool operator==(const ReencryptionKey&) const = default;
    Bytes serialize() const;
    static ReencryptionKey deserialize(ByteView);
};

struct Encrypted {
    Bytes ciphertext; // nonce || aead(body)
    Capsule capsule;
};

KeyPair keygen(RandomSource& rng);

Encrypted encrypt(const PublicKey& pk, ByteView plaintext, RandomSource& rng);

// Owner decryption; the capsule must be original. Throws CapsuleMismatch for
// re-encrypted capsules, WrongKey when the key does not open the data.
Bytes decrypt_own(const PrivateKey& sk, const Capsule& capsule, ByteView ciphertext);

ReencryptionKey rekey(const PrivateKey& sender, const PublicKey& receiver, RandomSource& rng);

// Capsule-only transform; never sees the ciphertext. Throws
// AlreadyReencrypted on a second hop.
Capsule reencrypt(const ReencryptionKey& rk, const Capsule& capsule);

// Receiver-side decryption of a shared file; the capsule must be
// re-encrypted toward this receiver.
Bytes decrypt_shared(const PrivateKey& sk, const Capsule& capsule, ByteView ciphertext);

// Schnorr signatures over the same key pairs, used by the ledger.
// Deterministic: same key + message always give the same signature.
std::array<uint8_t, kSignatureSize> sign(const PrivateKey& sk, ByteView message);
bool verify(const PublicKey& pk, ByteView message, ByteView signature);

} // namespace mtfs::pre
