// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/pre.hpp"

#include "mtfs/error.hpp"

#include <sodium.h>

#include <cstring>

namespace mtfs::pre {

namespace {

constexpr uint8_t kVersion = 1;
constexpr uint8_t kTagPublicKey = 0x00;
constexpr uint8_t kTagRekey = 0x03;

// Domain-separated hash to scalar: SHA-512 over the labelled parts, reduced
// mod the group order.
Scalar hash_to_scalar(std::string_view label, std::initializer_list<ByteView> parts) {
    crypto_hash_sha512_state st;
    crypto_hash_sha512_init(&st);
    crypto_hash_sha512_update(&st, reinterpret_cast<const uint8_t*>(label.data()), label.size());
    for (const auto& p : parts)
        crypto_hash_sha512_update(&st, p.data(), p.size());
    std::array<uint8_t, 64> wide{};
    crypto_hash_sha512_final(&st, wide.data());
    Scalar out{};
    crypto_core_ristretto255_scalar_reduce(out.data(), wide.data());
    return out;
}

Scalar random_scalar(RandomSource& rng) {
    for (;;) {
        auto wide = rng.block64();
        Scalar s{};
        crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
        if (!sodium_is_zero(s.data(), s.size()))
            return s;
    }
}

Element base_mult(const Scalar& n) {
    Element p{};
    if (crypto_scalarmult_ristretto255_base(p.data(), n.data()) != 0)
        fail(Errc::internal, "scalar is zero");
    return p;
}

Element mult(const Scalar& n, const Element& p, Errc on_fail) {
    Element q{};
    if (crypto_scalarmult_ristretto255(q.data(), n.data(), p.data()) != 0)
        fail(on_fail, "degenerate group operation");
    return q;
}

Element add(const Element& p, const Element& q) {
    Element r{};
    if (crypto_core_ristretto255_add(r.data(), p.data(), q.data()) != 0)
        fail(Errc::internal, "invalid group element");
    return r;
}

Scalar scalar_add(const Scalar& a, const Scalar& b) {
    Scalar r{};
    crypto_core_ristretto255_scalar_add(r.data(), a.data(), b.data());
    return r;
}

Scalar scalar_mul(const Scalar& a, const Scalar& b) {
    Scalar r{};
    crypto_core_ristretto255_scalar_mul(r.data(), a.data(), b.data());
    return r;
}

Scalar scalar_invert(const Scalar& a, Errc on_fail) {
    Scalar r{};
    if (crypto_core_ristretto255_scalar_invert(r.data(), a.data()) != 0)
        fail(on_fail, "non-invertible scalar");
    return r;
}

void check_point(const Element& p) {
    if (crypto_core_ristretto255_is_valid_point(p.data()) != 1)
        fail(Errc::malformed_record, "invalid group element");
}

// s = v + e * H(E || V) lets anyone confirm a capsule was produced by a real
// encapsulation before transforming or opening it.
bool capsule_binds(const Element& e, const Element& v, const Scalar& s) {
    Scalar h = hash_to_scalar("mtfs.pre.capsule", {ByteView(e), ByteView(v)});
    Element lhs{};
    if (crypto_scalarmult_ristretto255_base(lhs.data(), s.data()) != 0)
        return false;
    Element eh{};
    if (crypto_scalarmult_ristretto255(eh.data(), h.data(), e.data()) != 0)
        return false;
    Element rhs{};
    if (crypto_core_ristretto255_add(rhs.data(), v.data(), eh.data()) != 0)
        return false;
    return sodium_memcmp(lhs.data(), rhs.data(), lhs.size()) == 0;
}

std::array<uint8_t, 32> kdf(const Element& shared) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    static constexpr char label[] = "mtfs.pre.kdf";
    crypto_hash_sha256_update(&st, reinterpret_cast<const uint8_t*>(label), sizeof(label) - 1);
    crypto_hash_sha256_update(&st, shared.data(), shared.size());
    std::array<uint8_t, 32> key{};
    crypto_hash_sha256_final(&st, key.data());
    return key;
}

Bytes aead_seal(const std::array<uint8_t, 32>& key, ByteView plaintext, RandomSource& rng) {
    Bytes out(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + plaintext.size() +
              crypto_aead_xchacha20poly1305_ietf_ABYTES);
    rng.fill(out.data(), crypto_aead_xchacha20poly1305_ietf_NPUBBYTES);
    unsigned long long clen = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(
        out.data() + crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, &clen, plaintext.data(),
        plaintext.size(), nullptr, 0, nullptr, out.data(), key.data());
    out.resize(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + clen);
    return out;
}

Bytes aead_open(const std::array<uint8_t, 32>& key, ByteView ciphertext) {
    if (ciphertext.size() < kCipherOverhead)
        fail(Errc::wrong_key, "ciphertext shorter than framing");
    const size_t body = ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
    Bytes out(body - crypto_aead_xchacha20poly1305_ietf_ABYTES);
    unsigned long long mlen = 0;
    if (crypto_aead_xchacha20poly1305_ietf_decrypt(
            out.data(), &mlen, nullptr,
            ciphertext.data() + crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, body, nullptr, 0,
            ciphertext.data(), key.data()) != 0)
        fail(Errc::wrong_key, "ciphertext does not open under this capsule");
    out.resize(mlen);
    return out;
}

void read_exact(ByteView in, size_t expect, const char* what) {
    if (in.size() != expect)
        fail(Errc::malformed_record, std::string(what) + ": bad length");
}

template <size_t N>
std::array<uint8_t, N> take(ByteView in, size_t offset) {
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), in.data() + offset, N);
    return out;
}

} // namespace

Bytes PublicKey::serialize() const {
    Bytes out;
    out.reserve(2 + point.size());
    out.push_back(kVersion);
    out.push_back(kTagPublicKey);
    out.insert(out.end(), point.begin(), point.end());
    return out;
}

PublicKey PublicKey::deserialize(ByteView in) {
    read_exact(in, 34, "public key");
    if (in[0] != kVersion)
        fail(Errc::version_error, "unsupported public key version");
    if (in[1] != kTagPublicKey)
        fail(Errc::malformed_record, "not a public key record");
    PublicKey pk{take<32>(in, 2)};
    check_point(pk.point);
    return pk;
}

Digest PublicKey::digest() const {
    return sha256(ByteView(point));
}

PublicKey PrivateKey::public_key() const {
    return PublicKey{base_mult(scalar)};
}

Bytes Capsule::serialize() const {
    Bytes out;
    out.reserve(flag == CapsuleFlag::original ? kCapsuleOriginalSize : kCapsuleReencryptedSize);
    out.push_back(kVersion);
    out.push_back(static_cast<uint8_t>(flag));
    out.insert(out.end(), e.begin(), e.end());
    out.insert(out.end(), v.begin(), v.end());
    out.insert(out.end(), s.begin(), s.end());
    if (flag == CapsuleFlag::reencrypted)
        out.insert(out.end(), x.begin(), x.end());
    return out;
}

Capsule Capsule::deserialize(ByteView in) {
    if (in.size() < 2)
        fail(Errc::malformed_record, "capsule: bad length");
    if (in[0] != kVersion)
        fail(Errc::version_error, "unsupported capsule version");
    Capsule c;
    switch (in[1]) {
    case static_cast<uint8_t>(CapsuleFlag::original):
        read_exact(in, kCapsuleOriginalSize, "capsule");
        c.flag = CapsuleFlag::original;
        break;
    case static_cast<uint8_t>(CapsuleFlag::reencrypted):
        read_exact(in, kCapsuleReencryptedSize, "capsule");
        c.flag = CapsuleFlag::reencrypted;
        break;
    default:
        fail(Errc::malformed_record, "unknown capsule flag");
    }
    c.e = take<32>(in, 2);
    c.v = take<32>(in, 34);
    c.s = take<32>(in, 66);
    check_point(c.e);
    check_point(c.v);
    if (c.flag == CapsuleFlag::reencrypted) {
        c.x = take<32>(in, 98);
        check_point(c.x);
    }
    return c;
}

Bytes ReencryptionKey::serialize() const {
    Bytes out;
    out.reserve(66);
    out.push_back(kVersion);
    out.push_back(kTagRekey);
    out.insert(out.end(), rk.begin(), rk.end());
    out.insert(out.end(), x.begin(), x.end());
    return out;
}

ReencryptionKey ReencryptionKey::deserialize(ByteView in) {
    read_exact(in, 66, "re-encryption key");
    if (in[0] != kVersion)
        fail(Errc::version_error, "unsupported re-encryption key version");
    if (in[1] != kTagRekey)
        fail(Errc::malformed_record, "not a re-encryption key record");
    ReencryptionKey rk{take<32>(in, 2), take<32>(in, 34)};
    check_point(rk.x);
    return rk;
}

KeyPair keygen(RandomSource& rng) {
    crypto_init();
    PrivateKey sk{random_scalar(rng)};
    return {sk, sk.public_key()};
}

Encrypted encrypt(const PublicKey& pk, ByteView plaintext, RandomSource& rng) {
    crypto_init();
    Scalar e = random_scalar(rng);
    Scalar v = random_scalar(rng);
    Capsule cap;
    cap.flag = CapsuleFlag::original;
    cap.e = base_mult(e);
    cap.v = base_mult(v);
    Scalar h = hash_to_scalar("mtfs.pre.capsule", {ByteView(cap.e), ByteView(cap.v)});
    cap.s = scalar_add(v, scalar_mul(e, h));
    // shared secret A^(e+v); only knowledge of the private exponent (or a
    // transformed capsule) recovers it
    Element shared = mult(scalar_add(e, v), pk.point, Errc::internal);
    return {aead_seal(kdf(shared), plaintext, rng), cap};
}

Bytes decrypt_own(const PrivateKey& sk, const Capsule& capsule, ByteView ciphertext) {
    crypto_init();
    if (capsule.flag != CapsuleFlag::original)
        fail(Errc::capsule_mismatch, "capsule was re-targeted to someone else");
    if (!capsule_binds(capsule.e, capsule.v, capsule.s))
        fail(Errc::capsule_mismatch, "capsule failed its binding check");
    Element shared = mult(sk.scalar, add(capsule.e, capsule.v), Errc::wrong_key);
    return aead_open(kdf(shared), ciphertext);
}

ReencryptionKey rekey(const PrivateKey& sender, const PublicKey& receiver, RandomSource& rng) {
    crypto_init();
    Scalar xs = random_scalar(rng);
    Element xp = base_mult(xs);
    Element bx = mult(xs, receiver.point, Errc::internal);
    Scalar d = hash_to_scalar("mtfs.pre.rekey",
                              {ByteView(xp), ByteView(receiver.point), ByteView(bx)});
    // rk = a / d: applying it to (E, V) moves the secret from exponent a to
    // the receiver-derivable exponent d
    return {scalar_mul(sender.scalar, scalar_invert(d, Errc::internal)), xp};
}

Capsule reencrypt(const ReencryptionKey& rk, const Capsule& capsule) {
    crypto_init();
    if (capsule.flag == CapsuleFlag::reencrypted)
        fail(Errc::already_reencrypted, "capsule was already re-targeted once");
    if (!capsule_binds(capsule.e, capsule.v, capsule.s))
        fail(Errc::capsule_mismatch, "capsule failed its binding check");
    Capsule out;
    out.flag = CapsuleFlag::reencrypted;
    out.e = mult(rk.rk, capsule.e, Errc::capsule_mismatch);
    out.v = mult(rk.rk, capsule.v, Errc::capsule_mismatch);
    out.s = capsule.s;
    out.x = rk.x;
    return out;
}

Bytes decrypt_shared(const PrivateKey& sk, const Capsule& capsule, ByteView ciphertext) {
    crypto_init();
    if (capsule.flag != CapsuleFlag::reencrypted)
        fail(Errc::capsule_mismatch, "capsule was never re-targeted");
    Element xb = mult(sk.scalar, capsule.x, Errc::wrong_key);
    Element bp = base_mult(sk.scalar);
    Scalar d = hash_to_scalar("mtfs.pre.rekey", {ByteView(capsule.x), ByteView(bp), ByteView(xb)});
    Element shared = mult(d, add(capsule.e, capsule.v), Errc::wrong_key);
    return aead_open(kdf(shared), ciphertext);
}

std::array<uint8_t, kSignatureSize> sign(const PrivateKey& sk, ByteView message) {
    crypto_init();
    Digest mh = sha256(message);
    // deterministic nonce: two runs over identical state must emit
    // byte-identical records
    Scalar k = hash_to_scalar("mtfs.sig.nonce", {ByteView(sk.scalar), ByteView(mh.v)});
    Element r = base_mult(k);
    Element a = base_mult(sk.scalar);
    Scalar c = hash_to_scalar("mtfs.sig.challenge", {ByteView(r), ByteView(a), ByteView(mh.v)});
    Scalar s = scalar_add(k, scalar_mul(c, sk.scalar));
    std::array<uint8_t, kSignatureSize> sig{};
    std::memcpy(sig.data(), r.data(), 32);
    std::memcpy(sig.data() + 32, s.data(), 32);
    return sig;
}

bool verify(const PublicKey& pk, ByteView message, ByteView signature) {
    crypto_init();
    if (signature.size() != kSignatureSize)
        return false;
    Element r = take<32>(signature, 0);
    Scalar s = take<32>(signature, 32);
    if (crypto_core_ristretto255_is_valid_point(r.data()) != 1)
        return false;
    Digest mh = sha256(message);
    Scalar c = hash_to_scalar("mtfs.sig.challenge", {ByteView(r), ByteView(pk.point), ByteView(mh.v)});
    Element lhs{};
    if (crypto_scalarmult_ristretto255_base(lhs.data(), s.data()) != 0)
        return false;
    Element ac{};
    if (crypto_scalarmult_ristretto255(ac.data(), c.data(), pk.point.data()) != 0)
        return false;
    Element rhs{};
    if (crypto_core_ristretto255_add(rhs.data(), r.data(), ac.data()) != 0)
        return false;
    return sodium_memcmp(lhs.data(), rhs.data(), lhs.size()) == 0;
}

} // namespace mtfs::pre
