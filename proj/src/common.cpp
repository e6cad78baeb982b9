// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/common.hpp"
#include "mtfs/error.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

namespace mtfs {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::empty_leaf_set: return "EmptyLeafSet";
    case Errc::missing_object: return "MissingObject";
    case Errc::integrity_failure: return "IntegrityFailure";
    case Errc::root_mismatch: return "RootMismatch";
    case Errc::object_too_large: return "ObjectTooLarge";
    case Errc::store_full: return "StoreFull";
    case Errc::wrong_key: return "WrongKey";
    case Errc::capsule_mismatch: return "CapsuleMismatch";
    case Errc::already_reencrypted: return "AlreadyReencrypted";
    case Errc::bad_signature: return "BadSignature";
    case Errc::already_bootstrapped: return "AlreadyBootstrapped";
    case Errc::no_open_branch: return "NoOpenBranch";
    case Errc::branch_taken: return "BranchTaken";
    case Errc::join_failed: return "JoinFailed";
    case Errc::k_too_small: return "KTooSmall";
    case Errc::invalid_hex: return "InvalidHex";
    case Errc::unreachable_node: return "UnreachableNode";
    case Errc::malformed_folder: return "MalformedFolder";
    case Errc::malformed_record: return "MalformedRecord";
    case Errc::duplicate_name: return "DuplicateName";
    case Errc::name_not_found: return "NameNotFound";
    case Errc::not_found: return "NotFound";
    case Errc::not_addressee: return "NotAddressee";
    case Errc::ledger_down: return "LedgerDown";
    case Errc::insufficient_path: return "InsufficientPath";
    case Errc::object_lost: return "ObjectLost";
    case Errc::proof_timeout: return "ProofTimeout";
    case Errc::bad_proof: return "BadProof";
    case Errc::truncated: return "Truncated";
    case Errc::version_error: return "VersionError";
    case Errc::unknown_variant: return "UnknownVariant";
    case Errc::connection_refused: return "ConnectionRefused";
    case Errc::peer_closed: return "PeerClosed";
    case Errc::scenario_error: return "ScenarioError";
    case Errc::usage_error: return "UsageError";
    case Errc::internal: return "Internal";
    }
    return "Unknown";
}

void crypto_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0)
            fail(Errc::internal, "libsodium initialization failed");
    });
}

bool Digest::is_zero() const {
    for (auto b : v)
        if (b != 0) return false;
    return true;
}

std::string Digest::hex() const { return to_hex(ByteView(v.data(), v.size())); }

Digest Digest::from_hex(std::string_view h) {
    Bytes b = mtfs::from_hex(h);
    if (b.size() != 32)
        fail(Errc::invalid_hex, "digest hex must be 64 chars");
    Digest d;
    std::memcpy(d.v.data(), b.data(), 32);
    return d;
}

Digest sha256(ByteView data) {
    crypto_init();
    Digest d;
    crypto_hash_sha256(d.v.data(), data.data(), data.size());
    return d;
}

Digest sha256_concat(const Digest& a, const Digest& b) {
    crypto_init();
    std::array<uint8_t, 64> buf;
    std::memcpy(buf.data(), a.v.data(), 32);
    std::memcpy(buf.data() + 32, b.v.data(), 32);
    Digest d;
    crypto_hash_sha256(d.v.data(), buf.data(), buf.size());
    return d;
}

std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

Bytes from_hex(std::string_view h) {
    if (h.size() % 2 != 0)
        fail(Errc::invalid_hex, "odd-length hex string");
    Bytes out;
    out.reserve(h.size() / 2);
    for (size_t i = 0; i < h.size(); i += 2) {
        int hi = hex_nibble(h[i]);
        int lo = hex_nibble(h[i + 1]);
        if (hi < 0 || lo < 0)
            fail(Errc::invalid_hex, "non-hex character");
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

RandomSource::RandomSource() {
    crypto_init();
    deterministic_ = false;
}

RandomSource::RandomSource(uint64_t seed) : RandomSource(seed, "") {}

RandomSource::RandomSource(uint64_t seed, std::string_view domain) {
    crypto_init();
    deterministic_ = true;
    Bytes material;
    material.reserve(8 + domain.size());
    for (int i = 7; i >= 0; --i)
        material.push_back(static_cast<uint8_t>(seed >> (8 * i)));
    material.insert(material.end(), domain.begin(), domain.end());
    state_ = sha256(material).v;
}

std::array<uint8_t, 64> RandomSource::block64() {
    std::array<uint8_t, 64> out;
    fill(out.data(), out.size());
    return out;
}

void RandomSource::fill(uint8_t* out, size_t n) {
    if (!deterministic_) {
        randombytes_buf(out, n);
        return;
    }
    std::array<uint8_t, 40> block;
    std::memcpy(block.data(), state_.data(), 32);
    size_t off = 0;
    while (off < n) {
        for (int i = 0; i < 8; ++i)
            block[32 + i] = static_cast<uint8_t>(counter_ >> (8 * (7 - i)));
        ++counter_;
        std::array<uint8_t, 64> h;
        crypto_hash_sha512(h.data(), block.data(), block.size());
        size_t take = std::min<size_t>(64, n - off);
        std::memcpy(out + off, h.data(), take);
        off += take;
    }
}

Bytes RandomSource::bytes(size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
}

uint64_t RandomSource::next_u64() {
    uint8_t b[8];
    fill(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = v << 8 | b[i];
    return v;
}

} // namespace mtfs
