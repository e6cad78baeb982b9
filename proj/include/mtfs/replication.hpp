// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/routing.hpp"

#include <optional>
#include <set>

namespace mtfs::replication {

// Replica placement and storage audits. Objects are pushed, never pulled:
// only path nodes that already hold the bytes may hand them onward. Audits
// are fresh-nonce challenges; holding the object's digest is not enough to
// answer one.

struct Policy {
    size_t r = 3;                    // replicas per object
    uint64_t audit_period_ms = 30000;
    uint64_t proof_timeout_ms = 2000; // unanswered challenge counts as a failure
    size_t challenge_size = 32;      // nonce bytes
};

struct StorageProof {
    Digest object_ref;
    Bytes nonce;
    Digest proof; // hash(nonce || object bytes)

    bool operator==(const StorageProof&) const = default;
};

Digest compute_proof(ByteView nonce, ByteView object_bytes);

// The r deepest Group Path nodes, deepest first. Returns all of them when the
// path is shorter than r (the degraded case the caller reports).
std::vector<wire::NodeInfo> select_holders(const std::vector<wire::NodeInfo>& path, size_t r);

// Deepest path node not already holding; nullopt when every path node holds.
std::optional<wire::NodeInfo> pick_repair_target(const std::vector<wire::NodeInfo>& path,
                                                 const std::set<Digest>& holders);

enum class ProofCheck : uint8_t {
    ok,
    no_challenge, // nothing outstanding for this pair
    stale_nonce,  // proof quotes a nonce that is not the outstanding one
    bad_proof,    // fresh nonce, wrong digest
};

const char* proof_check_name(ProofCheck c);

// Verifier-side nonce lifecycle. At most one outstanding challenge per
// (object, holder); issuing again replaces the old challenge, which from then
// on counts as a replay.
class ChallengeBook {
public:
    Bytes issue(const Digest& object_ref, const Digest& holder, size_t nonce_size,
                RandomSource& rng);

    // Checks an arriving proof against the outstanding challenge and the
    // verifier's own replica bytes. ok consumes the challenge.
    ProofCheck settle(const Digest& holder, const StorageProof& proof, ByteView own_bytes);

    bool outstanding(const Digest& object_ref, const Digest& holder) const;
    void drop(const Digest& object_ref, const Digest& holder); // give up (timeout)
    size_t open_count() const;

private:
    using Key = std::pair<Digest, Digest>; // (object, holder)
    std::map<Key, Bytes> open_;
    std::set<std::pair<Key, Bytes>> used_;
};

} // namespace mtfs::replication
