// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/replication.hpp"

#include "mtfs/error.hpp"

namespace mtfs::replication {

Digest compute_proof(ByteView nonce, ByteView object_bytes) {
    Bytes buf;
    buf.reserve(nonce.size() + object_bytes.size());
    buf.insert(buf.end(), nonce.begin(), nonce.end());
    buf.insert(buf.end(), object_bytes.begin(), object_bytes.end());
    return sha256(buf);
}

std::vector<wire::NodeInfo> select_holders(const std::vector<wire::NodeInfo>& path, size_t r) {
    // group_path is ordered root-first, so the tail holds the deepest nodes
    size_t n = std::min(r, path.size());
    std::vector<wire::NodeInfo> out(path.end() - static_cast<ptrdiff_t>(n), path.end());
    std::reverse(out.begin(), out.end());
    return out;
}

std::optional<wire::NodeInfo> pick_repair_target(const std::vector<wire::NodeInfo>& path,
                                                 const std::set<Digest>& holders) {
    for (auto it = path.rbegin(); it != path.rend(); ++it)
        if (!holders.count(it->node_id))
            return *it;
    return std::nullopt;
}

const char* proof_check_name(ProofCheck c) {
    switch (c) {
    case ProofCheck::ok: return "Ok";
    case ProofCheck::no_challenge: return "NoChallenge";
    case ProofCheck::stale_nonce: return "StaleNonce";
    case ProofCheck::bad_proof: return "BadProof";
    }
    return "?";
}

Bytes ChallengeBook::issue(const Digest& object_ref, const Digest& holder, size_t nonce_size,
                           RandomSource& rng) {
    Key k{object_ref, holder};
    auto old = open_.find(k);
    if (old != open_.end()) {
        // the abandoned challenge becomes a replay from here on
        used_.insert({k, old->second});
        open_.erase(old);
    }
    Bytes nonce = rng.bytes(nonce_size);
    open_.emplace(k, nonce);
    return nonce;
}

ProofCheck ChallengeBook::settle(const Digest& holder, const StorageProof& proof,
                                 ByteView own_bytes) {
    Key k{proof.object_ref, holder};
    auto replay_or_unknown = [&] {
        return used_.count({k, proof.nonce}) ? ProofCheck::stale_nonce
                                             : ProofCheck::no_challenge;
    };
    auto it = open_.find(k);
    if (it == open_.end())
        return replay_or_unknown();
    if (it->second != proof.nonce)
        return replay_or_unknown();
    bool good = proof.proof == compute_proof(proof.nonce, own_bytes);
    used_.insert({k, it->second});
    open_.erase(it);
    return good ? ProofCheck::ok : ProofCheck::bad_proof;
}

bool ChallengeBook::outstanding(const Digest& object_ref, const Digest& holder) const {
    return open_.count({object_ref, holder}) != 0;
}

void ChallengeBook::drop(const Digest& object_ref, const Digest& holder) {
    Key k{object_ref, holder};
    auto it = open_.find(k);
    if (it == open_.end())
        return;
    used_.insert({k, it->second});
    open_.erase(it);
}

size_t ChallengeBook::open_count() const { return open_.size(); }

} // namespace mtfs::replication
