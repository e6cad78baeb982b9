// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/ledger.hpp"
#include "mtfs/overlay.hpp"
#include "mtfs/replication.hpp"
#include "mtfs/store.hpp"

#include <memory>

namespace mtfs::node {

// Timer token spaces; the low half carries the per-request sequence.
inline constexpr uint64_t kAuditTimerToken = uint64_t{1} << 33;

struct NodeConfig {
    overlay::Config overlay;
    replication::Policy policy;
    bool sealer = false; // this node runs the ledger
    // Audit adversary: acknowledges pushes but keeps only the object id, so
    // it can answer digest questions yet never a fresh-nonce challenge.
    bool cheat_digest_only = false;
    uint64_t rng_seed = 0; // challenge nonces (deterministic in tests)
};

// A full storage peer: overlay position, object store, replication duties,
// and (on the sealer) the ledger. Pure state machine like the overlay node;
// hosts feed messages and timers in and carry the emitted frames out.
class StorageNode {
public:
    StorageNode(NodeConfig cfg, std::unique_ptr<ObjectStore> store);

    overlay::Emit bootstrap(uint64_t now);
    overlay::Emit start_join(uint64_t now, const wire::NodeInfo& entry);
    overlay::Emit handle_message(uint64_t now, const Digest& from, const wire::Message& msg);
    overlay::Emit handle_timer(uint64_t now, uint64_t token);

    // Start an audit round for every object this node is the designated
    // auditor of (shallowest holder in its recorded holder set). `report_to`
    // non-null: send an AuditReport when the round settles.
    overlay::Emit start_audit(uint64_t now, std::optional<wire::NodeInfo> report_to,
                              uint64_t req_id = 0);

    // Originate a broadcast-class payload from this node.
    overlay::Emit originate_broadcast(Bytes app_payload) {
        return overlay_.broadcast(std::move(app_payload));
    }

    overlay::Node& overlay() { return overlay_; }
    const overlay::Node& overlay() const { return overlay_; }
    ObjectStore& store() { return *store_; }
    const ObjectStore& store() const { return *store_; }
    ledger::Chain* chain() { return chain_ ? chain_.get() : nullptr; }
    const wire::NodeInfo& self() const { return overlay_.self(); }

    const std::map<Digest, std::vector<wire::NodeInfo>>& holder_sets() const {
        return holder_sets_;
    }
    uint64_t bytes_stored() const;

private:
    overlay::Emit process(uint64_t now, overlay::Emit e);
    overlay::Emit on_delivery(uint64_t now, const overlay::Delivery& d);

    overlay::Emit on_push(uint64_t now, const app::PushObject& push);
    overlay::Emit on_push_ack(const app::PushAck& ack);
    overlay::Emit on_get(const app::GetObject& q);
    overlay::Emit on_challenge(const app::Challenge& c);
    overlay::Emit on_proof(uint64_t now, const app::Proof& p);
    overlay::Emit on_audit_now(uint64_t now, const app::AuditNow& a);
    overlay::Emit on_tx_submit(uint64_t now, const app::TxSubmit& s);
    overlay::Emit on_ledger_query(uint64_t now, const app::LedgerQuery& q);
    overlay::Emit on_stats(const app::StatsReq& q);

    // challenge every peer holder of `object`; returns challenges issued
    overlay::Emit challenge_peers(uint64_t now, const Digest& object);
    overlay::Emit record_failure(uint64_t now, const Digest& object, const Digest& holder);
    overlay::Emit repair(const Digest& object, const Digest& failed_holder);
    overlay::Emit finish_round_if_done();
    app::PushObject make_push(const Digest& object, const std::vector<wire::NodeInfo>& holders);

    NodeConfig cfg_;
    overlay::Node overlay_;
    std::unique_ptr<ObjectStore> store_;
    std::unique_ptr<ledger::Chain> chain_;
    RandomSource rng_;

    std::map<Digest, std::vector<wire::NodeInfo>> holder_sets_; // object -> intended holders
    std::map<Digest, std::vector<app::LinkSpec>> pushed_links_; // replayed on repair pushes
    std::map<Digest, uint64_t> cheat_sizes_;                    // digest-only adversary
    replication::ChallengeBook book_;

    struct PendingChallenge {
        Digest object;
        Digest holder;
    };
    std::map<uint64_t, PendingChallenge> pending_challenges_; // req_id keyed
    std::map<uint64_t, std::pair<Digest, Digest>> pending_repairs_;

    struct AuditRound {
        bool active = false;
        uint64_t seq = 0;
        uint64_t req_id = 0;
        std::optional<wire::NodeInfo> report_to;
        size_t outstanding = 0;
        uint32_t checked = 0;
        uint32_t failed = 0;
        uint32_t repairs = 0;
    };
    AuditRound round_;
    uint64_t audit_seq_ = 0;
    uint64_t req_seq_ = 0;
};

// LedgerResp payload codecs, shared by the sealer and querying clients.
Bytes encode_root_pointer(const std::optional<folder::RootPointer>& rp);
std::optional<folder::RootPointer> decode_root_pointer(ByteView);
Bytes encode_file_sends(const std::vector<ledger::FileSend>& sends);
std::vector<ledger::FileSend> decode_file_sends(ByteView);

} // namespace mtfs::node
