// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/node.hpp"

#include "mtfs/error.hpp"
#include "mtfs/routing.hpp"

#include <algorithm>

namespace mtfs::node {

using overlay::Emit;

StorageNode::StorageNode(NodeConfig cfg, std::unique_ptr<ObjectStore> store)
    : cfg_(cfg), overlay_(cfg.overlay), store_(std::move(store)),
      rng_(cfg.rng_seed, "node.audit." + cfg.overlay.self.node_id.hex()) {
    if (cfg_.sealer)
        chain_ = std::make_unique<ledger::Chain>();
}

Emit StorageNode::bootstrap(uint64_t now) { return process(now, overlay_.bootstrap()); }

Emit StorageNode::start_join(uint64_t now, const wire::NodeInfo& entry) {
    return process(now, overlay_.start_join(now, entry));
}

Emit StorageNode::handle_message(uint64_t now, const Digest& from, const wire::Message& msg) {
    if (chain_)
        chain_->tick(now);
    return process(now, overlay_.handle_message(now, from, msg));
}

Emit StorageNode::handle_timer(uint64_t now, uint64_t token) {
    if (chain_)
        chain_->tick(now);
    if ((token & kAuditTimerToken) != 0) {
        if (!round_.active || (token & 0xffffffffu) != (round_.seq & 0xffffffffu))
            return {};
        // everything still unanswered is a failure
        Emit e;
        auto pending = std::move(pending_challenges_);
        pending_challenges_.clear();
        for (const auto& [req, pc] : pending) {
            book_.drop(pc.object, pc.holder);
            round_.checked += 1;
            e.merge(record_failure(now, pc.object, pc.holder));
        }
        round_.outstanding = 0;
        e.merge(finish_round_if_done());
        return e;
    }
    return process(now, overlay_.handle_timer(now, token));
}

Emit StorageNode::process(uint64_t now, Emit e) {
    Emit out;
    out.sends = std::move(e.sends);
    out.timers = std::move(e.timers);
    for (const auto& d : e.app)
        out.merge(on_delivery(now, d));
    return out;
}

Emit StorageNode::on_delivery(uint64_t now, const overlay::Delivery& d) {
    if (d.payload.empty())
        return {};
    auto tag = static_cast<app::Tag>(d.payload[0]);
    switch (tag) {
    case app::Tag::push_object:
        return on_push(now, std::get<app::PushObject>(app::unpack(d.payload)));
    case app::Tag::push_ack:
        return on_push_ack(std::get<app::PushAck>(app::unpack(d.payload)));
    case app::Tag::get_object:
        return on_get(std::get<app::GetObject>(app::unpack(d.payload)));
    case app::Tag::challenge:
        return on_challenge(std::get<app::Challenge>(app::unpack(d.payload)));
    case app::Tag::proof:
        return on_proof(now, std::get<app::Proof>(app::unpack(d.payload)));
    case app::Tag::audit_now:
        return on_audit_now(now, std::get<app::AuditNow>(app::unpack(d.payload)));
    case app::Tag::tx_submit:
        return on_tx_submit(now, std::get<app::TxSubmit>(app::unpack(d.payload)));
    case app::Tag::ledger_query:
        return on_ledger_query(now, std::get<app::LedgerQuery>(app::unpack(d.payload)));
    case app::Tag::stats_req:
        return on_stats(std::get<app::StatsReq>(app::unpack(d.payload)));
    default: {
        // not ours: hand upward (user broadcasts, client-bound responses)
        Emit e;
        e.app.push_back(d);
        return e;
    }
    }
}

Emit StorageNode::on_push(uint64_t now, const app::PushObject& push) {
    (void)now;
    app::PushAck ack;
    ack.req_id = push.req_id;
    ack.object_id = push.object_id;
    if (cfg_.cheat_digest_only) {
        // keeps the id, throws the bytes away, acknowledges anyway
        cheat_sizes_[push.object_id] = push.bytes.size();
        ack.stored = true;
    } else if (sha256(push.bytes) != push.object_id) {
        ack.reason = 3;
    } else {
        try {
            store_->put(push.bytes);
            for (const auto& l : push.links)
                store_->link(l.base, l.suffix, l.target);
            ack.stored = true;
        } catch (const Error& e) {
            ack.reason = e.code() == Errc::store_full ? 1
                        : e.code() == Errc::object_too_large ? 2
                                                             : 3;
        }
    }
    if (ack.stored && !push.holders.empty()) {
        holder_sets_[push.object_id] = push.holders;
        // kept so a later repair push can re-install the same links
        if (!push.links.empty())
            pushed_links_[push.object_id] = push.links;
    }
    return overlay_.unicast(push.reply_to, app::pack(ack));
}

Emit StorageNode::on_push_ack(const app::PushAck& ack) {
    auto it = pending_repairs_.find(ack.req_id);
    if (it == pending_repairs_.end())
        return {};
    auto [object, holder] = it->second;
    pending_repairs_.erase(it);
    if (!ack.stored) {
        // recruit failed; forget it so the next round tries someone else
        auto hs = holder_sets_.find(object);
        if (hs != holder_sets_.end())
            std::erase_if(hs->second,
                          [&](const wire::NodeInfo& n) { return n.node_id == holder; });
    }
    return {};
}

Emit StorageNode::on_get(const app::GetObject& q) {
    app::ObjectResp resp;
    resp.req_id = q.req_id;
    resp.object_id = q.object_id;
    Digest target = q.object_id;
    bool have_target = true;
    if (!q.link.empty()) {
        auto linked = store_->linked(q.object_id, q.link);
        have_target = linked.has_value();
        if (linked)
            target = *linked;
    }
    if (have_target) {
        resp.object_id = target;
        if (auto bytes = store_->try_get(target)) {
            resp.found = true;
            resp.bytes = std::move(*bytes);
        }
    }
    return overlay_.unicast(q.reply_to, app::pack(resp));
}

Emit StorageNode::on_challenge(const app::Challenge& c) {
    app::Proof p;
    p.req_id = c.req_id;
    p.object_id = c.object_id;
    p.nonce = c.nonce;
    if (auto bytes = store_->try_get(c.object_id)) {
        p.proof = replication::compute_proof(c.nonce, *bytes);
        p.have = true;
    } else if (cfg_.cheat_digest_only && cheat_sizes_.count(c.object_id)) {
        // the digest is all it has; the best possible bluff
        p.proof = replication::compute_proof(c.nonce, c.object_id.v);
        p.have = true;
    }
    return overlay_.unicast(c.reply_to, app::pack(p));
}

Emit StorageNode::on_proof(uint64_t now, const app::Proof& p) {
    auto it = pending_challenges_.find(p.req_id);
    if (it == pending_challenges_.end())
        return {};
    auto pc = it->second;
    pending_challenges_.erase(it);
    if (!round_.active)
        return {};
    round_.checked += 1;
    round_.outstanding -= 1;

    bool good = false;
    if (p.have) {
        if (auto own = store_->try_get(pc.object)) {
            replication::StorageProof sp{p.object_id, p.nonce, p.proof};
            good = book_.settle(pc.holder, sp, *own) == replication::ProofCheck::ok;
        }
    }
    if (!good)
        book_.drop(pc.object, pc.holder);

    Emit e;
    if (!good)
        e.merge(record_failure(now, pc.object, pc.holder));
    e.merge(finish_round_if_done());
    return e;
}

Emit StorageNode::record_failure(uint64_t now, const Digest& object, const Digest& holder) {
    (void)now;
    round_.failed += 1;
    return repair(object, holder);
}

Emit StorageNode::repair(const Digest& object, const Digest& failed_holder) {
    auto hs = holder_sets_.find(object);
    if (hs == holder_sets_.end())
        return {};
    std::erase_if(hs->second,
                  [&](const wire::NodeInfo& n) { return n.node_id == failed_holder; });

    auto path = routing::group_path(overlay_.members(), routing::digest_bits(object));
    std::set<Digest> exclude{failed_holder};
    for (const auto& h : hs->second)
        exclude.insert(h.node_id);
    auto target = replication::pick_repair_target(path, exclude);
    if (!target)
        return {}; // path exhausted: degraded until the network grows
    hs->second.push_back(*target);
    round_.repairs += 1;

    auto push = make_push(object, hs->second);
    pending_repairs_[push.req_id] = {object, target->node_id};
    return overlay_.unicast(*target, app::pack(push));
}

app::PushObject StorageNode::make_push(const Digest& object,
                                       const std::vector<wire::NodeInfo>& holders) {
    app::PushObject push;
    push.req_id = ++req_seq_;
    push.reply_to = self();
    push.object_id = object;
    push.bytes = store_->get(object);
    if (auto it = pushed_links_.find(object); it != pushed_links_.end()) {
        push.links = it->second;
    } else {
        for (const char* suffix : {"_mt", "_capsule"})
            if (auto target = store_->linked(object, suffix))
                push.links.push_back({object, suffix, *target});
    }
    push.holders = holders;
    return push;
}

Emit StorageNode::challenge_peers(uint64_t now, const Digest& object) {
    (void)now;
    Emit e;
    for (const auto& holder : holder_sets_[object]) {
        if (holder.node_id == self().node_id)
            continue;
        app::Challenge c;
        c.req_id = ++req_seq_;
        c.reply_to = self();
        c.object_id = object;
        c.nonce = book_.issue(object, holder.node_id, cfg_.policy.challenge_size, rng_);
        pending_challenges_[c.req_id] = {object, holder.node_id};
        round_.outstanding += 1;
        e.merge(overlay_.unicast(holder, app::pack(c)));
    }
    return e;
}

Emit StorageNode::start_audit(uint64_t now, std::optional<wire::NodeInfo> report_to,
                              uint64_t req_id) {
    if (round_.active) {
        // one round at a time; report nothing rather than block the asker
        if (report_to) {
            app::AuditReport r{req_id, self(), 0, 0, 0};
            return overlay_.unicast(*report_to, app::pack(r));
        }
        return {};
    }
    round_ = AuditRound{};
    round_.active = true;
    round_.seq = ++audit_seq_;
    round_.req_id = req_id;
    round_.report_to = std::move(report_to);

    Emit e;
    for (const auto& [object, holders] : holder_sets_) {
        if (holders.empty() || !store_->has(object))
            continue;
        // the shallowest holder audits; ties (cluster positions) go to the
        // smaller node id
        const wire::NodeInfo* auditor = &holders.front();
        for (const auto& h : holders) {
            auto hd = h.group_id.depth(), ad = auditor->group_id.depth();
            if (hd < ad || (hd == ad && h.node_id < auditor->node_id))
                auditor = &h;
        }
        if (auditor->node_id != self().node_id)
            continue;
        e.merge(challenge_peers(now, object));
    }
    if (round_.outstanding > 0)
        e.timers.push_back({now + cfg_.policy.proof_timeout_ms,
                            kAuditTimerToken | (round_.seq & 0xffffffffu)});
    e.merge(finish_round_if_done());
    return e;
}

Emit StorageNode::finish_round_if_done() {
    if (!round_.active || round_.outstanding > 0)
        return {};
    round_.active = false;
    pending_challenges_.clear();
    if (!round_.report_to)
        return {};
    app::AuditReport r{round_.req_id, self(), round_.checked, round_.failed, round_.repairs};
    return overlay_.unicast(*round_.report_to, app::pack(r));
}

Emit StorageNode::on_audit_now(uint64_t now, const app::AuditNow& a) {
    return start_audit(now, a.reply_to, a.req_id);
}

Emit StorageNode::on_tx_submit(uint64_t now, const app::TxSubmit& s) {
    app::TxReceipt r;
    r.req_id = s.req_id;
    if (!chain_) {
        r.error = "not the ledger node";
    } else {
        try {
            auto tx = ledger::Transaction::parse(s.tx);
            auto at = chain_->submit(std::move(tx), now);
            r.ok = true;
            r.receipt = {at.height, at.index};
        } catch (const Error& e) {
            r.error = e.what();
        }
    }
    return overlay_.unicast(s.reply_to, app::pack(r));
}

Emit StorageNode::on_ledger_query(uint64_t now, const app::LedgerQuery& q) {
    (void)now;
    app::LedgerResp r;
    r.req_id = q.req_id;
    if (!chain_) {
        r.error = "not the ledger node";
    } else {
        r.ok = true;
        switch (q.kind) {
        case app::LedgerQueryKind::latest_root:
            r.data = encode_root_pointer(chain_->latest_root(q.who));
            break;
        case app::LedgerQueryKind::pending_shares:
            r.data = encode_file_sends(chain_->pending_shares(q.who));
            break;
        case app::LedgerQueryKind::chain_dump:
            r.data = chain_->serialize();
            break;
        }
    }
    return overlay_.unicast(q.reply_to, app::pack(r));
}

Emit StorageNode::on_stats(const app::StatsReq& q) {
    app::StatsResp r;
    r.req_id = q.req_id;
    r.self = self();
    r.objects = static_cast<uint32_t>(store_->count());
    r.bytes_stored = bytes_stored();
    r.children = static_cast<uint8_t>(overlay_.tree_children().size());
    return overlay_.unicast(q.reply_to, app::pack(r));
}

uint64_t StorageNode::bytes_stored() const {
    uint64_t total = 0;
    for (const auto& id : store_->ids())
        total += store_->get(id).size();
    return total;
}

Bytes encode_root_pointer(const std::optional<folder::RootPointer>& rp) {
    wire::Writer w;
    w.u8(rp ? 1 : 0);
    if (rp) {
        w.digest(rp->owner);
        w.digest(rp->root_ref);
        w.group_id(rp->group_id);
    }
    return w.take();
}

std::optional<folder::RootPointer> decode_root_pointer(ByteView in) {
    wire::Reader r(in);
    if (r.u8() == 0) {
        r.expect_done();
        return std::nullopt;
    }
    folder::RootPointer rp;
    rp.owner = r.digest();
    rp.root_ref = r.digest();
    rp.group_id = r.group_id();
    r.expect_done();
    return rp;
}

Bytes encode_file_sends(const std::vector<ledger::FileSend>& sends) {
    wire::Writer w;
    w.u16(static_cast<uint16_t>(sends.size()));
    for (const auto& fs : sends) {
        w.digest(fs.sender);
        w.digest(fs.receiver);
        w.digest(fs.object_ref);
        w.digest(fs.reenc_capsule_ref);
    }
    return w.take();
}

std::vector<ledger::FileSend> decode_file_sends(ByteView in) {
    wire::Reader r(in);
    size_t n = r.u16();
    std::vector<ledger::FileSend> out(n);
    for (auto& fs : out) {
        fs.sender = r.digest();
        fs.receiver = r.digest();
        fs.object_ref = r.digest();
        fs.reenc_capsule_ref = r.digest();
    }
    r.expect_done();
    return out;
}

} // namespace mtfs::node
