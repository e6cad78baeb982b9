// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/overlay.hpp"

#include "mtfs/error.hpp"

#include <algorithm>

namespace mtfs::overlay {

void Emit::merge(Emit&& o) {
    sends.insert(sends.end(), std::make_move_iterator(o.sends.begin()),
                 std::make_move_iterator(o.sends.end()));
    timers.insert(timers.end(), o.timers.begin(), o.timers.end());
    app.insert(app.end(), std::make_move_iterator(o.app.begin()),
               std::make_move_iterator(o.app.end()));
}

Node::Node(Config cfg) : cfg_(std::move(cfg)), self_(cfg_.self) {
    if (cfg_.k < 2)
        fail(Errc::k_too_small, "neighbor radius must be at least 2");
    self_.group_id = GroupId();
}

std::string Node::branch_key(const wire::OpenBranch& b) {
    return b.parent.group_id.str() + (b.side == Side::left ? "L" : "R");
}

Digest Node::next_msg_id() {
    wire::Writer w;
    w.digest(self_.node_id);
    w.u64(seq_++);
    return sha256(w.take());
}

void Node::learn(const wire::NodeInfo& n) {
    members_[n.node_id] = n;
}

void Node::add_open(const wire::OpenBranch& b) {
    open_[branch_key(b)] = b;
    learn(b.parent);
}

void Node::drop_open(const wire::OpenBranch& b) {
    open_.erase(branch_key(b));
    learn(b.parent);
}

bool Node::dedup_seen(const Digest& msg_id) {
    auto it = dedup_.find(msg_id);
    if (it != dedup_.end())
        return true;
    dedup_order_.push_front(msg_id);
    dedup_[msg_id] = dedup_order_.begin();
    if (dedup_.size() > cfg_.dedup_capacity) {
        dedup_.erase(dedup_order_.back());
        dedup_order_.pop_back();
    }
    return false;
}

Emit Node::bootstrap() {
    if (state_ != JoinState::detached)
        fail(Errc::already_bootstrapped, "node already part of a network");
    state_ = JoinState::joined;
    self_.group_id = GroupId();
    learn(self_);
    add_open({self_, Side::left});
    add_open({self_, Side::right});
    return {};
}

Emit Node::start_join(uint64_t now, const wire::NodeInfo& entry) {
    if (state_ != JoinState::detached)
        fail(Errc::already_bootstrapped, "node already joining or joined");
    state_ = JoinState::snapshot_wait;
    entry_ = entry;
    attempts_ = 0;
    Emit e;
    app::SnapshotReq req{++join_req_id_, self_};
    e.sends.push_back({entry_, wrap_app(app::pack(req))});
    e.timers.push_back({now + cfg_.join_timeout_ms, kJoinTimerToken | join_req_id_});
    return e;
}

Emit Node::try_next_branch(uint64_t now) {
    if (attempts_ >= cfg_.max_join_attempts) {
        state_ = JoinState::failed;
        return {};
    }
    const wire::OpenBranch* best = nullptr;
    for (const auto& [key, b] : open_) {
        if (tried_.count(key))
            continue;
        if (!best || b.key() < best->key())
            best = &b;
    }
    if (!best) {
        // view exhausted; refresh the snapshot and retry from scratch
        attempts_++;
        tried_.clear();
        state_ = JoinState::snapshot_wait;
        Emit e;
        app::SnapshotReq req{++join_req_id_, self_};
        e.sends.push_back({entry_, wrap_app(app::pack(req))});
        e.timers.push_back({now + cfg_.join_timeout_ms, kJoinTimerToken | join_req_id_});
        return e;
    }
    attempts_++;
    tried_.insert(branch_key(*best));
    pending_ = *best;
    state_ = JoinState::join_wait;
    Emit e;
    app::JoinRequest req{++join_req_id_, self_, best->parent.group_id, best->side};
    e.sends.push_back({best->parent, wrap_app(app::pack(req))});
    e.timers.push_back({now + cfg_.join_timeout_ms, kJoinTimerToken | join_req_id_});
    return e;
}

Emit Node::complete_join(uint64_t now, GroupId assigned) {
    state_ = JoinState::joined;
    self_.group_id = assigned;
    parent_ = pending_->parent;
    drop_open(*pending_);
    pending_.reset();
    learn(self_);

    Emit e;
    // announce my two open branches; this is also how the network learns I exist
    wire::AvailableBranches avail{{{self_, Side::left}, {self_, Side::right}}};
    add_open(avail.branches[0]);
    add_open(avail.branches[1]);
    wire::Message m{next_msg_id(), self_.node_id, avail};
    dedup_seen(m.msg_id);
    for (const auto& peer : forward_links())
        e.sends.push_back({peer, m});

    // refresh the branch/membership view from the parent: broadcasts sent
    // while I was mid-join never reached me
    app::SnapshotReq req{++join_req_id_, self_};
    e.sends.push_back({*parent_, wrap_app(app::pack(req))});
    (void)now;
    return e;
}

wire::Message Node::wrap_app(Bytes payload) {
    return wire::Message{next_msg_id(), self_.node_id, wire::AppPayload{std::move(payload)}};
}

Emit Node::broadcast(Bytes app_payload) {
    auto tag = static_cast<app::Tag>(app_payload.at(0));
    if (!app::is_broadcast(tag))
        fail(Errc::internal, "tag is not broadcast-class");
    Emit e;
    wire::Message m = wrap_app(std::move(app_payload));
    dedup_seen(m.msg_id); // don't re-handle my own message when links loop back
    for (const auto& peer : forward_links())
        e.sends.push_back({peer, m});
    return e;
}

Emit Node::unicast(const wire::NodeInfo& to, Bytes app_payload) {
    Emit e;
    e.sends.push_back({to, wrap_app(std::move(app_payload))});
    return e;
}

std::vector<wire::NodeInfo> Node::forward_links() const {
    std::vector<wire::NodeInfo> out;
    auto add = [&](const wire::NodeInfo& n) {
        if (n.node_id == self_.node_id)
            return;
        for (const auto& have : out)
            if (have.node_id == n.node_id)
                return;
        out.push_back(n);
    };
    if (parent_)
        add(*parent_);
    for (const auto& [side, child] : children_)
        add(child);
    for (const auto& peer : cluster_peers_)
        add(peer);
    if (cfg_.redundancy == RedundancyMode::extra_links) {
        for (const auto& [id, n] : members_) {
            size_t d = self_.group_id.distance(n.group_id);
            if (d >= 1 && d <= cfg_.link_radius)
                add(n);
        }
    }
    return out;
}

std::vector<wire::NodeInfo> Node::neighbors_within(size_t k) const {
    if (k < 2)
        fail(Errc::k_too_small, "neighbor radius must be at least 2");
    std::vector<wire::NodeInfo> out;
    for (const auto& [id, n] : members_)
        if (self_.group_id.distance(n.group_id) <= k)
            out.push_back(n);
    std::sort(out.begin(), out.end(), [&](const wire::NodeInfo& a, const wire::NodeInfo& b) {
        size_t da = self_.group_id.distance(a.group_id);
        size_t db = self_.group_id.distance(b.group_id);
        if (da != db)
            return da < db;
        if (a.group_id != b.group_id)
            return a.group_id < b.group_id;
        return a.node_id < b.node_id;
    });
    return out;
}

app::FindPrefixResp Node::answer_find_prefix(const app::FindPrefix& q) const {
    app::FindPrefixResp resp;
    resp.req_id = q.req_id;
    const auto& bits = q.target.bits();
    if (!self_.group_id.is_prefix_of(bits)) {
        // off the target's path; route toward the root, which is on every path
        if (parent_) {
            resp.best = *parent_;
            resp.final = false;
        } else {
            resp.best = self_;
            resp.final = true;
        }
        return resp;
    }
    wire::NodeInfo best = self_;
    for (const auto& n : neighbors_within(cfg_.k)) {
        if (n.group_id.depth() > best.group_id.depth() && n.group_id.is_prefix_of(bits))
            best = n;
    }
    resp.best = best;
    // no deeper match among my links means no deeper match anywhere: the next
    // path node would be my own child
    resp.final = best.node_id == self_.node_id;
    return resp;
}

void Node::seed_state(GroupId gid, std::optional<wire::NodeInfo> parent,
                      std::vector<wire::NodeInfo> extra_peers,
                      std::vector<wire::NodeInfo> members,
                      std::vector<wire::OpenBranch> open) {
    state_ = JoinState::joined;
    self_.group_id = std::move(gid);
    parent_ = std::move(parent);
    cluster_peers_ = std::move(extra_peers);
    children_.clear();
    for (const auto& n : members) {
        learn(n);
        // direct children resolved from group ids
        if (n.group_id.depth() == self_.group_id.depth() + 1 &&
            self_.group_id.is_prefix_of(n.group_id) && n.node_id != self_.node_id) {
            Side s = n.group_id.last_side();
            if (!children_.count(s))
                children_[s] = n;
        }
    }
    learn(self_);
    open_.clear();
    for (const auto& b : open)
        add_open(b);
}

Emit Node::handle_timer(uint64_t now, uint64_t token) {
    if ((token & kJoinTimerToken) == 0)
        return {};
    uint64_t req = token & 0xffffffffull;
    if (req != join_req_id_)
        return {}; // stale timer from an earlier attempt
    if (state_ == JoinState::snapshot_wait) {
        if (attempts_ >= cfg_.max_join_attempts) {
            state_ = JoinState::failed;
            return {};
        }
        attempts_++;
        Emit e;
        app::SnapshotReq r{++join_req_id_, self_};
        e.sends.push_back({entry_, wrap_app(app::pack(r))});
        e.timers.push_back({now + cfg_.join_timeout_ms, kJoinTimerToken | join_req_id_});
        return e;
    }
    if (state_ == JoinState::join_wait) {
        pending_.reset();
        return try_next_branch(now);
    }
    return {};
}

Emit Node::forward(const Digest& from, const wire::Message& msg) {
    Emit e;
    for (const auto& peer : forward_links()) {
        if (peer.node_id == from || peer.node_id == msg.origin)
            continue;
        e.sends.push_back({peer, msg});
    }
    return e;
}

Emit Node::handle_message(uint64_t now, const Digest& from, const wire::Message& msg) {
    switch (msg.variant()) {
    case wire::Variant::available_branches: {
        if (dedup_seen(msg.msg_id))
            return {};
        for (const auto& b : std::get<wire::AvailableBranches>(msg.body).branches)
            add_open(b);
        return forward(from, msg);
    }
    case wire::Variant::discarded_branches: {
        if (dedup_seen(msg.msg_id))
            return {};
        for (const auto& b : std::get<wire::DiscardedBranches>(msg.body).branches)
            drop_open(b);
        return forward(from, msg);
    }
    case wire::Variant::group_id: {
        // link-local join confirmation; meaningless unless I asked
        if (state_ == JoinState::join_wait && pending_ &&
            from == pending_->parent.node_id)
            return complete_join(now, std::get<wire::GroupIdAssign>(msg.body).assigned);
        return {};
    }
    case wire::Variant::app:
        return on_app(now, from, msg);
    }
    return {};
}

Emit Node::on_app(uint64_t now, const Digest& from, const wire::Message& msg) {
    const auto& payload = std::get<wire::AppPayload>(msg.body).payload;
    if (payload.empty())
        return {};
    auto tag = static_cast<app::Tag>(payload[0]);

    if (app::is_broadcast(tag)) {
        if (dedup_seen(msg.msg_id))
            return {};
        Emit e = forward(from, msg);
        e.app.push_back({msg.origin, payload});
        return e;
    }

    switch (tag) {
    case app::Tag::snapshot_req: {
        auto q = std::get<app::SnapshotReq>(app::unpack(payload));
        app::SnapshotResp resp;
        resp.req_id = q.req_id;
        for (const auto& [key, b] : open_)
            resp.open.push_back(b);
        for (const auto& [id, n] : members_)
            resp.members.push_back(n);
        return unicast(q.reply_to, app::pack(resp));
    }
    case app::Tag::snapshot_resp: {
        auto resp = std::get<app::SnapshotResp>(app::unpack(payload));
        if (state_ == JoinState::snapshot_wait && resp.req_id == join_req_id_) {
            open_.clear();
            for (const auto& b : resp.open)
                add_open(b);
            for (const auto& n : resp.members)
                learn(n);
            tried_.clear();
            return try_next_branch(now);
        }
        if (state_ == JoinState::joined && resp.req_id == join_req_id_) {
            // post-join refresh: adopt the parent's view, keep my own slots
            auto mine_l = wire::OpenBranch{self_, Side::left};
            auto mine_r = wire::OpenBranch{self_, Side::right};
            bool had_l = open_.count(branch_key(mine_l)) != 0;
            bool had_r = open_.count(branch_key(mine_r)) != 0;
            open_.clear();
            for (const auto& b : resp.open)
                add_open(b);
            if (had_l)
                add_open(mine_l);
            if (had_r)
                add_open(mine_r);
            for (const auto& n : resp.members)
                learn(n);
        }
        return {};
    }
    case app::Tag::join_request: {
        auto q = std::get<app::JoinRequest>(app::unpack(payload));
        bool mine = joined() && q.parent_id == self_.group_id;
        bool free_slot = mine && !children_.count(q.side);
        if (!free_slot) {
            app::JoinDenied denied{q.req_id, q.parent_id, q.side};
            return unicast(q.joiner, app::pack(denied));
        }
        GroupId assigned = self_.group_id.child(q.side);
        wire::NodeInfo child = q.joiner;
        child.group_id = assigned;
        children_[q.side] = child;
        learn(child);
        drop_open({self_, q.side});

        Emit e;
        e.sends.push_back(
            {child, wire::Message{next_msg_id(), self_.node_id, wire::GroupIdAssign{assigned}}});
        wire::DiscardedBranches gone{{{self_, q.side}}};
        wire::Message m{next_msg_id(), self_.node_id, gone};
        dedup_seen(m.msg_id);
        for (const auto& peer : forward_links())
            e.sends.push_back({peer, m});
        return e;
    }
    case app::Tag::join_denied: {
        auto d = std::get<app::JoinDenied>(app::unpack(payload));
        if (state_ == JoinState::join_wait && d.req_id == join_req_id_) {
            pending_.reset();
            return try_next_branch(now);
        }
        return {};
    }
    case app::Tag::parent_req: {
        auto q = std::get<app::ParentReq>(app::unpack(payload));
        app::ParentResp resp{q.req_id, parent_};
        return unicast(q.reply_to, app::pack(resp));
    }
    case app::Tag::find_prefix: {
        auto q = std::get<app::FindPrefix>(app::unpack(payload));
        auto resp = answer_find_prefix(q);
        return unicast(q.reply_to, app::pack(resp));
    }
    default: {
        Emit e;
        e.app.push_back({from, payload});
        return e;
    }
    }
}

} // namespace mtfs::overlay
