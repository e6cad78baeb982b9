// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/app.hpp"
#include "mtfs/wire.hpp"

#include <list>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

namespace mtfs::overlay {

enum class RedundancyMode { none, extra_links, cluster };

// Everything a node wants done as a result of one input: frames to put on
// links, timers to arm, application payloads to hand upward. The node never
// touches the network itself, which is what lets the same logic run under
// the simulator and the real transport.
struct Send {
    wire::NodeInfo to;
    wire::Message msg;
};
struct TimerReq {
    uint64_t at_ms = 0;
    uint64_t token = 0;
};
struct Delivery {
    Digest from;
    Bytes payload;
};
struct Emit {
    std::vector<Send> sends;
    std::vector<TimerReq> timers;
    std::vector<Delivery> app;

    void merge(Emit&& o);
};

struct Config {
    wire::NodeInfo self;
    size_t k = 2; // neighbor radius, >= 2
    size_t dedup_capacity = 4096;
    RedundancyMode redundancy = RedundancyMode::none;
    size_t link_radius = 2;        // extra_links mode
    size_t max_join_attempts = 8;
    uint64_t join_timeout_ms = 2000;
};

enum class JoinState { detached, snapshot_wait, join_wait, joined, failed };

class Node {
public:
    explicit Node(Config cfg);

    // First node of a network makes itself root.
    Emit bootstrap();
    // Everyone else attaches through any existing member.
    Emit start_join(uint64_t now, const wire::NodeInfo& entry);

    Emit handle_message(uint64_t now, const Digest& from, const wire::Message& msg);
    Emit handle_timer(uint64_t now, uint64_t token);

    // Originate a broadcast-class app payload (delivered everywhere, not here).
    Emit broadcast(Bytes app_payload);
    // Point-to-point app payload.
    Emit unicast(const wire::NodeInfo& to, Bytes app_payload);
    wire::Message wrap_app(Bytes app_payload);

    JoinState state() const { return state_; }
    bool joined() const { return state_ == JoinState::joined; }
    const wire::NodeInfo& self() const { return self_; }
    const GroupId& group_id() const { return self_.group_id; }
    std::optional<wire::NodeInfo> parent() const { return parent_; }
    const std::map<Side, wire::NodeInfo>& tree_children() const { return children_; }
    const std::map<Digest, wire::NodeInfo>& members() const { return members_; }
    const std::map<std::string, wire::OpenBranch>& open_branches() const { return open_; }

    // Closed k-hop neighborhood (self included) from the membership view;
    // distance is tree distance between group ids.
    std::vector<wire::NodeInfo> neighbors_within(size_t k) const;

    // Peers broadcast frames fan out to: tree edges, plus redundancy links.
    std::vector<wire::NodeInfo> forward_links() const;

    // Deepest prefix match for `target` in the closed neighborhood, used by
    // the recursive discovery responder.
    app::FindPrefixResp answer_find_prefix(const app::FindPrefix& q) const;

    // Pre-built topology entry point for constructed (cluster) networks and
    // unit tests: installs state as if the join dance already happened.
    void seed_state(GroupId gid, std::optional<wire::NodeInfo> parent,
                    std::vector<wire::NodeInfo> extra_peers,
                    std::vector<wire::NodeInfo> members,
                    std::vector<wire::OpenBranch> open);

    static std::string branch_key(const wire::OpenBranch& b);

private:
    Emit try_next_branch(uint64_t now);
    Emit complete_join(uint64_t now, GroupId assigned);
    Emit on_app(uint64_t now, const Digest& from, const wire::Message& msg);
    Emit forward(const Digest& from, const wire::Message& msg);
    bool dedup_seen(const Digest& msg_id); // true = already seen (and records it)
    Digest next_msg_id();
    void learn(const wire::NodeInfo& n);
    void add_open(const wire::OpenBranch& b);
    void drop_open(const wire::OpenBranch& b);

    Config cfg_;
    wire::NodeInfo self_;
    JoinState state_ = JoinState::detached;
    std::optional<wire::NodeInfo> parent_;
    std::map<Side, wire::NodeInfo> children_;
    std::vector<wire::NodeInfo> cluster_peers_; // constructed topologies only
    std::map<Digest, wire::NodeInfo> members_;
    std::map<std::string, wire::OpenBranch> open_;

    // join bookkeeping
    wire::NodeInfo entry_;
    std::optional<wire::OpenBranch> pending_;
    std::set<std::string> tried_;
    size_t attempts_ = 0;
    uint64_t seq_ = 0;
    uint64_t join_req_id_ = 0;

    // broadcast dedup, LRU over msg ids
    std::list<Digest> dedup_order_;
    std::unordered_map<Digest, std::list<Digest>::iterator, DigestHash> dedup_;
};

inline constexpr uint64_t kJoinTimerToken = uint64_t{1} << 32;

} // namespace mtfs::overlay
