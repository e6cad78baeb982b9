// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/client.hpp"
#include "mtfs/node.hpp"

#include <functional>
#include <queue>
#include <random>

namespace mtfs::sim {

// Deterministic single-threaded event simulator. One priority queue ordered
// by (time, insertion seq); per ordered link, delivery times are clamped
// monotone so simulated links are FIFO exactly like a TCP stream. Identical
// seed and identical call sequence give identical traces.

struct LatencyModel {
    uint64_t min_ms = 5;
    uint64_t max_ms = 5; // == min: fixed latency
};

struct FailureEvent {
    uint64_t at_ms = 0;
    size_t node_index = 0;
    bool fail = true; // false: recover
};

struct SimConfig {
    uint64_t seed = 1;
    LatencyModel latency;
    overlay::RedundancyMode redundancy = overlay::RedundancyMode::none;
    size_t link_radius = 2; // extra_links mode
    size_t k = 2;           // neighbor table radius
    replication::Policy policy;
    std::vector<FailureEvent> failures;
};

struct TraceRow {
    Digest msg_id;
    Digest node;
    uint64_t time_ms = 0;
    uint32_t hops = 0;
    Digest from; // message origin

    bool operator==(const TraceRow&) const = default;
};

struct Metrics {
    double coverage = 0;  // fraction of target population reached (origin included)
    uint32_t max_hops = 0;
    double mean_hops = 0;
    uint64_t messages = 0; // node-to-node transmissions of this msg_id
};

struct ClientRow {
    uint64_t time_ms = 0;
    Digest from;
    app::AppMsg msg;
};

class Network {
public:
    explicit Network(SimConfig cfg);

    // Nodes. add_node creates a detached node; bootstrap/join drive the real
    // protocol and drain the queue. The first sealer node runs the ledger.
    size_t add_node(bool sealer = false, bool cheater = false);
    void bootstrap(size_t index);
    void join(size_t index, size_t entry_index); // throws JoinFailed if it didn't attach
    size_t grow(size_t count, bool first_is_sealer = true); // bootstrap + sequential joins

    // Constructed topology: every tree position up to `depth` is a cluster of
    // `cluster_size` physical nodes, fully meshed with the adjacent positions.
    void build_clustered(size_t depth, size_t cluster_size, bool sealer_at_root = true);

    void fail_node(size_t index);
    void recover_node(size_t index);
    // queue a failure or recovery for simulated time `at_ms` (clamped to now)
    void schedule_failure(size_t index, uint64_t at_ms, bool going_down);

    // Originate a broadcast at a node; returns the broadcast's msg id.
    Digest originate_broadcast(size_t index, Bytes app_payload);

    // Client endpoints (not overlay members).
    wire::NodeInfo register_client(const std::string& name);
    void client_send(const wire::NodeInfo& client, size_t to_index, app::AppMsg msg);
    const std::vector<ClientRow>& inbox(const wire::NodeInfo& client) const;
    void clear_inbox(const wire::NodeInfo& client);

    // Event pump. run() drains; run_until stops early when pred() holds
    // (checked after each event). Throws Internal past the event budget.
    void run();
    bool run_until(const std::function<bool()>& pred);

    uint64_t now() const { return now_; }
    size_t size() const { return nodes_.size(); }
    node::StorageNode& node(size_t index) { return *nodes_.at(index).node; }
    const node::StorageNode& node(size_t index) const { return *nodes_.at(index).node; }
    bool alive(size_t index) const { return nodes_.at(index).alive; }
    size_t alive_count() const;
    std::optional<size_t> index_of(const Digest& node_id) const;

    const std::vector<TraceRow>& trace(const Digest& msg_id) const;
    Metrics metrics(const Digest& msg_id, size_t population) const;
    std::string trace_csv() const; // every delivery, deterministic order

    // tree height = max group id depth among alive nodes
    size_t height() const;

private:
    struct Entry {
        std::unique_ptr<node::StorageNode> node;
        bool alive = true;
    };
    struct Event {
        uint64_t time = 0;
        uint64_t seq = 0;
        // deliver: frame to a node or client; timer: token at a node
        enum class Kind : uint8_t { deliver, timer, fail, recover } kind = Kind::deliver;
        Digest to;   // node_id or client id
        Digest from; // sending node or client
        Bytes frame;
        uint32_t hops = 0;
        uint64_t token = 0;
        size_t node_index = 0;
    };
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
        }
    };

    node::NodeConfig base_config(size_t index, bool sealer, bool cheater);
    void absorb(uint64_t at, uint32_t hops, overlay::Emit e, size_t from_index);
    void push_frame(uint64_t at, uint32_t hops, const Digest& from_node,
                    const wire::NodeInfo& to, const wire::Message& msg);
    void dispatch(const Event& ev);
    uint64_t draw_latency();

    SimConfig cfg_;
    std::mt19937_64 rng_;
    uint64_t now_ = 0;
    uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::vector<Entry> nodes_;
    std::map<Digest, size_t> index_; // node_id -> index
    std::map<std::pair<Digest, Digest>, uint64_t> link_clock_;

    std::map<Digest, std::vector<ClientRow>> clients_;

    std::unordered_map<Digest, std::vector<TraceRow>, DigestHash> traces_;
    std::vector<Digest> trace_order_;
    std::unordered_map<Digest, uint64_t, DigestHash> transmissions_;
};

// Round-based push-gossip baseline for the broadcast comparison: every
// infected node pushes to `fanout` distinct random peers each round.
struct GossipResult {
    double coverage = 0;
    uint64_t messages = 0;
    size_t rounds_used = 0;
};
GossipResult gossip_baseline(uint64_t seed, size_t n, size_t fanout, size_t max_rounds);

// Client request plumbing over the simulator.
class SimExchange final : public client::Exchange {
public:
    SimExchange(Network& net, const std::string& name);

    wire::NodeInfo self() const override { return self_; }
    void send(const wire::NodeInfo& to, app::AppMsg msg) override;
    std::optional<app::AppMsg> request(const wire::NodeInfo& to, app::AppMsg req) override;
    std::vector<app::AppMsg> collect(const wire::NodeInfo& to, app::AppMsg req, size_t expect,
                                     uint64_t window_ms) override;

private:
    size_t resolve(const wire::NodeInfo& to) const;

    Network& net_;
    wire::NodeInfo self_;
    uint64_t next_req_ = 0;
};

} // namespace mtfs::sim
