// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/simnet.hpp"

#include "mtfs/error.hpp"

#include <algorithm>
#include <sstream>

namespace mtfs::sim {

namespace {
constexpr uint64_t kEventBudget = 20'000'000;
}

Network::Network(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    for (const auto& f : cfg_.failures) {
        Event ev;
        ev.time = f.at_ms;
        ev.seq = ++seq_;
        ev.kind = f.fail ? Event::Kind::fail : Event::Kind::recover;
        ev.node_index = f.node_index;
        queue_.push(std::move(ev));
    }
}

node::NodeConfig Network::base_config(size_t index, bool sealer, bool cheater) {
    node::NodeConfig nc;
    auto tag = "mtfs.sim.node." + std::to_string(cfg_.seed) + "." + std::to_string(index);
    nc.overlay.self.node_id = sha256(to_bytes(tag));
    nc.overlay.k = cfg_.k;
    nc.overlay.redundancy = cfg_.redundancy;
    nc.overlay.link_radius = cfg_.link_radius;
    nc.policy = cfg_.policy;
    nc.sealer = sealer;
    nc.cheat_digest_only = cheater;
    nc.rng_seed = cfg_.seed;
    return nc;
}

size_t Network::add_node(bool sealer, bool cheater) {
    size_t index = nodes_.size();
    auto nc = base_config(index, sealer, cheater);
    Entry e;
    e.node = std::make_unique<node::StorageNode>(nc, std::make_unique<MemoryStore>());
    index_[e.node->self().node_id] = index;
    nodes_.push_back(std::move(e));
    return index;
}

void Network::bootstrap(size_t index) {
    absorb(now_, 0, nodes_.at(index).node->bootstrap(now_), index);
    run();
}

void Network::join(size_t index, size_t entry_index) {
    auto& joiner = *nodes_.at(index).node;
    absorb(now_, 0, joiner.start_join(now_, nodes_.at(entry_index).node->self()), index);
    run();
    if (!joiner.overlay().joined())
        fail(Errc::join_failed, "node " + std::to_string(index) + " could not attach");
}

size_t Network::grow(size_t count, bool first_is_sealer) {
    if (count == 0)
        return 0;
    size_t first = add_node(first_is_sealer);
    bootstrap(first);
    for (size_t i = 1; i < count; ++i)
        join(add_node(), first);
    return first;
}

void Network::build_clustered(size_t depth, size_t cluster_size, bool sealer_at_root) {
    // every position of the complete tree as gid strings, level order
    std::vector<std::string> positions{""};
    for (size_t i = 0; i < positions.size(); ++i)
        if (positions[i].size() < depth) {
            positions.push_back(positions[i] + "0");
            positions.push_back(positions[i] + "1");
        }

    std::map<std::string, std::vector<size_t>> by_pos;
    for (const auto& pos : positions)
        for (size_t c = 0; c < cluster_size; ++c) {
            bool sealer = sealer_at_root && pos.empty() && c == 0;
            by_pos[pos].push_back(add_node(sealer));
        }

    // fix every node's group id first so member views carry them
    std::vector<wire::NodeInfo> everyone;
    std::map<size_t, GroupId> gid_of;
    for (const auto& [pos, idxs] : by_pos)
        for (size_t idx : idxs) {
            gid_of[idx] = GroupId::parse(pos);
            auto info = nodes_[idx].node->self();
            info.group_id = gid_of[idx];
            everyone.push_back(info);
        }

    auto infos_at = [&](const std::string& pos) {
        std::vector<wire::NodeInfo> out;
        auto it = by_pos.find(pos);
        if (it == by_pos.end())
            return out;
        for (size_t idx : it->second) {
            auto info = nodes_[idx].node->self();
            info.group_id = gid_of[idx];
            out.push_back(info);
        }
        return out;
    };

    for (const auto& [pos, idxs] : by_pos) {
        // links: co-members plus everyone at the adjacent positions
        std::vector<wire::NodeInfo> peers;
        auto add_all = [&](const std::string& p) {
            for (auto& n : infos_at(p))
                peers.push_back(std::move(n));
        };
        add_all(pos);
        if (!pos.empty())
            add_all(pos.substr(0, pos.size() - 1));
        add_all(pos + "0");
        add_all(pos + "1");
        for (size_t idx : idxs) {
            std::vector<wire::NodeInfo> others;
            for (const auto& p : peers)
                if (p.node_id != nodes_[idx].node->self().node_id)
                    others.push_back(p);
            nodes_[idx].node->overlay().seed_state(gid_of[idx], std::nullopt, others, everyone,
                                                   {});
        }
    }
}

void Network::fail_node(size_t index) { nodes_.at(index).alive = false; }
void Network::recover_node(size_t index) { nodes_.at(index).alive = true; }

void Network::schedule_failure(size_t index, uint64_t at_ms, bool going_down) {
    if (index >= nodes_.size())
        fail(Errc::unreachable_node, "no such node");
    Event ev;
    ev.time = std::max(at_ms, now_);
    ev.seq = ++seq_;
    ev.kind = going_down ? Event::Kind::fail : Event::Kind::recover;
    ev.node_index = index;
    queue_.push(ev);
}

Digest Network::originate_broadcast(size_t index, Bytes app_payload) {
    auto& entry = nodes_.at(index);
    auto e = entry.node->originate_broadcast(std::move(app_payload));
    Digest msg_id;
    if (!e.sends.empty()) {
        msg_id = e.sends.front().msg.msg_id;
    } else {
        // no links (single node network); synthesize a stable trace id
        msg_id = sha256(to_bytes("solo." + std::to_string(++seq_)));
    }
    if (!traces_.count(msg_id))
        trace_order_.push_back(msg_id);
    traces_[msg_id].push_back(
        TraceRow{msg_id, entry.node->self().node_id, now_, 0, entry.node->self().node_id});
    absorb(now_, 0, std::move(e), index);
    return msg_id;
}

wire::NodeInfo Network::register_client(const std::string& name) {
    wire::NodeInfo c;
    c.node_id = sha256(to_bytes("mtfs.sim.client." + name));
    clients_.try_emplace(c.node_id);
    return c;
}

void Network::client_send(const wire::NodeInfo& client, size_t to_index, app::AppMsg msg) {
    wire::Message m;
    m.msg_id = sha256(to_bytes("mtfs.sim.clientmsg." + std::to_string(++seq_)));
    m.origin = client.node_id;
    m.body = wire::AppPayload{app::pack(msg)};
    push_frame(now_, 0, client.node_id, nodes_.at(to_index).node->self(), m);
}

const std::vector<ClientRow>& Network::inbox(const wire::NodeInfo& client) const {
    return clients_.at(client.node_id);
}

void Network::clear_inbox(const wire::NodeInfo& client) { clients_.at(client.node_id).clear(); }

void Network::run() {
    run_until([] { return false; });
}

bool Network::run_until(const std::function<bool()>& pred) {
    uint64_t budget = kEventBudget;
    while (!queue_.empty()) {
        if (budget-- == 0)
            fail(Errc::internal, "event budget exhausted");
        Event ev = queue_.top();
        queue_.pop();
        now_ = std::max(now_, ev.time);
        dispatch(ev);
        if (pred())
            return true;
    }
    return pred();
}

size_t Network::alive_count() const {
    size_t n = 0;
    for (const auto& e : nodes_)
        n += e.alive ? 1 : 0;
    return n;
}

std::optional<size_t> Network::index_of(const Digest& node_id) const {
    auto it = index_.find(node_id);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

const std::vector<TraceRow>& Network::trace(const Digest& msg_id) const {
    static const std::vector<TraceRow> empty;
    auto it = traces_.find(msg_id);
    return it == traces_.end() ? empty : it->second;
}

Metrics Network::metrics(const Digest& msg_id, size_t population) const {
    Metrics m;
    const auto& rows = trace(msg_id);
    std::set<Digest> reached;
    uint64_t hop_sum = 0, hop_rows = 0;
    for (const auto& r : rows) {
        reached.insert(r.node);
        m.max_hops = std::max(m.max_hops, r.hops);
        if (r.hops > 0) {
            hop_sum += r.hops;
            hop_rows += 1;
        }
    }
    m.coverage = population ? static_cast<double>(reached.size()) / population : 0.0;
    m.mean_hops = hop_rows ? static_cast<double>(hop_sum) / hop_rows : 0.0;
    auto it = transmissions_.find(msg_id);
    m.messages = it == transmissions_.end() ? 0 : it->second;
    return m;
}

std::string Network::trace_csv() const {
    std::ostringstream out;
    out << "msg_id,node,time_ms,hops\n";
    for (const auto& id : trace_order_)
        for (const auto& r : trace(id))
            out << r.msg_id.hex() << ',' << r.node.hex() << ',' << r.time_ms << ',' << r.hops
                << '\n';
    return out.str();
}

size_t Network::height() const {
    size_t h = 0;
    for (const auto& e : nodes_)
        if (e.alive && e.node->overlay().joined())
            h = std::max(h, e.node->overlay().group_id().depth());
    return h;
}

uint64_t Network::draw_latency() {
    if (cfg_.latency.max_ms <= cfg_.latency.min_ms)
        return cfg_.latency.min_ms;
    std::uniform_int_distribution<uint64_t> d(cfg_.latency.min_ms, cfg_.latency.max_ms);
    return d(rng_);
}

void Network::absorb(uint64_t at, uint32_t hops, overlay::Emit e, size_t from_index) {
    const auto& self = nodes_.at(from_index).node->self();
    for (auto& s : e.sends)
        push_frame(at, hops, self.node_id, s.to, s.msg);
    for (auto& t : e.timers) {
        Event ev;
        ev.time = std::max(at, t.at_ms);
        ev.seq = ++seq_;
        ev.kind = Event::Kind::timer;
        ev.node_index = from_index;
        ev.token = t.token;
        queue_.push(std::move(ev));
    }
    // residual app deliveries (user broadcasts) are visible through traces
}

void Network::push_frame(uint64_t at, uint32_t hops, const Digest& from_node,
                         const wire::NodeInfo& to, const wire::Message& msg) {
    bool is_node = index_.count(to.node_id) != 0;
    bool is_client = clients_.count(to.node_id) != 0;
    if (!is_node && !is_client)
        return; // no such endpoint, the frame falls on the floor
    uint64_t t = at + draw_latency();
    auto& clock = link_clock_[{from_node, to.node_id}];
    t = std::max(t, clock); // FIFO per ordered link
    clock = t;
    Event ev;
    ev.time = t;
    ev.seq = ++seq_;
    ev.kind = Event::Kind::deliver;
    ev.to = to.node_id;
    ev.from = from_node;
    ev.frame = wire::encode(msg);
    ev.hops = hops + 1;
    queue_.push(std::move(ev));
    if (is_node && index_.count(from_node))
        transmissions_[msg.msg_id] += 1;
}

void Network::dispatch(const Event& ev) {
    switch (ev.kind) {
    case Event::Kind::fail:
        if (ev.node_index < nodes_.size())
            nodes_[ev.node_index].alive = false;
        return;
    case Event::Kind::recover:
        if (ev.node_index < nodes_.size())
            nodes_[ev.node_index].alive = true;
        return;
    case Event::Kind::timer: {
        auto& entry = nodes_.at(ev.node_index);
        if (!entry.alive)
            return;
        absorb(ev.time, 0, entry.node->handle_timer(ev.time, ev.token), ev.node_index);
        return;
    }
    case Event::Kind::deliver: {
        auto msg = wire::decode(ev.frame);
        auto idx = index_.find(ev.to);
        if (idx != index_.end()) {
            auto& entry = nodes_[idx->second];
            if (!entry.alive)
                return; // failed nodes drop everything
            if (!traces_.count(msg.msg_id))
                trace_order_.push_back(msg.msg_id);
            traces_[msg.msg_id].push_back(TraceRow{msg.msg_id, ev.to, ev.time, ev.hops, msg.origin});
            absorb(ev.time, ev.hops,
                   entry.node->handle_message(ev.time, ev.from, msg), idx->second);
            return;
        }
        auto cl = clients_.find(ev.to);
        if (cl != clients_.end()) {
            if (const auto* ap = std::get_if<wire::AppPayload>(&msg.body))
                cl->second.push_back(ClientRow{ev.time, msg.origin, app::unpack(ap->payload)});
            return;
        }
        return;
    }
    }
}

GossipResult gossip_baseline(uint64_t seed, size_t n, size_t fanout, size_t max_rounds) {
    if (fanout == 0)
        fail(Errc::usage_error, "gossip fanout must be at least 1");
    GossipResult res;
    if (n == 0)
        return res;
    std::mt19937_64 rng(seed);
    std::vector<bool> infected(n, false);
    infected[0] = true;
    size_t covered = 1;

    std::vector<size_t> others(n > 0 ? n - 1 : 0);
    for (size_t round = 0; round < max_rounds && covered < n; ++round) {
        res.rounds_used = round + 1;
        auto snapshot = infected;
        for (size_t v = 0; v < n; ++v) {
            if (!snapshot[v])
                continue;
            // choose `fanout` distinct peers other than v
            size_t m = 0;
            for (size_t u = 0; u < n; ++u)
                if (u != v)
                    others[m++] = u;
            size_t picks = std::min(fanout, m);
            for (size_t i = 0; i < picks; ++i) {
                std::uniform_int_distribution<size_t> d(i, m - 1);
                std::swap(others[i], others[d(rng)]);
                res.messages += 1;
                if (!infected[others[i]]) {
                    infected[others[i]] = true;
                    covered += 1;
                }
            }
        }
    }
    res.coverage = static_cast<double>(covered) / static_cast<double>(n);
    return res;
}

SimExchange::SimExchange(Network& net, const std::string& name)
    : net_(net), self_(net.register_client(name)) {}

size_t SimExchange::resolve(const wire::NodeInfo& to) const {
    auto idx = net_.index_of(to.node_id);
    if (!idx)
        fail(Errc::unreachable_node, "no such node in the simulation");
    return *idx;
}

void SimExchange::send(const wire::NodeInfo& to, app::AppMsg msg) {
    client::set_envelope(msg, ++next_req_, self_);
    net_.client_send(self_, resolve(to), std::move(msg));
}

std::optional<app::AppMsg> SimExchange::request(const wire::NodeInfo& to, app::AppMsg req) {
    uint64_t id = ++next_req_;
    client::set_envelope(req, id, self_);
    net_.client_send(self_, resolve(to), std::move(req));
    const auto& rows = net_.inbox(self_);
    auto match = [&]() -> const app::AppMsg* {
        for (auto it = rows.rbegin(); it != rows.rend(); ++it)
            if (client::req_id_of(it->msg) == id)
                return &it->msg;
        return nullptr;
    };
    net_.run_until([&] { return match() != nullptr; });
    if (const auto* m = match())
        return *m;
    return std::nullopt;
}

std::vector<app::AppMsg> SimExchange::collect(const wire::NodeInfo& to, app::AppMsg req,
                                              size_t expect, uint64_t window_ms) {
    (void)window_ms; // the simulator drains instead; determinism over wall time
    uint64_t id = ++next_req_;
    client::set_envelope(req, id, self_);
    net_.client_send(self_, resolve(to), std::move(req));
    const auto& rows = net_.inbox(self_);
    auto matches = [&] {
        std::vector<app::AppMsg> out;
        for (const auto& r : rows)
            if (client::req_id_of(r.msg) == id)
                out.push_back(r.msg);
        return out;
    };
    net_.run_until([&] { return matches().size() >= expect; });
    return matches();
}

} // namespace mtfs::sim
