// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/routing.hpp"
#include "mtfs/simnet.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mtfs;

namespace {

// gid string of every live node, sorted
std::vector<std::string> live_gids(const sim::Network& net) {
    std::vector<std::string> out;
    for (size_t i = 0; i < net.size(); ++i)
        if (net.alive(i))
            out.push_back(net.node(i).overlay().group_id().str());
    std::sort(out.begin(), out.end());
    return out;
}

// undirected link graph keyed by node id hex, from each node's own links
std::map<std::string, std::set<std::string>> link_graph(const sim::Network& net) {
    std::map<std::string, std::set<std::string>> adj;
    for (size_t i = 0; i < net.size(); ++i) {
        if (!net.alive(i))
            continue;
        const auto& n = net.node(i);
        auto me = n.self().node_id.hex();
        adj[me];
        for (const auto& l : n.overlay().forward_links()) {
            auto idx = net.index_of(l.node_id);
            if (!idx || !net.alive(*idx))
                continue;
            adj[me].insert(l.node_id.hex());
            adj[l.node_id.hex()].insert(me);
        }
    }
    return adj;
}

// first-arrival hop count per node id hex
std::map<std::string, uint32_t> arrival_hops(const sim::Network& net, const Digest& msg) {
    std::map<std::string, uint32_t> hops;
    for (const auto& row : net.trace(msg)) {
        auto key = row.node.hex();
        auto it = hops.find(key);
        if (it == hops.end() || row.hops < it->second)
            hops[key] = row.hops;
    }
    return hops;
}

size_t index_of_gid(const sim::Network& net, const std::string& gid) {
    for (size_t i = 0; i < net.size(); ++i)
        if (net.node(i).overlay().group_id().str() == gid)
            return i;
    FAIL("no node holds position ", gid);
    return 0;
}

} // namespace

TEST_CASE("joins fill the tree level by level") {
    sim::Network net(sim::SimConfig{});
    net.grow(7);
    auto gids = live_gids(net);
    std::vector<std::string> want{"", "0", "00", "01", "1", "10", "11"};
    CHECK(gids == want);
    CHECK(net.height() == 2);

    for (size_t n : {1, 2, 3, 4, 12, 31}) {
        sim::Network m(sim::SimConfig{.seed = 7 + n});
        m.grow(n);
        CHECK(m.height() == static_cast<size_t>(std::floor(std::log2(n))));
        // every position is unique
        auto g = live_gids(m);
        CHECK(std::set<std::string>(g.begin(), g.end()).size() == n);
    }
}

TEST_CASE("broadcasts reach every node along shortest paths") {
    RandomSource rng(42, "test.sim.origins");
    for (size_t n : {2, 3, 7, 15, 31}) {
        CAPTURE(n);
        sim::Network net(sim::SimConfig{.seed = 100 + n});
        net.grow(n);
        auto adj = link_graph(net);
        size_t height = net.height();

        for (int trial = 0; trial < 5; ++trial) {
            size_t origin = rng.next_u64() % n;
            auto origin_hex = net.node(origin).self().node_id.hex();
            auto id = net.originate_broadcast(origin, app::pack(app::UserBroadcast{to_bytes("ping")}));
            net.run();

            auto hops = arrival_hops(net, id);
            auto want = oracle::bfs_hops(adj, origin_hex);
            REQUIRE(hops.size() == n);
            for (const auto& [node, d] : want) {
                REQUIRE(hops.count(node));
                CHECK(hops[node] == static_cast<uint32_t>(d));
                CHECK(hops[node] <= 2 * height);
            }
        }
    }
}

TEST_CASE("a fault-free tree broadcast costs one transmission per other node") {
    for (size_t n : {1, 2, 7, 24}) {
        CAPTURE(n);
        sim::Network net(sim::SimConfig{.seed = 200 + n});
        net.grow(n);
        auto id = net.originate_broadcast(0, app::pack(app::UserBroadcast{to_bytes("count me")}));
        net.run();
        auto m = net.metrics(id, n);
        CHECK(m.messages == n - 1);
        CHECK(m.coverage == doctest::Approx(1.0));
    }
}

TEST_CASE("push gossip needs more messages than the tree for the same coverage") {
    testutil::expect_code(Errc::usage_error,
                          [] { sim::gossip_baseline(1, 10, 0, 10); });

    for (size_t n : {4, 16, 63}) {
        CAPTURE(n);
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            auto g = sim::gossip_baseline(seed, n, 2, 64);
            CHECK(g.coverage == doctest::Approx(1.0));
            CHECK(g.messages > n - 1);
        }
    }
}

TEST_CASE("losing an interior node cuts off exactly its subtree") {
    sim::Network net(sim::SimConfig{.seed = 5});
    net.grow(15);
    size_t victim = index_of_gid(net, "0");
    net.fail_node(victim);

    size_t root = index_of_gid(net, "");
    auto id = net.originate_broadcast(root, app::pack(app::UserBroadcast{to_bytes("storm")}));
    net.run();

    std::set<std::string> reached;
    for (const auto& row : net.trace(id))
        reached.insert(row.node.hex());

    for (size_t i = 0; i < net.size(); ++i) {
        auto gid = net.node(i).overlay().group_id().str();
        bool in_lost_subtree = gid.compare(0, 1, "0") == 0;
        CAPTURE(gid);
        CHECK(reached.count(net.node(i).self().node_id.hex()) == (in_lost_subtree ? 0u : 1u));
    }
}

TEST_CASE("radius-2 extra links route around a dead interior node") {
    sim::SimConfig cfg;
    cfg.seed = 6;
    cfg.redundancy = overlay::RedundancyMode::extra_links;
    cfg.link_radius = 2;
    sim::Network net(cfg);
    net.grow(15);
    net.fail_node(index_of_gid(net, "0"));

    auto id = net.originate_broadcast(index_of_gid(net, ""), app::pack(app::UserBroadcast{to_bytes("storm")}));
    net.run();

    std::set<Digest> reached;
    for (const auto& row : net.trace(id))
        reached.insert(row.node);
    size_t alive_reached = 0;
    for (size_t i = 0; i < net.size(); ++i)
        if (net.alive(i) && reached.count(net.node(i).self().node_id))
            alive_reached += 1;
    CHECK(alive_reached == net.alive_count());
    CHECK(net.alive_count() == 14);
}

TEST_CASE("a cluster position survives losing a member") {
    sim::SimConfig cfg;
    cfg.seed = 7;
    cfg.redundancy = overlay::RedundancyMode::cluster;
    sim::Network net(cfg);
    net.build_clustered(2, 3);
    REQUIRE(net.size() == 21);

    // down one member of the position just under the root
    size_t victim = index_of_gid(net, "0");
    net.fail_node(victim);

    size_t origin = index_of_gid(net, "");
    auto id = net.originate_broadcast(origin, app::pack(app::UserBroadcast{to_bytes("storm")}));
    net.run();

    std::set<Digest> reached;
    for (const auto& row : net.trace(id))
        reached.insert(row.node);
    for (size_t i = 0; i < net.size(); ++i) {
        if (!net.alive(i))
            continue;
        CAPTURE(i);
        CHECK(reached.count(net.node(i).self().node_id) == 1);
    }
}

TEST_CASE("identical seeds give identical traces") {
    auto script = [](uint64_t seed) {
        sim::SimConfig cfg;
        cfg.seed = seed;
        cfg.latency.min_ms = 3;
        cfg.latency.max_ms = 19; // spread, so the rng actually steers timing
        sim::Network net(cfg);
        net.grow(10);
        net.originate_broadcast(0, app::pack(app::UserBroadcast{to_bytes("one")}));
        net.originate_broadcast(3, app::pack(app::UserBroadcast{to_bytes("two")}));
        net.run();
        net.originate_broadcast(7, app::pack(app::UserBroadcast{to_bytes("three")}));
        net.run();
        return net.trace_csv();
    };
    auto a = script(99);
    auto b = script(99);
    CHECK(a == b);
    CHECK(a.size() > 100);
    CHECK(std::count(a.begin(), a.end(), '\n') > 10);
}

TEST_CASE("stats broadcast fans in a reply from every node") {
    sim::Network net(sim::SimConfig{.seed = 8});
    net.grow(9);
    sim::SimExchange ex(net, "operator");
    app::StatsReq req;
    auto rows = ex.collect(net.node(0).self(), req, 9, 1000);
    REQUIRE(rows.size() == 9);
    std::set<Digest> who;
    for (const auto& r : rows) {
        const auto& resp = std::get<app::StatsResp>(r);
        who.insert(resp.self.node_id);
        CHECK(resp.objects == 0);
    }
    CHECK(who.size() == 9);
}

TEST_CASE("a replicated object survives holder loss through an audit round") {
    sim::Network net(sim::SimConfig{.seed = 11});
    net.grow(15, true);

    RandomSource rng(4242, "test.sim.payload");
    Bytes payload = rng.bytes(64 * 1024);
    Digest id = sha256(payload);

    const auto& members = net.node(0).overlay().members();
    auto path = routing::group_path(members, routing::digest_bits(id));
    auto holders = replication::select_holders(path, 3);
    REQUIRE(holders.size() == 3);

    sim::SimExchange ex(net, "writer");
    for (const auto& h : holders) {
        app::PushObject push;
        push.object_id = id;
        push.bytes = payload;
        push.holders = holders;
        auto resp = ex.request(h, push);
        REQUIRE(resp);
        CHECK(std::get<app::PushAck>(*resp).stored);
    }
    for (const auto& h : holders)
        CHECK(net.node(*net.index_of(h.node_id)).store().has(id));

    // AuditNow is broadcast-class: every node answers, only the designated
    // auditor (the shallowest recorded holder) does any work. Sum the counts.
    auto sweep = [&] {
        auto rows = ex.collect(net.node(0).self(), app::AuditNow{}, net.size() + 1, 0);
        uint32_t checked = 0, failed = 0, repairs = 0;
        for (const auto& r : rows) {
            const auto& rep = std::get<app::AuditReport>(r);
            checked += rep.checked;
            failed += rep.failed;
            repairs += rep.repairs;
        }
        net.run();
        return std::tuple(checked, failed, repairs);
    };

    // deepest holder (select_holders lists deepest first) goes dark
    net.fail_node(*net.index_of(holders.front().node_id));

    auto [checked, failed, repairs] = sweep();
    CHECK(checked == 2);
    CHECK(failed == 1);
    CHECK(repairs == 1);

    size_t live_copies = 0;
    for (size_t i = 0; i < net.size(); ++i)
        if (net.alive(i) && net.node(i).store().has(id))
            live_copies += 1;
    CHECK(live_copies == 3);

    // steady state: the next sweep finds nothing wrong
    auto [checked2, failed2, repairs2] = sweep();
    CHECK(checked2 == 2);
    CHECK(failed2 == 0);
    CHECK(repairs2 == 0);
}

TEST_CASE("a digest-only cheater fails fresh-nonce audits and is replaced") {
    // First pass: same seed, all honest, to learn where the object lands.
    uint64_t seed = 12;
    Bytes payload = RandomSource(777, "test.sim.cheat").bytes(8000);
    Digest id = sha256(payload);

    auto holder_indexes = [&] {
        sim::Network probe(sim::SimConfig{.seed = seed});
        probe.grow(15, true);
        auto path = routing::group_path(probe.node(0).overlay().members(),
                                        routing::digest_bits(id));
        auto holders = replication::select_holders(path, 3);
        std::vector<size_t> idx;
        for (const auto& h : holders)
            idx.push_back(*probe.index_of(h.node_id));
        return idx;
    }();
    REQUIRE(holder_indexes.size() == 3);

    // Second pass: same ids (derived from seed and index), but the deepest
    // holder only keeps digests.
    sim::Network net(sim::SimConfig{.seed = seed});
    for (size_t i = 0; i < 15; ++i)
        net.add_node(i == 0, i == holder_indexes.front());
    net.bootstrap(0);
    for (size_t i = 1; i < 15; ++i)
        net.join(i, 0);

    auto path = routing::group_path(net.node(0).overlay().members(), routing::digest_bits(id));
    auto holders = replication::select_holders(path, 3);
    REQUIRE(*net.index_of(holders.front().node_id) == holder_indexes.front());

    sim::SimExchange ex(net, "writer");
    for (const auto& h : holders) {
        app::PushObject push;
        push.object_id = id;
        push.bytes = payload;
        push.holders = holders;
        auto resp = ex.request(h, push);
        REQUIRE(resp);
        CHECK(std::get<app::PushAck>(*resp).stored); // the cheater lies here
    }
    CHECK_FALSE(net.node(holder_indexes.front()).store().has(id));

    auto rows = ex.collect(net.node(0).self(), app::AuditNow{}, net.size() + 1, 0);
    uint32_t checked = 0, failed = 0, repairs = 0;
    for (const auto& r : rows) {
        const auto& rep = std::get<app::AuditReport>(r);
        checked += rep.checked;
        failed += rep.failed;
        repairs += rep.repairs;
    }
    CHECK(checked == 2);
    CHECK(failed == 1); // the digest answer never matches a fresh nonce
    CHECK(repairs == 1);
    net.run();

    size_t honest_copies = 0;
    for (size_t i = 0; i < net.size(); ++i)
        if (net.node(i).store().has(id))
            honest_copies += 1;
    CHECK(honest_copies == 3);

    // the cheater is out of the auditor's holder set
    const auto& sets = net.node(*net.index_of(holders.back().node_id)).holder_sets();
    REQUIRE(sets.count(id));
    for (const auto& h : sets.at(id))
        CHECK(h.node_id != holders.front().node_id);
}
