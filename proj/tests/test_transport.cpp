// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/transport.hpp"
#include "mtfs/workflows.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <sys/socket.h>

#include <algorithm>
#include <chrono>
#include <thread>

using namespace mtfs;

namespace {

wire::Message app_frame(const Digest& origin, uint64_t seq, Bytes payload) {
    wire::Message m;
    m.msg_id = sha256(to_bytes("test.transport.msg." + std::to_string(seq)));
    m.origin = origin;
    m.body = wire::AppPayload{std::move(payload)};
    return m;
}

// a port nobody listens on: bind, note the port, close again
uint16_t dead_port() {
    transport::Listener probe("127.0.0.1", 0);
    uint16_t port = probe.port();
    return port; // listener destroyed on return
}

node::NodeConfig cluster_node_config(size_t index) {
    node::NodeConfig cfg;
    cfg.overlay.self.node_id = sha256(to_bytes("test.tcp.node." + std::to_string(index)));
    cfg.overlay.k = 2;
    cfg.sealer = index == 0;
    cfg.rng_seed = 7000 + index;
    return cfg;
}

// five hosts on loopback: node 0 bootstraps, the rest join through it
struct Cluster {
    std::vector<std::unique_ptr<transport::NodeHost>> hosts;

    explicit Cluster(size_t count) {
        for (size_t i = 0; i < count; ++i) {
            transport::HostConfig hc;
            hc.node = cluster_node_config(i);
            hc.dial = {3, 20, 100}; // peers are up; fail fast when they are not
            hosts.push_back(std::make_unique<transport::NodeHost>(hc));
        }
        hosts[0]->bootstrap();
        for (size_t i = 1; i < count; ++i)
            hosts[i]->join(hosts[0]->self());
    }
    ~Cluster() {
        for (auto& h : hosts)
            h->stop();
    }
};

}  // namespace

TEST_CASE("a frame echoes across a loopback socket unchanged") {
    transport::Listener listener("127.0.0.1", 0);
    std::thread echo([&] {
        auto sock = listener.accept();
        REQUIRE(sock.has_value());
        auto msg = transport::recv_frame(*sock);
        transport::send_frame(*sock, msg);
    });

    auto client = transport::dial("127.0.0.1", listener.port());
    wire::Message out;
    out.msg_id = sha256(to_bytes("test.transport.echo"));
    out.origin = sha256(to_bytes("test.transport.origin"));
    out.body = wire::GroupIdAssign{GroupId::parse("0110")};
    transport::send_frame(client, out);
    auto back = transport::recv_frame(client);
    CHECK(back == out);
    echo.join();
}

TEST_CASE("a thousand frames arrive in the order they were sent") {
    transport::Listener listener("127.0.0.1", 0);
    const size_t kCount = 1000;
    Digest origin = sha256(to_bytes("test.transport.fifo"));

    std::thread sender([&] {
        auto sock = transport::dial("127.0.0.1", listener.port());
        for (size_t i = 0; i < kCount; ++i) {
            Bytes payload{static_cast<uint8_t>(i >> 8), static_cast<uint8_t>(i & 0xff)};
            transport::send_frame(sock, app_frame(origin, i, std::move(payload)));
        }
    });

    auto sock = listener.accept();
    REQUIRE(sock.has_value());
    for (size_t i = 0; i < kCount; ++i) {
        auto msg = transport::recv_frame(*sock);
        const auto& payload = std::get<wire::AppPayload>(msg.body).payload;
        REQUIRE(payload.size() == 2);
        size_t seq = (size_t(payload[0]) << 8) | payload[1];
        REQUIRE(seq == i); // FIFO per connection
    }
    sender.join();
}

TEST_CASE("dialing a dead peer gives up only after the backoff schedule") {
    uint16_t port = dead_port();
    transport::DialPolicy fast{3, 20, 200}; // waits 20ms then 40ms between tries
    auto t0 = std::chrono::steady_clock::now();
    testutil::expect_code(Errc::connection_refused,
                          [&] { (void)transport::dial_backoff("127.0.0.1", port, fast); });
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    CHECK(elapsed >= 60); // both inter-attempt delays were honored

    testutil::expect_code(Errc::connection_refused,
                          [&] { (void)transport::dial("127.0.0.1", port); });
}

TEST_CASE("a poisoned length prefix or a vanished peer surface as errors") {
    transport::Listener listener("127.0.0.1", 0);

    SUBCASE("oversize length prefix") {
        std::thread bad([&] {
            auto sock = transport::dial("127.0.0.1", listener.port());
            Bytes junk{0xff, 0xff, 0xff, 0xff};
            // raw write of a hostile prefix
            (void)::send(sock.fd(), junk.data(), junk.size(), 0);
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        });
        auto sock = listener.accept();
        REQUIRE(sock.has_value());
        testutil::expect_code(Errc::truncated, [&] { (void)transport::recv_frame(*sock); });
        bad.join();
    }

    SUBCASE("peer closes mid-frame") {
        std::thread bad([&] {
            auto sock = transport::dial("127.0.0.1", listener.port());
            Bytes start{0x00, 0x00, 0x01, 0x00, 0x01, 0x03}; // claims 256 bytes, sends 2
            (void)::send(sock.fd(), start.data(), start.size(), 0);
        }); // socket closes here
        auto sock = listener.accept();
        REQUIRE(sock.has_value());
        testutil::expect_code(Errc::peer_closed, [&] { (void)transport::recv_frame(*sock); });
        bad.join();
        CHECK(!transport::try_recv_frame(*sock).has_value());
    }
}

TEST_CASE("five hosts assemble the same tree the simulator builds") {
    Cluster cluster(5);
    std::vector<std::string> gids;
    for (auto& h : cluster.hosts)
        gids.push_back(h->inspect(
            [](node::StorageNode& n) { return n.overlay().group_id().str(); }));
    std::sort(gids.begin(), gids.end());
    CHECK(gids == std::vector<std::string>{"", "0", "00", "01", "1"});
}

TEST_CASE("a client session stores and reads a file over sockets") {
    Cluster cluster(5);
    transport::TcpExchange ex("reader");

    RandomSource krng(42, "test.transport.keys");
    workflows::SessionConfig sc;
    sc.keys = pre::keygen(krng);
    sc.entry = cluster.hosts[0]->self();
    sc.ledger = cluster.hosts[0]->self();
    sc.rng_seed = 43;
    workflows::Session session(ex, sc);

    RandomSource content_rng(44, "test.transport.bytes");
    Bytes content = content_rng.bytes(60'000);
    session.put_file("notes/hello.bin", content);
    CHECK(session.get_file("notes/hello.bin") == content);

    auto root = session.latest_root();
    REQUIRE(root.has_value());
    CHECK(root->owner == sc.keys.pk.digest());

    // the replicas really live on storage nodes, not in the client
    size_t copies = 0;
    for (auto& h : cluster.hosts)
        copies += h->inspect([](node::StorageNode& n) { return n.store().count(); });
    CHECK(copies > 0);
}
