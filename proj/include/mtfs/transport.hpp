// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0
//
// TCP adapter: runs the same node state machine used under the simulator
// over real sockets. One connection per tree edge, dialed child to parent
// (the deeper node dials, so an edge never gets two connections). Every
// connection starts with a Hello frame naming the dialer; after that,
// frames flow in per-connection FIFO order.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mtfs/client.hpp"
#include "mtfs/node.hpp"

namespace mtfs::transport {

inline constexpr uint16_t kDefaultPort = 7717;
inline constexpr size_t kMaxFrameBody = 8 * 1024 * 1024; // oversize prefix closes the link

// Reconnect schedule: base * 2^attempt, capped.
struct DialPolicy {
    size_t attempts = 6;
    uint64_t base_ms = 200;
    uint64_t cap_ms = 10'000;
};

// Move-only owner of one socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { close(); }
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void shutdown();  // unblocks any thread sitting in recv on this socket
    void close();

private:
    int fd_ = -1;
};

// One attempt. Errc::connection_refused when nobody answers.
Socket dial(const std::string& host, uint16_t port);
// Repeated attempts under the policy; Errc::connection_refused when
// exhausted or when `keep_going` flips false mid-backoff.
Socket dial_backoff(const std::string& host, uint16_t port, const DialPolicy& policy = {},
                    const std::atomic<bool>* keep_going = nullptr);

// Blocking framed message I/O. recv throws Errc::peer_closed when the peer
// goes away and Errc::truncated on an oversize or malformed length prefix.
void send_frame(const Socket& s, const wire::Message& msg);
wire::Message recv_frame(const Socket& s);
// Reader-loop variant: clean or mid-frame close is nullopt, never a throw.
std::optional<wire::Message> try_recv_frame(const Socket& s);

class Listener {
public:
    // port 0 binds an ephemeral port; port() reports the resolved one.
    Listener(const std::string& host, uint16_t port);
    ~Listener();
    uint16_t port() const { return port_; }
    // nullopt once shut down
    std::optional<Socket> accept() const;
    void shutdown();

private:
    Socket sock_;
    uint16_t port_ = 0;
};

struct HostConfig {
    std::string host = "127.0.0.1"; // advertised to peers
    std::string bind_host;          // listen address; empty binds the advertised one
    uint16_t port = 0; // 0 picks an ephemeral port; kDefaultPort in deployments
    node::NodeConfig node;
    std::string data_dir; // empty keeps objects in memory
    DialPolicy dial;
    uint64_t join_timeout_ms = 15'000;
};

// Hosts one StorageNode: a listener thread accepts links, one reader thread
// per link feeds a single inbox, and one logic thread owns the node state.
// Outbound frames to unknown peers dial on demand; a peer that stays down
// after backoff looks like message loss, which the protocol already absorbs.
class NodeHost {
public:
    explicit NodeHost(HostConfig cfg);
    ~NodeHost();
    NodeHost(const NodeHost&) = delete;
    NodeHost& operator=(const NodeHost&) = delete;

    void bootstrap();                        // start as the first node
    void join(const wire::NodeInfo& entry);  // blocks until attached; Errc::join_failed
    void stop();                             // idempotent

    wire::NodeInfo self() const;
    uint16_t port() const { return listener_.port(); }

    // State peeks lock the same mutex the logic thread holds per event, so
    // they are safe while the host runs.
    template <typename F>
    auto inspect(F&& f) {
        std::lock_guard lk(state_mu_);
        return f(*node_);
    }

private:
    struct Conn {
        Socket sock;
        std::mutex write_mu;
        std::thread reader;
        Digest peer_id;            // zero until the Hello arrives (logic thread)
        std::atomic<bool> open{true};
    };
    // Node stimuli all flow through the inbox so only the logic thread ever
    // touches node state and the timer heap.
    struct InboxItem {
        enum class Kind { deliver, boot, join } kind = Kind::deliver;
        std::shared_ptr<Conn> conn;
        std::optional<wire::Message> msg;
        wire::NodeInfo entry; // join target
    };

    void start_threads();
    void accept_loop();
    void read_loop(std::shared_ptr<Conn> conn);
    void logic_loop();
    void adopt(Socket sock); // spawn a reader for an inbound link

    uint64_t now_ms() const;
    void enqueue(InboxItem item);
    overlay::Emit step(const InboxItem& item, uint64_t now); // holds state_mu_
    void transmit(const wire::NodeInfo& to, const wire::Message& msg);
    std::shared_ptr<Conn> dial_peer(const wire::NodeInfo& to);
    wire::Message make_hello();

    HostConfig cfg_;
    Listener listener_;
    std::unique_ptr<node::StorageNode> node_;
    mutable std::mutex state_mu_; // serializes node_ access between logic and inspect

    std::thread accept_thread_;
    std::thread logic_thread_;
    std::atomic<bool> running_{false};

    std::mutex conns_mu_; // guards all_conns_ only; by_id_ is logic-thread local
    std::vector<std::shared_ptr<Conn>> all_conns_;
    std::map<Digest, std::shared_ptr<Conn>> by_id_;

    std::mutex inbox_mu_;
    std::condition_variable inbox_cv_;
    std::deque<InboxItem> inbox_;

    // timer heap is logic-thread local state; earliest deadline first
    std::vector<overlay::TimerReq> timers_;

    std::chrono::steady_clock::time_point epoch_;
    uint64_t hello_seq_ = 0;
    std::condition_variable state_cv_; // signaled after every logic event
};

// Client plumbing over TCP. Binds a reply listener so nodes other than the
// dialed one (broadcast fan-out responders) can reach back.
class TcpExchange final : public client::Exchange {
public:
    explicit TcpExchange(const std::string& name, const std::string& host = "127.0.0.1");
    ~TcpExchange() override;

    wire::NodeInfo self() const override { return self_; }
    void send(const wire::NodeInfo& to, app::AppMsg msg) override;
    std::optional<app::AppMsg> request(const wire::NodeInfo& to, app::AppMsg req) override;
    std::vector<app::AppMsg> collect(const wire::NodeInfo& to, app::AppMsg req, size_t expect,
                                     uint64_t window_ms) override;

    void set_request_timeout(uint64_t ms) { request_timeout_ms_ = ms; }

private:
    struct Conn {
        Socket sock;
        std::mutex write_mu;
        std::thread reader;
        std::atomic<bool> open{true};
    };

    void accept_loop();
    void read_loop(std::shared_ptr<Conn> conn);
    std::shared_ptr<Conn> conn_to(const wire::NodeInfo& to);
    void transmit(const wire::NodeInfo& to, const wire::Message& msg);
    wire::Message envelope(app::AppMsg msg);

    wire::NodeInfo self_;
    Listener listener_;
    std::thread accept_thread_;
    std::atomic<bool> running_{true};

    std::mutex conns_mu_;
    std::vector<std::shared_ptr<Conn>> all_conns_;
    std::map<Digest, std::shared_ptr<Conn>> by_id_;

    std::mutex inbox_mu_;
    std::condition_variable inbox_cv_;
    std::deque<app::AppMsg> inbox_;

    uint64_t next_req_ = 0;
    uint64_t msg_seq_ = 0;
    uint64_t request_timeout_ms_ = 5'000;
};

}  // namespace mtfs::transport
