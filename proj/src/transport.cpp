// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>

#include "mtfs/error.hpp"

namespace mtfs::transport {

namespace {

// write the whole buffer; Errc::peer_closed when the peer goes away
void write_all(int fd, const uint8_t* p, size_t n) {
    while (n > 0) {
        ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
        if (w <= 0) {
            if (w < 0 && errno == EINTR)
                continue;
            fail(Errc::peer_closed, "send failed");
        }
        p += static_cast<size_t>(w);
        n -= static_cast<size_t>(w);
    }
}

// 1 full buffer, 0 clean EOF before the first byte, -1 EOF mid-buffer
int read_exact(int fd, uint8_t* p, size_t n) {
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd, p + got, n - got, 0);
        if (r < 0 && errno == EINTR)
            continue;
        if (r <= 0)
            return got == 0 ? 0 : -1;
        got += static_cast<size_t>(r);
    }
    return 1;
}

sockaddr_in make_addr(const std::string& host, uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        fail(Errc::usage_error, "not a numeric IPv4 address: " + host);
    return addr;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct timer_order {
    bool operator()(const overlay::TimerReq& a, const overlay::TimerReq& b) const {
        return a.at_ms > b.at_ms; // min-heap
    }
};

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::shutdown() {
    if (fd_ >= 0)
        ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket dial(const std::string& host, uint16_t port) {
    auto addr = make_addr(host, port);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        fail(Errc::internal, "socket() failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        fail(Errc::connection_refused,
             "connect to " + host + ":" + std::to_string(port) + " failed");
    }
    set_nodelay(fd);
    return Socket(fd);
}

Socket dial_backoff(const std::string& host, uint16_t port, const DialPolicy& policy,
                    const std::atomic<bool>* keep_going) {
    uint64_t delay = policy.base_ms;
    for (size_t attempt = 0; attempt < policy.attempts; ++attempt) {
        if (attempt > 0) {
            // sleep in slices so shutdown is not stuck behind a full backoff
            uint64_t left = delay;
            while (left > 0) {
                if (keep_going && !keep_going->load())
                    fail(Errc::connection_refused, "dial aborted");
                uint64_t slice = std::min<uint64_t>(left, 50);
                std::this_thread::sleep_for(std::chrono::milliseconds(slice));
                left -= slice;
            }
            delay = std::min(delay * 2, policy.cap_ms);
        }
        try {
            return dial(host, port);
        } catch (const Error&) {
            // retry until the attempt budget runs out
        }
    }
    fail(Errc::connection_refused, "connect to " + host + ":" + std::to_string(port) +
                                       " failed after " + std::to_string(policy.attempts) +
                                       " attempts");
}

void send_frame(const Socket& s, const wire::Message& msg) {
    Bytes frame = wire::encode(msg);
    write_all(s.fd(), frame.data(), frame.size());
}

wire::Message recv_frame(const Socket& s) {
    uint8_t prefix[4];
    int r = read_exact(s.fd(), prefix, 4);
    if (r != 1)
        fail(Errc::peer_closed, "connection closed");
    size_t body = (size_t(prefix[0]) << 24) | (size_t(prefix[1]) << 16) |
                  (size_t(prefix[2]) << 8) | size_t(prefix[3]);
    if (body > kMaxFrameBody)
        fail(Errc::truncated, "frame length out of bounds");
    Bytes frame(4 + body);
    std::memcpy(frame.data(), prefix, 4);
    if (read_exact(s.fd(), frame.data() + 4, body) != 1)
        fail(Errc::peer_closed, "connection closed mid-frame");
    return wire::decode(frame);
}

std::optional<wire::Message> try_recv_frame(const Socket& s) {
    try {
        return recv_frame(s);
    } catch (const Error&) {
        return std::nullopt;
    }
}

Listener::Listener(const std::string& host, uint16_t port) {
    auto addr = make_addr(host, port);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        fail(Errc::internal, "socket() failed");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(fd, 64) != 0) {
        ::close(fd);
        fail(Errc::connection_refused,
             "cannot listen on " + host + ":" + std::to_string(port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    sock_ = Socket(fd);
}

Listener::~Listener() { shutdown(); }

std::optional<Socket> Listener::accept() const {
    int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd < 0)
        return std::nullopt;
    set_nodelay(fd);
    return Socket(fd);
}

void Listener::shutdown() { sock_.shutdown(); }

NodeHost::NodeHost(HostConfig cfg)
    : cfg_(std::move(cfg)),
      listener_(cfg_.bind_host.empty() ? cfg_.host : cfg_.bind_host, cfg_.port),
      epoch_(std::chrono::steady_clock::now()) {
    cfg_.node.overlay.self.host = cfg_.host;
    cfg_.node.overlay.self.port = listener_.port();
    std::unique_ptr<ObjectStore> store;
    if (cfg_.data_dir.empty())
        store = std::make_unique<MemoryStore>();
    else
        store = std::make_unique<DiskStore>(cfg_.data_dir);
    node_ = std::make_unique<node::StorageNode>(cfg_.node, std::move(store));
}

NodeHost::~NodeHost() { stop(); }

uint64_t NodeHost::now_ms() const {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - epoch_)
                                     .count());
}

void NodeHost::start_threads() {
    if (running_.exchange(true))
        return;
    accept_thread_ = std::thread([this] { accept_loop(); });
    logic_thread_ = std::thread([this] { logic_loop(); });
}

void NodeHost::bootstrap() {
    start_threads();
    InboxItem item;
    item.kind = InboxItem::Kind::boot;
    enqueue(std::move(item));
}

void NodeHost::join(const wire::NodeInfo& entry) {
    start_threads();
    InboxItem item;
    item.kind = InboxItem::Kind::join;
    item.entry = entry;
    enqueue(std::move(item));

    std::unique_lock lk(state_mu_);
    bool ok = state_cv_.wait_for(lk, std::chrono::milliseconds(cfg_.join_timeout_ms),
                                 [&] { return node_->overlay().joined(); });
    if (!ok)
        fail(Errc::join_failed, "join timed out");
}

void NodeHost::stop() {
    if (!running_.exchange(false))
        return;
    listener_.shutdown();
    inbox_cv_.notify_all();
    {
        std::lock_guard lk(conns_mu_);
        for (auto& c : all_conns_) {
            c->open = false;
            c->sock.shutdown();
        }
    }
    if (accept_thread_.joinable())
        accept_thread_.join();
    if (logic_thread_.joinable())
        logic_thread_.join();
    std::lock_guard lk(conns_mu_);
    for (auto& c : all_conns_)
        if (c->reader.joinable())
            c->reader.join();
    all_conns_.clear();
    by_id_.clear();
}

wire::NodeInfo NodeHost::self() const {
    std::lock_guard lk(state_mu_);
    return node_->self();
}

void NodeHost::enqueue(InboxItem item) {
    {
        std::lock_guard lk(inbox_mu_);
        inbox_.push_back(std::move(item));
    }
    inbox_cv_.notify_one();
}

void NodeHost::accept_loop() {
    while (running_) {
        auto sock = listener_.accept();
        if (!sock)
            return; // listener shut down
        adopt(std::move(*sock));
    }
}

void NodeHost::adopt(Socket sock) {
    auto conn = std::make_shared<Conn>();
    conn->sock = std::move(sock);
    {
        std::lock_guard lk(conns_mu_);
        all_conns_.push_back(conn);
    }
    conn->reader = std::thread([this, conn] { read_loop(conn); });
}

void NodeHost::read_loop(std::shared_ptr<Conn> conn) {
    while (running_ && conn->open) {
        auto msg = try_recv_frame(conn->sock);
        if (!msg) {
            conn->open = false;
            break;
        }
        InboxItem item;
        item.conn = conn;
        item.msg = std::move(*msg);
        enqueue(std::move(item));
    }
}

wire::Message NodeHost::make_hello() {
    wire::NodeInfo me = self();
    wire::Message m;
    m.msg_id = sha256(to_bytes("mtfs.hello." + me.node_id.hex() + "." +
                               std::to_string(++hello_seq_)));
    m.origin = me.node_id;
    m.body = wire::AppPayload{app::pack(app::AppMsg{app::Hello{me}})};
    return m;
}

std::shared_ptr<NodeHost::Conn> NodeHost::dial_peer(const wire::NodeInfo& to) {
    Socket sock = dial_backoff(to.host, to.port, cfg_.dial, &running_);
    auto conn = std::make_shared<Conn>();
    conn->sock = std::move(sock);
    conn->peer_id = to.node_id;
    {
        std::lock_guard lk(conns_mu_);
        all_conns_.push_back(conn);
    }
    {
        std::lock_guard lk(conn->write_mu);
        send_frame(conn->sock, make_hello());
    }
    by_id_[to.node_id] = conn;
    conn->reader = std::thread([this, conn] { read_loop(conn); });
    return conn;
}

void NodeHost::transmit(const wire::NodeInfo& to, const wire::Message& msg) {
    std::shared_ptr<Conn> conn;
    auto it = by_id_.find(to.node_id);
    if (it != by_id_.end() && it->second->open)
        conn = it->second;
    if (!conn) {
        if (to.host.empty())
            return; // client endpoint with no live inbound link
        try {
            conn = dial_peer(to);
        } catch (const Error&) {
            return; // a peer that stays down looks like message loss
        }
    }
    try {
        std::lock_guard lk(conn->write_mu);
        send_frame(conn->sock, msg);
    } catch (const Error&) {
        conn->open = false;
    }
}

overlay::Emit NodeHost::step(const InboxItem& item, uint64_t now) {
    std::lock_guard lk(state_mu_);
    switch (item.kind) {
    case InboxItem::Kind::boot:
        return node_->bootstrap(now);
    case InboxItem::Kind::join:
        return node_->start_join(now, item.entry);
    case InboxItem::Kind::deliver:
        break;
    }
    const auto& msg = *item.msg;
    if (const auto* ap = std::get_if<wire::AppPayload>(&msg.body)) {
        if (!ap->payload.empty() &&
            ap->payload[0] == static_cast<uint8_t>(app::Tag::hello)) {
            auto hello = std::get<app::Hello>(app::unpack(ap->payload));
            item.conn->peer_id = hello.self.node_id;
            by_id_[hello.self.node_id] = item.conn;
            return {};
        }
    }
    if (item.conn->peer_id.is_zero())
        return {}; // frames before the hello have no attributable sender
    return node_->handle_message(now, item.conn->peer_id, msg);
}

void NodeHost::logic_loop() {
    while (running_) {
        std::optional<InboxItem> item;
        {
            std::unique_lock lk(inbox_mu_);
            auto ready = [&] { return !running_ || !inbox_.empty(); };
            if (timers_.empty()) {
                inbox_cv_.wait(lk, ready);
            } else {
                auto deadline = epoch_ + std::chrono::milliseconds(timers_.front().at_ms);
                inbox_cv_.wait_until(lk, deadline, ready);
            }
            if (!running_)
                return;
            if (!inbox_.empty()) {
                item = std::move(inbox_.front());
                inbox_.pop_front();
            }
        }
        uint64_t now = now_ms();
        overlay::Emit out;
        if (item) {
            try {
                out.merge(step(*item, now));
            } catch (const Error&) {
                // malformed or unexpected frames are dropped, not fatal
            }
        }
        while (!timers_.empty() && timers_.front().at_ms <= now) {
            std::pop_heap(timers_.begin(), timers_.end(), timer_order{});
            uint64_t token = timers_.back().token;
            timers_.pop_back();
            std::lock_guard lk(state_mu_);
            try {
                out.merge(node_->handle_timer(now, token));
            } catch (const Error&) {
            }
        }
        for (const auto& t : out.timers) {
            timers_.push_back(t);
            std::push_heap(timers_.begin(), timers_.end(), timer_order{});
        }
        for (const auto& s : out.sends)
            transmit(s.to, s.msg);
        state_cv_.notify_all();
        // out.app carries locally delivered broadcast payloads; hosts drop them
    }
}

TcpExchange::TcpExchange(const std::string& name, const std::string& host)
    : listener_(host, 0) {
    self_.node_id = sha256(to_bytes("mtfs.tcp.client." + name));
    self_.host = host;
    self_.port = listener_.port();
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpExchange::~TcpExchange() {
    running_ = false;
    listener_.shutdown();
    {
        std::lock_guard lk(conns_mu_);
        for (auto& c : all_conns_) {
            c->open = false;
            c->sock.shutdown();
        }
    }
    if (accept_thread_.joinable())
        accept_thread_.join();
    std::lock_guard lk(conns_mu_);
    for (auto& c : all_conns_)
        if (c->reader.joinable())
            c->reader.join();
}

void TcpExchange::accept_loop() {
    while (running_) {
        auto sock = listener_.accept();
        if (!sock)
            return;
        auto conn = std::make_shared<Conn>();
        conn->sock = std::move(*sock);
        {
            std::lock_guard lk(conns_mu_);
            all_conns_.push_back(conn);
        }
        conn->reader = std::thread([this, conn] { read_loop(conn); });
    }
}

void TcpExchange::read_loop(std::shared_ptr<Conn> conn) {
    while (running_ && conn->open) {
        auto msg = try_recv_frame(conn->sock);
        if (!msg) {
            conn->open = false;
            break;
        }
        const auto* ap = std::get_if<wire::AppPayload>(&msg->body);
        if (!ap)
            continue;
        if (!ap->payload.empty() &&
            ap->payload[0] == static_cast<uint8_t>(app::Tag::hello))
            continue; // identification only
        app::AppMsg m;
        try {
            m = app::unpack(ap->payload);
        } catch (const Error&) {
            continue;
        }
        {
            std::lock_guard lk(inbox_mu_);
            inbox_.push_back(std::move(m));
        }
        inbox_cv_.notify_all();
    }
}

std::shared_ptr<TcpExchange::Conn> TcpExchange::conn_to(const wire::NodeInfo& to) {
    {
        std::lock_guard lk(conns_mu_);
        auto it = by_id_.find(to.node_id);
        if (it != by_id_.end() && it->second->open)
            return it->second;
    }
    Socket sock = dial_backoff(to.host, to.port, DialPolicy{}, &running_);
    auto conn = std::make_shared<Conn>();
    conn->sock = std::move(sock);
    wire::Message hello;
    hello.msg_id = sha256(to_bytes("mtfs.tcp.clienthello." + self_.node_id.hex() + "." +
                                   std::to_string(++msg_seq_)));
    hello.origin = self_.node_id;
    hello.body = wire::AppPayload{app::pack(app::AppMsg{app::Hello{self_}})};
    {
        std::lock_guard lk(conn->write_mu);
        send_frame(conn->sock, hello);
    }
    {
        std::lock_guard lk(conns_mu_);
        all_conns_.push_back(conn);
        by_id_[to.node_id] = conn;
    }
    conn->reader = std::thread([this, conn] { read_loop(conn); });
    return conn;
}

wire::Message TcpExchange::envelope(app::AppMsg msg) {
    wire::Message m;
    m.msg_id = sha256(to_bytes("mtfs.tcp.clientmsg." + self_.node_id.hex() + "." +
                               std::to_string(++msg_seq_)));
    m.origin = self_.node_id;
    m.body = wire::AppPayload{app::pack(msg)};
    return m;
}

void TcpExchange::transmit(const wire::NodeInfo& to, const wire::Message& msg) {
    auto conn = conn_to(to);
    std::lock_guard lk(conn->write_mu);
    send_frame(conn->sock, msg);
}

void TcpExchange::send(const wire::NodeInfo& to, app::AppMsg msg) {
    client::set_envelope(msg, ++next_req_, self_);
    transmit(to, envelope(std::move(msg)));
}

std::optional<app::AppMsg> TcpExchange::request(const wire::NodeInfo& to, app::AppMsg req) {
    uint64_t req_id = ++next_req_;
    client::set_envelope(req, req_id, self_);
    transmit(to, envelope(std::move(req)));

    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(request_timeout_ms_);
    std::unique_lock lk(inbox_mu_);
    for (;;) {
        for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
            if (client::req_id_of(*it) == req_id) {
                app::AppMsg m = std::move(*it);
                inbox_.erase(it);
                return m;
            }
        }
        if (inbox_cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
            // final sweep in case the reply raced the timeout
            for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
                if (client::req_id_of(*it) == req_id) {
                    app::AppMsg m = std::move(*it);
                    inbox_.erase(it);
                    return m;
                }
            }
            return std::nullopt;
        }
    }
}

std::vector<app::AppMsg> TcpExchange::collect(const wire::NodeInfo& to, app::AppMsg req,
                                              size_t expect, uint64_t window_ms) {
    uint64_t req_id = ++next_req_;
    client::set_envelope(req, req_id, self_);
    transmit(to, envelope(std::move(req)));

    if (window_ms == 0)
        window_ms = 1'500;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(window_ms);
    std::vector<app::AppMsg> out;
    std::unique_lock lk(inbox_mu_);
    for (;;) {
        for (auto it = inbox_.begin(); it != inbox_.end();) {
            if (client::req_id_of(*it) == req_id) {
                out.push_back(std::move(*it));
                it = inbox_.erase(it);
            } else {
                ++it;
            }
        }
        if (out.size() >= expect)
            return out;
        if (inbox_cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
            for (auto it = inbox_.begin(); it != inbox_.end();) {
                if (client::req_id_of(*it) == req_id) {
                    out.push_back(std::move(*it));
                    it = inbox_.erase(it);
                } else {
                    ++it;
                }
            }
            return out;
        }
    }
}

}  // namespace mtfs::transport
