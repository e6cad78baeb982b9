// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"
#include "mtfs/group_id.hpp"

#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace mtfs::wire {

inline constexpr uint8_t kFrameVersion = 1;

// Frame layout: 4-byte big-endian body length, then the body:
// version(1) variant(1) msg_id(32) origin(32) payload.
enum class Variant : uint8_t {
    available_branches = 0,
    discarded_branches = 1,
    group_id = 2,
    app = 3,
};

struct NodeInfo {
    Digest node_id;    // digest of the node's public key, stable across sessions
    GroupId group_id;
    std::string host;  // empty marks a client endpoint: replies go back over the arrival link
    uint16_t port = 0;

    bool operator==(const NodeInfo&) const = default;
};

// An unfilled child slot, advertised network-wide so joiners can attach.
struct OpenBranch {
    NodeInfo parent;
    Side side = Side::left;

    GroupId child_id() const { return parent.group_id.child(side); }
    bool operator==(const OpenBranch&) const = default;
    // select_branch order: shallowest first, then (parent bits, side)
    auto key() const { return std::tuple(parent.group_id.depth(), parent.group_id, side); }
};

struct AvailableBranches {
    std::vector<OpenBranch> branches; // delta, not a full listing
    bool operator==(const AvailableBranches&) const = default;
};
struct DiscardedBranches {
    std::vector<OpenBranch> branches;
    bool operator==(const DiscardedBranches&) const = default;
};
// Link-local join confirmation from parent to child; never forwarded.
struct GroupIdAssign {
    GroupId assigned;
    bool operator==(const GroupIdAssign&) const = default;
};
struct AppPayload {
    Bytes payload;
    bool operator==(const AppPayload&) const = default;
};

struct Message {
    Digest msg_id;  // unique per broadcast; dedup key
    Digest origin;  // node_id of the original sender
    std::variant<AvailableBranches, DiscardedBranches, GroupIdAssign, AppPayload> body;

    bool operator==(const Message&) const = default;
    Variant variant() const { return static_cast<Variant>(body.index()); }
};

Bytes encode(const Message& m);     // complete frame, length prefix included
Message decode(ByteView frame);     // exactly one complete frame

// Peeks the length prefix: full frame size once >= 4 bytes buffered.
std::optional<size_t> frame_size(ByteView buffered);

// Bounds-checked big-endian primitives shared by every payload codec.
class Reader {
public:
    explicit Reader(ByteView in) : in_(in) {}
    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    Digest digest();
    GroupId group_id();
    Bytes blob();             // u32 length + bytes
    std::string str();        // u8 length + bytes
    NodeInfo node_info();
    Bytes rest();
    bool done() const { return off_ == in_.size(); }
    void expect_done() const; // trailing bytes are an error

private:
    void need(size_t n) const;
    ByteView in_;
    size_t off_ = 0;
};

class Writer {
public:
    void u8(uint8_t v) { out_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void digest(const Digest& d) { out_.insert(out_.end(), d.v.begin(), d.v.end()); }
    void group_id(const GroupId& g) { g.pack(out_); }
    void blob(ByteView b);
    void str(std::string_view s);
    void node_info(const NodeInfo& n);
    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

} // namespace mtfs::wire
