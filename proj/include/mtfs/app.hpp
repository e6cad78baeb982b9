// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/wire.hpp"

#include <optional>
#include <variant>

namespace mtfs::app {

// Application sub-protocol carried in the APP message variant. First payload
// byte is the tag; responses set the high bit of their request tag.
// Broadcast-class tags fan out over the tree like any broadcast; everything
// else is point-to-point and never forwarded.
enum class Tag : uint8_t {
    user_broadcast = 0x00,
    find_prefix = 0x01,
    push_object = 0x02,
    challenge = 0x03,
    join_request = 0x04,
    snapshot_req = 0x05,
    parent_req = 0x06,
    get_object = 0x07,
    audit_now = 0x08,
    tx_submit = 0x09,
    ledger_query = 0x0a,
    stats_req = 0x0b,
    hello = 0x0d,
    find_prefix_resp = 0x81,
    push_ack = 0x82,
    proof = 0x83,
    join_denied = 0x84,
    snapshot_resp = 0x85,
    parent_resp = 0x86,
    object_resp = 0x87,
    audit_report = 0x88,
    tx_receipt = 0x89,
    ledger_resp = 0x8a,
    stats_resp = 0x8b,
};

bool is_broadcast(Tag t);

struct UserBroadcast {
    Bytes data;
    bool operator==(const UserBroadcast&) const = default;
};

// One step of recursive placement discovery: who is deeper on this prefix?
struct FindPrefix {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    GroupId target; // the hash bits being matched, not a live position
    bool operator==(const FindPrefix&) const = default;
};
struct FindPrefixResp {
    uint64_t req_id = 0;
    wire::NodeInfo best;
    bool final = false; // true: best is the outermost node, stop walking
    bool operator==(const FindPrefixResp&) const = default;
};

struct LedgerReceipt {
    uint64_t height = 0;
    uint32_t index = 0;
    bool operator==(const LedgerReceipt&) const = default;
};

// A suffix link to install at the receiving holder. The base is usually a
// content root whose bytes are never stored as one object, so it travels
// explicitly instead of being implied by the pushed object id.
struct LinkSpec {
    Digest base;
    std::string suffix; // "_mt", "_capsule"
    Digest target;
    bool operator==(const LinkSpec&) const = default;
};

struct PushObject {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    Digest object_id;
    Bytes bytes;
    std::vector<LinkSpec> links; // installed alongside the object
    // full intended holder set, so each holder knows its audit peers
    std::vector<wire::NodeInfo> holders;
    // storage-contract receipt; absent on first upload (contract not yet sealed)
    std::optional<LedgerReceipt> receipt;
    bool operator==(const PushObject&) const = default;
};
struct PushAck {
    uint64_t req_id = 0;
    Digest object_id;
    bool stored = false;
    uint8_t reason = 0; // 0 ok, 1 store full, 2 too large, 3 id mismatch
    bool operator==(const PushAck&) const = default;
};

struct Challenge {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    Digest object_id;
    Bytes nonce;
    bool operator==(const Challenge&) const = default;
};
struct Proof {
    uint64_t req_id = 0;
    Digest object_id;
    Bytes nonce;
    Digest proof;      // hash(nonce || object bytes)
    bool have = false; // false: holder admits it lacks the object
    bool operator==(const Proof&) const = default;
};

struct JoinRequest {
    uint64_t req_id = 0;
    wire::NodeInfo joiner;
    GroupId parent_id;
    Side side = Side::left;
    bool operator==(const JoinRequest&) const = default;
};
struct JoinDenied {
    uint64_t req_id = 0;
    GroupId parent_id;
    Side side = Side::left;
    bool operator==(const JoinDenied&) const = default;
};

struct SnapshotReq {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    bool operator==(const SnapshotReq&) const = default;
};
struct SnapshotResp {
    uint64_t req_id = 0;
    std::vector<wire::OpenBranch> open;
    std::vector<wire::NodeInfo> members;
    bool operator==(const SnapshotResp&) const = default;
};

struct ParentReq {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    bool operator==(const ParentReq&) const = default;
};
struct ParentResp {
    uint64_t req_id = 0;
    std::optional<wire::NodeInfo> parent;
    bool operator==(const ParentResp&) const = default;
};

struct GetObject {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    Digest object_id;
    std::string link; // empty: the object itself; else follow this suffix link
    bool operator==(const GetObject&) const = default;
};
struct ObjectResp {
    uint64_t req_id = 0;
    Digest object_id; // resolved id (link target when a link was asked for)
    bool found = false;
    Bytes bytes;
    bool operator==(const ObjectResp&) const = default;
};

struct AuditNow {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    bool operator==(const AuditNow&) const = default;
};
struct AuditReport {
    uint64_t req_id = 0;
    wire::NodeInfo auditor;
    uint32_t checked = 0;
    uint32_t failed = 0;
    uint32_t repairs = 0;
    bool operator==(const AuditReport&) const = default;
};

struct TxSubmit {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    Bytes tx; // canonical signed transaction bytes
    bool operator==(const TxSubmit&) const = default;
};
struct TxReceipt {
    uint64_t req_id = 0;
    bool ok = false;
    LedgerReceipt receipt;
    std::string error;
    bool operator==(const TxReceipt&) const = default;
};

enum class LedgerQueryKind : uint8_t { latest_root = 0, pending_shares = 1, chain_dump = 2 };
struct LedgerQuery {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    LedgerQueryKind kind = LedgerQueryKind::latest_root;
    Digest who; // owner or receiver, unused for chain_dump
    bool operator==(const LedgerQuery&) const = default;
};
struct LedgerResp {
    uint64_t req_id = 0;
    bool ok = false;
    Bytes data; // kind-specific canonical bytes
    std::string error;
    bool operator==(const LedgerResp&) const = default;
};

struct StatsReq {
    uint64_t req_id = 0;
    wire::NodeInfo reply_to;
    bool operator==(const StatsReq&) const = default;
};
struct StatsResp {
    uint64_t req_id = 0;
    wire::NodeInfo self;
    uint32_t objects = 0;
    uint64_t bytes_stored = 0;
    uint8_t children = 0;
    bool operator==(const StatsResp&) const = default;
};

// First frame on every TCP connection, identifying the dialer.
struct Hello {
    wire::NodeInfo self;
    bool operator==(const Hello&) const = default;
};

using AppMsg =
    std::variant<UserBroadcast, FindPrefix, FindPrefixResp, PushObject, PushAck, Challenge,
                 Proof, JoinRequest, JoinDenied, SnapshotReq, SnapshotResp, ParentReq,
                 ParentResp, GetObject, ObjectResp, AuditNow, AuditReport, TxSubmit, TxReceipt,
                 LedgerQuery, LedgerResp, StatsReq, StatsResp, Hello>;

Tag tag_of(const AppMsg& m);
Bytes pack(const AppMsg& m);     // tag byte + payload
AppMsg unpack(ByteView payload); // throws Truncated / UnknownVariant

} // namespace mtfs::app
