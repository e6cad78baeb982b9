// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/app.hpp"

#include "mtfs/error.hpp"

namespace mtfs::app {

using wire::Reader;
using wire::Writer;

bool is_broadcast(Tag t) {
    return t == Tag::user_broadcast || t == Tag::audit_now || t == Tag::stats_req;
}

namespace {

void write_node_list(Writer& w, const std::vector<wire::NodeInfo>& v) {
    if (v.size() > 0xffff)
        fail(Errc::internal, "node list too long");
    w.u16(static_cast<uint16_t>(v.size()));
    for (const auto& n : v)
        w.node_info(n);
}

std::vector<wire::NodeInfo> read_node_list(Reader& r) {
    uint16_t n = r.u16();
    std::vector<wire::NodeInfo> out;
    out.reserve(n);
    for (uint16_t i = 0; i < n; ++i)
        out.push_back(r.node_info());
    return out;
}

void write_branch_list(Writer& w, const std::vector<wire::OpenBranch>& v) {
    if (v.size() > 0xffff)
        fail(Errc::internal, "branch list too long");
    w.u16(static_cast<uint16_t>(v.size()));
    for (const auto& b : v) {
        w.node_info(b.parent);
        w.u8(static_cast<uint8_t>(b.side));
    }
}

std::vector<wire::OpenBranch> read_branch_list(Reader& r) {
    uint16_t n = r.u16();
    std::vector<wire::OpenBranch> out;
    out.reserve(n);
    for (uint16_t i = 0; i < n; ++i) {
        wire::OpenBranch b;
        b.parent = r.node_info();
        uint8_t s = r.u8();
        if (s > 1)
            fail(Errc::truncated, "branch side out of range");
        b.side = static_cast<Side>(s);
        out.push_back(std::move(b));
    }
    return out;
}

Side read_side(Reader& r) {
    uint8_t s = r.u8();
    if (s > 1)
        fail(Errc::truncated, "side out of range");
    return static_cast<Side>(s);
}

struct Packer {
    Writer& w;

    void operator()(const UserBroadcast& m) { w.raw(m.data); }
    void operator()(const FindPrefix& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.group_id(m.target);
    }
    void operator()(const FindPrefixResp& m) {
        w.u64(m.req_id);
        w.node_info(m.best);
        w.u8(m.final);
    }
    void operator()(const PushObject& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.digest(m.object_id);
        w.blob(m.bytes);
        if (m.links.size() > 0xff)
            fail(Errc::internal, "too many links");
        w.u8(static_cast<uint8_t>(m.links.size()));
        for (const auto& l : m.links) {
            w.digest(l.base);
            w.str(l.suffix);
            w.digest(l.target);
        }
        write_node_list(w, m.holders);
        w.u8(m.receipt.has_value());
        if (m.receipt) {
            w.u64(m.receipt->height);
            w.u32(m.receipt->index);
        }
    }
    void operator()(const PushAck& m) {
        w.u64(m.req_id);
        w.digest(m.object_id);
        w.u8(m.stored);
        w.u8(m.reason);
    }
    void operator()(const Challenge& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.digest(m.object_id);
        w.blob(m.nonce);
    }
    void operator()(const Proof& m) {
        w.u64(m.req_id);
        w.digest(m.object_id);
        w.blob(m.nonce);
        w.digest(m.proof);
        w.u8(m.have);
    }
    void operator()(const JoinRequest& m) {
        w.u64(m.req_id);
        w.node_info(m.joiner);
        w.group_id(m.parent_id);
        w.u8(static_cast<uint8_t>(m.side));
    }
    void operator()(const JoinDenied& m) {
        w.u64(m.req_id);
        w.group_id(m.parent_id);
        w.u8(static_cast<uint8_t>(m.side));
    }
    void operator()(const SnapshotReq& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
    }
    void operator()(const SnapshotResp& m) {
        w.u64(m.req_id);
        write_branch_list(w, m.open);
        write_node_list(w, m.members);
    }
    void operator()(const ParentReq& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
    }
    void operator()(const ParentResp& m) {
        w.u64(m.req_id);
        w.u8(m.parent.has_value());
        if (m.parent)
            w.node_info(*m.parent);
    }
    void operator()(const GetObject& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.digest(m.object_id);
        w.str(m.link);
    }
    void operator()(const ObjectResp& m) {
        w.u64(m.req_id);
        w.digest(m.object_id);
        w.u8(m.found);
        w.blob(m.bytes);
    }
    void operator()(const AuditNow& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
    }
    void operator()(const AuditReport& m) {
        w.u64(m.req_id);
        w.node_info(m.auditor);
        w.u32(m.checked);
        w.u32(m.failed);
        w.u32(m.repairs);
    }
    void operator()(const TxSubmit& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.blob(m.tx);
    }
    void operator()(const TxReceipt& m) {
        w.u64(m.req_id);
        w.u8(m.ok);
        w.u64(m.receipt.height);
        w.u32(m.receipt.index);
        w.str(m.error);
    }
    void operator()(const LedgerQuery& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
        w.u8(static_cast<uint8_t>(m.kind));
        w.digest(m.who);
    }
    void operator()(const LedgerResp& m) {
        w.u64(m.req_id);
        w.u8(m.ok);
        w.blob(m.data);
        w.str(m.error);
    }
    void operator()(const StatsReq& m) {
        w.u64(m.req_id);
        w.node_info(m.reply_to);
    }
    void operator()(const StatsResp& m) {
        w.u64(m.req_id);
        w.node_info(m.self);
        w.u32(m.objects);
        w.u64(m.bytes_stored);
        w.u8(m.children);
    }
    void operator()(const Hello& m) { w.node_info(m.self); }
};

AppMsg unpack_body(Tag tag, Reader& r) {
    switch (tag) {
    case Tag::user_broadcast:
        return UserBroadcast{r.rest()};
    case Tag::find_prefix: {
        FindPrefix m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        m.target = r.group_id();
        return m;
    }
    case Tag::find_prefix_resp: {
        FindPrefixResp m;
        m.req_id = r.u64();
        m.best = r.node_info();
        m.final = r.u8() != 0;
        return m;
    }
    case Tag::push_object: {
        PushObject m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        m.object_id = r.digest();
        m.bytes = r.blob();
        uint8_t nlinks = r.u8();
        for (uint8_t i = 0; i < nlinks; ++i) {
            LinkSpec l;
            l.base = r.digest();
            l.suffix = r.str();
            l.target = r.digest();
            m.links.push_back(std::move(l));
        }
        m.holders = read_node_list(r);
        if (r.u8() != 0) {
            LedgerReceipt rec;
            rec.height = r.u64();
            rec.index = r.u32();
            m.receipt = rec;
        }
        return m;
    }
    case Tag::push_ack: {
        PushAck m;
        m.req_id = r.u64();
        m.object_id = r.digest();
        m.stored = r.u8() != 0;
        m.reason = r.u8();
        return m;
    }
    case Tag::challenge: {
        Challenge m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        m.object_id = r.digest();
        m.nonce = r.blob();
        return m;
    }
    case Tag::proof: {
        Proof m;
        m.req_id = r.u64();
        m.object_id = r.digest();
        m.nonce = r.blob();
        m.proof = r.digest();
        m.have = r.u8() != 0;
        return m;
    }
    case Tag::join_request: {
        JoinRequest m;
        m.req_id = r.u64();
        m.joiner = r.node_info();
        m.parent_id = r.group_id();
        m.side = read_side(r);
        return m;
    }
    case Tag::join_denied: {
        JoinDenied m;
        m.req_id = r.u64();
        m.parent_id = r.group_id();
        m.side = read_side(r);
        return m;
    }
    case Tag::snapshot_req: {
        SnapshotReq m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        return m;
    }
    case Tag::snapshot_resp: {
        SnapshotResp m;
        m.req_id = r.u64();
        m.open = read_branch_list(r);
        m.members = read_node_list(r);
        return m;
    }
    case Tag::parent_req: {
        ParentReq m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        return m;
    }
    case Tag::parent_resp: {
        ParentResp m;
        m.req_id = r.u64();
        if (r.u8() != 0)
            m.parent = r.node_info();
        return m;
    }
    case Tag::get_object: {
        GetObject m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        m.object_id = r.digest();
        m.link = r.str();
        return m;
    }
    case Tag::object_resp: {
        ObjectResp m;
        m.req_id = r.u64();
        m.object_id = r.digest();
        m.found = r.u8() != 0;
        m.bytes = r.blob();
        return m;
    }
    case Tag::audit_now: {
        AuditNow m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        return m;
    }
    case Tag::audit_report: {
        AuditReport m;
        m.req_id = r.u64();
        m.auditor = r.node_info();
        m.checked = r.u32();
        m.failed = r.u32();
        m.repairs = r.u32();
        return m;
    }
    case Tag::tx_submit: {
        TxSubmit m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        m.tx = r.blob();
        return m;
    }
    case Tag::tx_receipt: {
        TxReceipt m;
        m.req_id = r.u64();
        m.ok = r.u8() != 0;
        m.receipt.height = r.u64();
        m.receipt.index = r.u32();
        m.error = r.str();
        return m;
    }
    case Tag::ledger_query: {
        LedgerQuery m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        uint8_t k = r.u8();
        if (k > 2)
            fail(Errc::truncated, "ledger query kind out of range");
        m.kind = static_cast<LedgerQueryKind>(k);
        m.who = r.digest();
        return m;
    }
    case Tag::ledger_resp: {
        LedgerResp m;
        m.req_id = r.u64();
        m.ok = r.u8() != 0;
        m.data = r.blob();
        m.error = r.str();
        return m;
    }
    case Tag::stats_req: {
        StatsReq m;
        m.req_id = r.u64();
        m.reply_to = r.node_info();
        return m;
    }
    case Tag::stats_resp: {
        StatsResp m;
        m.req_id = r.u64();
        m.self = r.node_info();
        m.objects = r.u32();
        m.bytes_stored = r.u64();
        m.children = r.u8();
        return m;
    }
    case Tag::hello:
        return Hello{r.node_info()};
    }
    fail(Errc::unknown_variant, "unknown application tag");
}

} // namespace

Tag tag_of(const AppMsg& m) {
    static constexpr Tag tags[] = {
        Tag::user_broadcast, Tag::find_prefix,   Tag::find_prefix_resp, Tag::push_object,
        Tag::push_ack,       Tag::challenge,     Tag::proof,            Tag::join_request,
        Tag::join_denied,    Tag::snapshot_req,  Tag::snapshot_resp,    Tag::parent_req,
        Tag::parent_resp,    Tag::get_object,    Tag::object_resp,      Tag::audit_now,
        Tag::audit_report,   Tag::tx_submit,     Tag::tx_receipt,       Tag::ledger_query,
        Tag::ledger_resp,    Tag::stats_req,     Tag::stats_resp,       Tag::hello,
    };
    static_assert(sizeof(tags) / sizeof(tags[0]) == std::variant_size_v<AppMsg>);
    return tags[m.index()];
}

Bytes pack(const AppMsg& m) {
    Writer w;
    w.u8(static_cast<uint8_t>(tag_of(m)));
    std::visit(Packer{w}, m);
    return w.take();
}

AppMsg unpack(ByteView payload) {
    Reader r(payload);
    uint8_t tag = r.u8();
    auto msg = unpack_body(static_cast<Tag>(tag), r);
    r.expect_done();
    return msg;
}

} // namespace mtfs::app
