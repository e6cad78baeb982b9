// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/wire.hpp"

#include "mtfs/error.hpp"

#include <cstring>

namespace mtfs::wire {

void Reader::need(size_t n) const {
    // off_ never passes in_.size(), every advance is checked here first
    if (n > in_.size() - off_)
        fail(Errc::truncated, "message ends early");
}

uint8_t Reader::u8() {
    need(1);
    return in_[off_++];
}

uint16_t Reader::u16() {
    need(2);
    uint16_t v = (static_cast<uint16_t>(in_[off_]) << 8) | in_[off_ + 1];
    off_ += 2;
    return v;
}

uint32_t Reader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 8) | in_[off_ + i];
    off_ += 4;
    return v;
}

uint64_t Reader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | in_[off_ + i];
    off_ += 8;
    return v;
}

Digest Reader::digest() {
    need(32);
    Digest d;
    std::memcpy(d.v.data(), in_.data() + off_, 32);
    off_ += 32;
    return d;
}

GroupId Reader::group_id() {
    return GroupId::unpack(in_, off_);
}

Bytes Reader::blob() {
    uint32_t n = u32();
    need(n);
    Bytes b(in_.begin() + off_, in_.begin() + off_ + n);
    off_ += n;
    return b;
}

std::string Reader::str() {
    uint8_t n = u8();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data()) + off_, n);
    off_ += n;
    return s;
}

NodeInfo Reader::node_info() {
    NodeInfo n;
    n.node_id = digest();
    n.group_id = group_id();
    n.host = str();
    n.port = u16();
    return n;
}

Bytes Reader::rest() {
    Bytes b(in_.begin() + off_, in_.end());
    off_ = in_.size();
    return b;
}

void Reader::expect_done() const {
    if (!done())
        fail(Errc::truncated, "trailing bytes after message");
}

void Writer::u16(uint16_t v) {
    out_.push_back(static_cast<uint8_t>(v >> 8));
    out_.push_back(static_cast<uint8_t>(v));
}

void Writer::u32(uint32_t v) {
    for (int i = 3; i >= 0; --i)
        out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Writer::u64(uint64_t v) {
    for (int i = 7; i >= 0; --i)
        out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Writer::blob(ByteView b) {
    if (b.size() > 0xffffffffu)
        fail(Errc::internal, "blob too large");
    u32(static_cast<uint32_t>(b.size()));
    raw(b);
}

void Writer::str(std::string_view s) {
    if (s.size() > 0xff)
        fail(Errc::internal, "string field too long");
    u8(static_cast<uint8_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
}

void Writer::node_info(const NodeInfo& n) {
    digest(n.node_id);
    group_id(n.group_id);
    str(n.host);
    u16(n.port);
}

namespace {

void write_branches(Writer& w, const std::vector<OpenBranch>& branches) {
    if (branches.size() > 0xffff)
        fail(Errc::internal, "too many branches in one message");
    w.u16(static_cast<uint16_t>(branches.size()));
    for (const auto& b : branches) {
        w.node_info(b.parent);
        w.u8(static_cast<uint8_t>(b.side));
    }
}

std::vector<OpenBranch> read_branches(Reader& r) {
    uint16_t n = r.u16();
    std::vector<OpenBranch> out;
    out.reserve(n);
    for (uint16_t i = 0; i < n; ++i) {
        OpenBranch b;
        b.parent = r.node_info();
        uint8_t side = r.u8();
        if (side > 1)
            fail(Errc::truncated, "branch side out of range");
        b.side = static_cast<Side>(side);
        out.push_back(std::move(b));
    }
    return out;
}

} // namespace

Bytes encode(const Message& m) {
    Writer w;
    w.u8(kFrameVersion);
    w.u8(static_cast<uint8_t>(m.variant()));
    w.digest(m.msg_id);
    w.digest(m.origin);
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, AvailableBranches> ||
                          std::is_same_v<T, DiscardedBranches>) {
                write_branches(w, body.branches);
            } else if constexpr (std::is_same_v<T, GroupIdAssign>) {
                w.group_id(body.assigned);
            } else {
                w.raw(body.payload);
            }
        },
        m.body);
    Bytes body = w.take();
    Writer framed;
    framed.u32(static_cast<uint32_t>(body.size()));
    framed.raw(body);
    return framed.take();
}

std::optional<size_t> frame_size(ByteView buffered) {
    if (buffered.size() < 4)
        return std::nullopt;
    size_t len = 0;
    for (int i = 0; i < 4; ++i)
        len = (len << 8) | buffered[i];
    return 4 + len;
}

Message decode(ByteView frame) {
    auto total = frame_size(frame);
    if (!total || frame.size() < *total)
        fail(Errc::truncated, "incomplete frame");
    if (frame.size() > *total)
        fail(Errc::truncated, "trailing bytes after frame");
    Reader r(frame.subspan(4));
    uint8_t version = r.u8();
    if (version != kFrameVersion)
        fail(Errc::version_error, "unsupported frame version");
    uint8_t variant = r.u8();
    Message m;
    m.msg_id = r.digest();
    m.origin = r.digest();
    switch (variant) {
    case static_cast<uint8_t>(Variant::available_branches):
        m.body = AvailableBranches{read_branches(r)};
        break;
    case static_cast<uint8_t>(Variant::discarded_branches):
        m.body = DiscardedBranches{read_branches(r)};
        break;
    case static_cast<uint8_t>(Variant::group_id):
        m.body = GroupIdAssign{r.group_id()};
        break;
    case static_cast<uint8_t>(Variant::app):
        m.body = AppPayload{r.rest()};
        break;
    default:
        fail(Errc::unknown_variant, "unknown message variant");
    }
    r.expect_done();
    return m;
}

} // namespace mtfs::wire
