// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/group_id.hpp"

#include "mtfs/error.hpp"

namespace mtfs {

GroupId GroupId::parse(std::string_view s) {
    std::vector<bool> bits;
    bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1')
            fail(Errc::malformed_record, "group id must be a 01 string");
        bits.push_back(c == '1');
    }
    return GroupId(std::move(bits));
}

GroupId GroupId::child(Side s) const {
    auto bits = bits_;
    bits.push_back(s == Side::right);
    return GroupId(std::move(bits));
}

GroupId GroupId::parent() const {
    if (bits_.empty())
        fail(Errc::internal, "root has no parent");
    auto bits = bits_;
    bits.pop_back();
    return GroupId(std::move(bits));
}

Side GroupId::last_side() const {
    if (bits_.empty())
        fail(Errc::internal, "root has no side");
    return bits_.back() ? Side::right : Side::left;
}

bool GroupId::is_prefix_of(const GroupId& other) const {
    return is_prefix_of(other.bits_);
}

bool GroupId::is_prefix_of(const std::vector<bool>& target) const {
    if (bits_.size() > target.size())
        return false;
    for (size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] != target[i])
            return false;
    return true;
}

size_t GroupId::common_prefix(const GroupId& other) const {
    size_t n = std::min(bits_.size(), other.bits_.size());
    size_t i = 0;
    while (i < n && bits_[i] == other.bits_[i])
        ++i;
    return i;
}

size_t GroupId::distance(const GroupId& other) const {
    return bits_.size() + other.bits_.size() - 2 * common_prefix(other);
}

std::string GroupId::str() const {
    std::string s;
    s.reserve(bits_.size());
    for (bool b : bits_)
        s.push_back(b ? '1' : '0');
    return s;
}

void GroupId::pack(Bytes& out) const {
    if (bits_.size() > 0xffff)
        fail(Errc::internal, "group id too deep to encode");
    out.push_back(static_cast<uint8_t>(bits_.size() >> 8));
    out.push_back(static_cast<uint8_t>(bits_.size() & 0xff));
    uint8_t cur = 0;
    for (size_t i = 0; i < bits_.size(); ++i) {
        cur |= static_cast<uint8_t>(bits_[i]) << (7 - i % 8);
        if (i % 8 == 7) {
            out.push_back(cur);
            cur = 0;
        }
    }
    if (bits_.size() % 8 != 0)
        out.push_back(cur);
}

GroupId GroupId::unpack(ByteView in, size_t& off) {
    if (off > in.size() || in.size() - off < 2)
        fail(Errc::truncated, "group id length missing");
    size_t nbits = (static_cast<size_t>(in[off]) << 8) | in[off + 1];
    off += 2;
    size_t nbytes = (nbits + 7) / 8;
    if (in.size() - off < nbytes)
        fail(Errc::truncated, "group id bits missing");
    std::vector<bool> bits(nbits);
    for (size_t i = 0; i < nbits; ++i)
        bits[i] = (in[off + i / 8] >> (7 - i % 8)) & 1;
    off += nbytes;
    return GroupId(std::move(bits));
}

} // namespace mtfs
