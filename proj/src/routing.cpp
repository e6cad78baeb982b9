// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/routing.hpp"

#include "mtfs/error.hpp"

#include <algorithm>

namespace mtfs::routing {

std::vector<bool> hex_to_bits(std::string_view hex) {
    std::vector<bool> bits;
    bits.reserve(hex.size() * 4);
    for (char c : hex) {
        int v;
        if (c >= '0' && c <= '9')
            v = c - '0';
        else if (c >= 'a' && c <= 'f')
            v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F')
            v = c - 'A' + 10;
        else
            fail(Errc::invalid_hex, "not a hex digit");
        for (int i = 3; i >= 0; --i)
            bits.push_back((v >> i) & 1);
    }
    return bits;
}

std::vector<bool> digest_bits(const Digest& d) {
    std::vector<bool> bits;
    bits.reserve(256);
    for (uint8_t byte : d.v)
        for (int i = 7; i >= 0; --i)
            bits.push_back((byte >> i) & 1);
    return bits;
}

std::vector<wire::NodeInfo> group_path(const std::map<Digest, wire::NodeInfo>& members,
                                       const std::vector<bool>& target) {
    // one representative per position; map key order makes it the smallest id
    std::map<std::string, wire::NodeInfo> by_position;
    for (const auto& [id, n] : members) {
        if (!n.group_id.is_prefix_of(target))
            continue;
        auto key = n.group_id.str();
        if (!by_position.count(key))
            by_position[key] = n;
    }
    std::vector<wire::NodeInfo> path;
    path.reserve(by_position.size());
    for (auto& [key, n] : by_position)
        path.push_back(std::move(n));
    std::sort(path.begin(), path.end(), [](const wire::NodeInfo& a, const wire::NodeInfo& b) {
        return a.group_id.depth() < b.group_id.depth();
    });
    return path;
}

wire::NodeInfo outermost(const std::map<Digest, wire::NodeInfo>& members,
                         const std::vector<bool>& target) {
    auto path = group_path(members, target);
    if (path.empty())
        fail(Errc::unreachable_node, "no node matches the target prefix");
    return path.back();
}

} // namespace mtfs::routing
