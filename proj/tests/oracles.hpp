// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used to check the library. Each one is written
// the dumb, obviously-correct way (recursion, full scans, textbook graph
// search) so agreement with the production code actually means something.

#pragma once

#include "mtfs/common.hpp"
#include "mtfs/error.hpp"

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using mtfs::Bytes;
using mtfs::Digest;

// Merkle root by direct recursion over the leaf list.
inline Digest merkle_root_recursive(const std::vector<Digest>& level) {
    if (level.empty())
        throw std::runtime_error("oracle: empty level");
    if (level.size() == 1)
        return level[0];
    std::vector<Digest> up;
    for (size_t i = 0; i < level.size(); i += 2) {
        if (i + 1 < level.size())
            up.push_back(mtfs::sha256_concat(level[i], level[i + 1]));
        else
            up.push_back(level[i]); // odd node rises unchanged
    }
    return merkle_root_recursive(up);
}

// Chunk count from arithmetic alone.
inline size_t expected_chunks(size_t total, size_t max_chunk) {
    if (total == 0)
        return 1; // empty input still produces one (empty) leaf
    return (total + max_chunk - 1) / max_chunk;
}

// Level widths of the tree, bottom up, ending at 1.
inline std::vector<size_t> expected_level_widths(size_t leaves) {
    std::vector<size_t> widths;
    size_t w = leaves;
    while (w > 1) {
        w = (w + 1) / 2;
        widths.push_back(w);
    }
    return widths;
}

// Shortest-path hop counts from `start` over an undirected adjacency list,
// by breadth-first search.
inline std::map<std::string, int> bfs_hops(
    const std::map<std::string, std::set<std::string>>& adj, const std::string& start) {
    std::map<std::string, int> dist;
    std::deque<std::string> q;
    dist[start] = 0;
    q.push_back(start);
    while (!q.empty()) {
        auto u = q.front();
        q.pop_front();
        auto it = adj.find(u);
        if (it == adj.end())
            continue;
        for (const auto& v : it->second) {
            if (!dist.count(v)) {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    return dist;
}

// All group ids (as "01" strings) that are prefixes of the bit string `bits`,
// present in `members`, by linear scan.
inline std::vector<std::string> prefix_scan(const std::set<std::string>& members,
                                            const std::string& bits) {
    std::vector<std::string> out;
    for (const auto& m : members)
        if (bits.compare(0, m.size(), m) == 0)
            out.push_back(m);
    return out;
}

} // namespace oracle
