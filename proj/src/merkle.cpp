// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/merkle.hpp"
#include "mtfs/error.hpp"

#include <nlohmann/json.hpp>

namespace mtfs::merkle {

using json = nlohmann::json;

ChunkingResult chunk(ByteView content) {
    ChunkingResult result;
    size_t n = content.size();
    size_t leaf_count = n == 0 ? 1 : (n + kMaxObjectSize - 1) / kMaxObjectSize;
    result.leaves.reserve(leaf_count);
    for (size_t i = 0; i < leaf_count; ++i) {
        size_t off = i * kMaxObjectSize;
        size_t len = std::min(kMaxObjectSize, n - off);
        Bytes piece(content.begin() + off, content.begin() + off + len);
        ObjectId id = sha256(piece);
        result.leaves.push_back({id, std::move(piece)});
    }
    if (leaf_count == 1) {
        result.root = result.leaves[0].id;
        return result;
    }
    MerkleManifest m;
    m.total_size = n;
    m.leaf_ids.reserve(leaf_count);
    for (const auto& leaf : result.leaves)
        m.leaf_ids.push_back(leaf.id);
    m.levels = build_levels(m.leaf_ids);
    m.root = m.levels.back()[0];
    result.root = m.root;
    result.manifest = std::move(m);
    return result;
}

std::vector<ObjectId> parent_level(const std::vector<ObjectId>& level) {
    std::vector<ObjectId> up;
    up.reserve((level.size() + 1) / 2);
    for (size_t i = 0; i + 1 < level.size(); i += 2)
        up.push_back(sha256_concat(level[i], level[i + 1]));
    if (level.size() % 2 != 0)
        up.push_back(level.back());
    return up;
}

std::vector<std::vector<ObjectId>> build_levels(const std::vector<ObjectId>& leaf_ids) {
    if (leaf_ids.empty())
        fail(Errc::empty_leaf_set, "no leaves to build a tree over");
    std::vector<std::vector<ObjectId>> levels;
    std::vector<ObjectId> cur = leaf_ids;
    while (cur.size() > 1) {
        cur = parent_level(cur);
        levels.push_back(cur);
    }
    return levels;
}

ObjectId build_root(const std::vector<ObjectId>& leaf_ids) {
    if (leaf_ids.empty())
        fail(Errc::empty_leaf_set, "no leaves to build a root over");
    if (leaf_ids.size() == 1)
        return leaf_ids[0];
    return build_levels(leaf_ids).back()[0];
}

bool verify_object(const ObjectId& id, ByteView bytes) { return sha256(bytes) == id; }

Bytes reassemble(const ObjectId& root, const std::optional<MerkleManifest>& manifest,
                 const FetchFn& fetch) {
    if (!manifest) {
        auto bytes = fetch(root);
        if (!bytes)
            fail(Errc::missing_object, root.hex());
        if (!verify_object(root, *bytes))
            fail(Errc::integrity_failure, root.hex());
        return std::move(*bytes);
    }
    const MerkleManifest& m = *manifest;
    if (m.leaf_ids.empty() || build_root(m.leaf_ids) != root || m.root != root)
        fail(Errc::root_mismatch, "manifest does not hash to declared root " + root.hex());
    Bytes content;
    content.reserve(m.total_size);
    for (const ObjectId& id : m.leaf_ids) {
        auto bytes = fetch(id);
        if (!bytes)
            fail(Errc::missing_object, id.hex());
        if (!verify_object(id, *bytes))
            fail(Errc::integrity_failure, id.hex());
        content.insert(content.end(), bytes->begin(), bytes->end());
    }
    if (content.size() != m.total_size)
        fail(Errc::root_mismatch, "reassembled size disagrees with manifest total_size");
    return content;
}

Bytes encode_manifest(const MerkleManifest& m) {
    json leaves = json::array();
    for (const auto& id : m.leaf_ids)
        leaves.push_back(id.hex());
    json levels = json::array();
    for (const auto& level : m.levels) {
        json row = json::array();
        for (const auto& id : level)
            row.push_back(id.hex());
        levels.push_back(std::move(row));
    }
    // nlohmann::json orders object keys lexicographically, which is exactly
    // the canonical form: sorted keys, no insignificant whitespace.
    json j{{"leaves", std::move(leaves)},
           {"levels", std::move(levels)},
           {"total_size", m.total_size},
           {"version", 1}};
    return to_bytes(j.dump());
}

MerkleManifest decode_manifest(ByteView bytes) {
    json j = json::parse(to_string(bytes), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("version", 0) != 1 ||
        !j.contains("leaves") || !j.contains("levels") || !j.contains("total_size"))
        fail(Errc::malformed_record, "bad manifest record");
    MerkleManifest m;
    m.total_size = j["total_size"].get<uint64_t>();
    for (const auto& s : j["leaves"])
        m.leaf_ids.push_back(Digest::from_hex(s.get<std::string>()));
    for (const auto& row : j["levels"]) {
        std::vector<ObjectId> level;
        for (const auto& s : row)
            level.push_back(Digest::from_hex(s.get<std::string>()));
        m.levels.push_back(std::move(level));
    }
    if (m.leaf_ids.empty() || m.levels.empty() || m.levels.back().size() != 1)
        fail(Errc::malformed_record, "manifest levels malformed");
    if (build_levels(m.leaf_ids) != m.levels)
        fail(Errc::root_mismatch, "manifest levels do not rebuild from leaves");
    m.root = m.levels.back()[0];
    return m;
}

} // namespace mtfs::merkle
