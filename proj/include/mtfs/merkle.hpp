// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"

#include <functional>
#include <optional>

namespace mtfs::merkle {

using ObjectId = Digest;

// Everything stored in the network is cut to pieces of at most this size.
inline constexpr size_t kMaxObjectSize = 1048576; // 1 MiB

struct StoredObject {
    ObjectId id;
    Bytes bytes;
};

// Binary hash tree over the leaf objects of one piece of content. `levels`
// holds the internal levels bottom-up (leaf ids live in `leaf_ids`); an
// unpaired node is promoted unchanged into the next level; the last level has
// exactly one entry, the root.
struct MerkleManifest {
    ObjectId root;
    uint64_t total_size = 0;
    std::vector<ObjectId> leaf_ids;
    std::vector<std::vector<ObjectId>> levels;

    bool operator==(const MerkleManifest&) const = default;
};

// Result of chunking one piece of content. The manifest is present exactly
// when the content spans more than one object; for single-object content the
// root is the content hash itself.
struct ChunkingResult {
    ObjectId root;
    std::vector<StoredObject> leaves;
    std::optional<MerkleManifest> manifest;
};

ChunkingResult chunk(ByteView content);

// Pairwise-hash a level of digests, promoting an unpaired last element.
std::vector<ObjectId> parent_level(const std::vector<ObjectId>& level);

// Root over ordered leaf ids; a single leaf is its own root.
ObjectId build_root(const std::vector<ObjectId>& leaf_ids);

// Internal levels bottom-up, ending with the single-root level. Empty for a
// single leaf.
std::vector<std::vector<ObjectId>> build_levels(const std::vector<ObjectId>& leaf_ids);

bool verify_object(const ObjectId& id, ByteView bytes);

using FetchFn = std::function<std::optional<Bytes>(const ObjectId&)>;

// Rebuild content from its root (and manifest when multi-object), fetching
// and verifying every leaf. Throws MissingObject / IntegrityFailure /
// RootMismatch.
Bytes reassemble(const ObjectId& root, const std::optional<MerkleManifest>& manifest,
                 const FetchFn& fetch);

// Canonical JSON form, the byte-exact representation stored as the "_mt"
// object: {"leaves":[...],"levels":[[...]...],"total_size":N,"version":1}.
Bytes encode_manifest(const MerkleManifest& m);
MerkleManifest decode_manifest(ByteView bytes);

} // namespace mtfs::merkle
