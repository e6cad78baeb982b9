// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/wire.hpp"

#include <map>
#include <vector>

namespace mtfs::routing {

// Hash-prefix placement. A content hash, read as a bit string, names a path
// from the root; the live nodes whose group ids are prefixes of it form the
// Group Path, and the deepest of them (the outermost node) is where the
// object belongs.

std::vector<bool> hex_to_bits(std::string_view hex); // 4 bits per digit, MSB first
std::vector<bool> digest_bits(const Digest& d);      // all 256 bits, MSB first per byte

// All members whose group id prefixes `target`, ordered root-first by depth.
// Positions shared by several physical nodes (cluster mode) contribute one
// representative: the smallest node_id.
std::vector<wire::NodeInfo> group_path(const std::map<Digest, wire::NodeInfo>& members,
                                       const std::vector<bool>& target);

// Deepest element of the Group Path. Throws UnreachableNode on an empty
// membership view (an established network always matches at the root).
wire::NodeInfo outermost(const std::map<Digest, wire::NodeInfo>& members,
                         const std::vector<bool>& target);

} // namespace mtfs::routing
