// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"

#include <compare>
#include <vector>

namespace mtfs {

enum class Side : uint8_t { left = 0, right = 1 };

// Position name in the binary overlay tree: the path of left/right turns from
// the root. The root is the empty string; each child appends one bit, left 0
// and right 1. Tree distance between positions is computable from the names
// alone, which is what makes hash-prefix placement work.
class GroupId {
public:
    GroupId() = default;
    explicit GroupId(std::vector<bool> bits) : bits_(std::move(bits)) {}

    // "010" form; anything but 0 and 1 is rejected
    static GroupId parse(std::string_view s);

    GroupId child(Side s) const;
    GroupId parent() const; // strips the last bit; root has no parent
    Side last_side() const;

    size_t depth() const { return bits_.size(); }
    bool is_root() const { return bits_.empty(); }
    bool bit(size_t i) const { return bits_[i]; }
    const std::vector<bool>& bits() const { return bits_; }

    bool is_prefix_of(const GroupId& other) const;
    // prefix test against an arbitrary bit string (hash bits)
    bool is_prefix_of(const std::vector<bool>& target) const;
    size_t common_prefix(const GroupId& other) const;

    // hops between the two positions along tree edges:
    // depth(a) + depth(b) - 2 * shared prefix
    size_t distance(const GroupId& other) const;

    std::string str() const; // "" for root

    void pack(Bytes& out) const;                     // u16 BE bit count, bits MSB first
    static GroupId unpack(ByteView in, size_t& off); // advances off; throws Truncated

    // lexicographic, shorter prefixes first; gives select_branch its tie-break
    auto operator<=>(const GroupId&) const = default;

private:
    std::vector<bool> bits_;
};

} // namespace mtfs
