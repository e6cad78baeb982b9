// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/replication.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace mtfs;
using namespace mtfs::replication;

namespace {

wire::NodeInfo node_with_gid(const std::string& gid) {
    wire::NodeInfo n;
    n.node_id = sha256(to_bytes("replica-node-" + gid));
    n.group_id = GroupId::parse(gid);
    return n;
}

std::map<Digest, wire::NodeInfo> full_tree(int depth) {
    std::map<Digest, wire::NodeInfo> members;
    std::vector<std::string> level{""};
    for (int d = 0; d <= depth; ++d) {
        std::vector<std::string> next;
        for (const auto& gid : level) {
            auto n = node_with_gid(gid);
            members.emplace(n.node_id, n);
            next.push_back(gid + "0");
            next.push_back(gid + "1");
        }
        level = std::move(next);
    }
    return members;
}

std::vector<bool> bits_of(const std::string& s) {
    std::vector<bool> b;
    for (char c : s)
        b.push_back(c == '1');
    return b;
}

} // namespace

TEST_CASE("holders are the deepest path nodes, deepest first") {
    auto members = full_tree(4);
    auto target = bits_of("01101");
    auto path = routing::group_path(members, target);
    REQUIRE(path.size() == 5); // root through depth 4; the tree is that deep

    auto holders = select_holders(path, 3);
    REQUIRE(holders.size() == 3);
    CHECK(holders[0].group_id == GroupId::parse("0110"));
    CHECK(holders[1].group_id == GroupId::parse("011"));
    CHECK(holders[2].group_id == GroupId::parse("01"));
}

TEST_CASE("short paths degrade to every path node") {
    std::map<Digest, wire::NodeInfo> members;
    auto root = node_with_gid("");
    members.emplace(root.node_id, root);

    auto path = routing::group_path(members, bits_of("1010"));
    auto holders = select_holders(path, 3);
    REQUIRE(holders.size() == 1);
    CHECK(holders[0].node_id == root.node_id);
}

TEST_CASE("holder sets stay on the group path over random trees") {
    std::mt19937_64 rng(41);
    for (int round = 0; round < 200; ++round) {
        // random subset of a depth-5 tree, root always present
        std::map<Digest, wire::NodeInfo> members;
        std::vector<std::string> gids{""};
        std::vector<std::string> frontier{""};
        for (int d = 0; d < 5; ++d) {
            std::vector<std::string> next;
            for (const auto& g : frontier)
                for (char c : {'0', '1'})
                    if (rng() % 3) { // keep about two thirds of each level
                        next.push_back(g + c);
                        gids.push_back(g + c);
                    }
            frontier = std::move(next);
        }
        for (const auto& g : gids) {
            auto n = node_with_gid(g);
            members.emplace(n.node_id, n);
        }

        std::vector<bool> target;
        for (int i = 0; i < 16; ++i)
            target.push_back(rng() % 2);

        auto path = routing::group_path(members, target);
        size_t r = 1 + rng() % 4;
        auto holders = select_holders(path, r);
        CHECK(holders.size() == std::min(r, path.size()));

        // oracle: every holder's gid string prefixes the target bits
        std::string target_str;
        for (bool b : target)
            target_str += b ? '1' : '0';
        std::set<Digest> path_ids;
        for (const auto& n : path)
            path_ids.insert(n.node_id);
        for (size_t i = 0; i < holders.size(); ++i) {
            CHECK(path_ids.count(holders[i].node_id));
            auto gid = holders[i].group_id.str();
            CHECK(target_str.substr(0, gid.size()) == gid);
            if (i + 1 < holders.size())
                CHECK(holders[i].group_id.depth() > holders[i + 1].group_id.depth());
        }
    }
}

TEST_CASE("repair picks the deepest non-holder on the path") {
    auto members = full_tree(3);
    auto target = bits_of("0110");
    auto path = routing::group_path(members, target);
    REQUIRE(path.size() == 4); // root, 0, 01, 011

    auto holders = select_holders(path, 3);
    std::set<Digest> holder_ids;
    for (const auto& h : holders)
        holder_ids.insert(h.node_id);

    // deepest holder dies; deepest path node outside the surviving set is it
    holder_ids.erase(holders[0].node_id);
    auto target_node = pick_repair_target(path, holder_ids);
    REQUIRE(target_node);
    CHECK(target_node->node_id == holders[0].node_id);

    // with all three alive, only the root remains to recruit
    holder_ids.insert(holders[0].node_id);
    target_node = pick_repair_target(path, holder_ids);
    REQUIRE(target_node);
    CHECK(target_node->group_id == GroupId{});

    // every path node holding -> nothing left to recruit
    for (const auto& n : path)
        holder_ids.insert(n.node_id);
    CHECK(!pick_repair_target(path, holder_ids));
}

TEST_CASE("proofs need the full bytes, not the digest") {
    RandomSource rng(42);
    auto object = rng.bytes(5000);
    auto object_ref = sha256(object);
    auto nonce = rng.bytes(32);

    auto honest = compute_proof(nonce, object);
    CHECK(honest == compute_proof(nonce, object));

    // a cheater holding only sha256(bytes) has nothing to feed the hash
    auto cheat = compute_proof(nonce, object_ref.v);
    CHECK(cheat != honest);

    auto corrupted = object;
    corrupted[100] ^= 1;
    CHECK(compute_proof(nonce, corrupted) != honest);

    auto nonce2 = rng.bytes(32);
    CHECK(compute_proof(nonce2, object) != honest);
}

TEST_CASE("challenge book enforces freshness") {
    RandomSource rng(43);
    auto object = rng.bytes(2000);
    auto object_ref = sha256(object);
    Digest holder = sha256(to_bytes("holder-1"));

    ChallengeBook book;
    CHECK(!book.outstanding(object_ref, holder));

    auto nonce = book.issue(object_ref, holder, 32, rng);
    CHECK(nonce.size() == 32);
    CHECK(book.outstanding(object_ref, holder));
    CHECK(book.open_count() == 1);

    StorageProof good{object_ref, nonce, compute_proof(nonce, object)};
    CHECK(book.settle(holder, good, object) == ProofCheck::ok);
    CHECK(!book.outstanding(object_ref, holder));

    // settling again replays the consumed nonce
    CHECK(book.settle(holder, good, object) == ProofCheck::stale_nonce);

    // reissue, then answer with the old nonce -> stale
    auto nonce2 = book.issue(object_ref, holder, 32, rng);
    CHECK(nonce2 != nonce);
    CHECK(book.settle(holder, good, object) == ProofCheck::stale_nonce);

    // wrong digest burns the challenge
    StorageProof bad{object_ref, nonce2, compute_proof(nonce2, object_ref.v)};
    CHECK(book.settle(holder, bad, object) == ProofCheck::bad_proof);
    CHECK(!book.outstanding(object_ref, holder));

    // replacing an unanswered challenge turns it stale
    auto nonce3 = book.issue(object_ref, holder, 32, rng);
    auto nonce4 = book.issue(object_ref, holder, 32, rng);
    StorageProof stale{object_ref, nonce3, compute_proof(nonce3, object)};
    CHECK(book.settle(holder, stale, object) == ProofCheck::stale_nonce);
    StorageProof fresh{object_ref, nonce4, compute_proof(nonce4, object)};
    CHECK(book.settle(holder, fresh, object) == ProofCheck::ok);

    // timeout bookkeeping
    auto nonce5 = book.issue(object_ref, holder, 32, rng);
    book.drop(object_ref, holder);
    CHECK(!book.outstanding(object_ref, holder));
    StorageProof late{object_ref, nonce5, compute_proof(nonce5, object)};
    CHECK(book.settle(holder, late, object) == ProofCheck::stale_nonce);

    // a second holder's challenges are independent
    Digest holder2 = sha256(to_bytes("holder-2"));
    auto n6 = book.issue(object_ref, holder2, 32, rng);
    StorageProof cross{object_ref, n6, compute_proof(n6, object)};
    CHECK(book.settle(holder, cross, object) == ProofCheck::no_challenge);
    CHECK(book.settle(holder2, cross, object) == ProofCheck::ok);
}
