// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/folder.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mtfs;
using namespace mtfs::folder;

namespace {

Entry make_entry(Kind kind, uint64_t size, uint8_t tag) {
    Entry e;
    e.kind = kind;
    e.size = size;
    e.object_ref.v.fill(tag);
    e.capsule_ref.v.fill(static_cast<uint8_t>(tag ^ 0xff));
    return e;
}

} // namespace

TEST_CASE("empty folder has pinned canonical bytes") {
    Object f;
    auto bytes = encode(f);
    CHECK(to_string(bytes) == R"({"entries":{},"total_size":0})");
    CHECK(decode(bytes) == f);
}

TEST_CASE("one entry folder matches hand-written json") {
    Object f;
    Entry e;
    e.kind = Kind::file;
    e.size = 5;
    e.object_ref.v.fill(0xab);
    e.capsule_ref.v.fill(0x01);
    f = add_entry(std::move(f), "notes.txt", e);

    std::string obj_hex(64, 'a');
    for (size_t i = 0; i < obj_hex.size(); i += 2)
        obj_hex[i + 1] = 'b';
    std::string cap_hex;
    for (int i = 0; i < 32; ++i)
        cap_hex += "01";
    std::string want = R"({"entries":{"notes.txt":{"capsule_ref":")" + cap_hex +
                       R"(","kind":"file","object_ref":")" + obj_hex +
                       R"(","size":5}},"total_size":5})";
    CHECK(to_string(encode(f)) == want);
}

TEST_CASE("insertion order does not change the bytes") {
    std::vector<std::pair<std::string, Entry>> items = {
        {"zebra", make_entry(Kind::file, 10, 1)},
        {"alpha", make_entry(Kind::folder, 999, 2)},
        {"m", make_entry(Kind::file, 0, 3)},
        {"alpha2", make_entry(Kind::file, 7, 4)},
    };
    Object in_order;
    for (const auto& [n, e] : items)
        in_order = add_entry(std::move(in_order), n, e);

    std::mt19937 rng(7);
    for (int round = 0; round < 5; ++round) {
        std::shuffle(items.begin(), items.end(), rng);
        Object shuffled;
        for (const auto& [n, e] : items)
            shuffled = add_entry(std::move(shuffled), n, e);
        CHECK(encode(shuffled) == encode(in_order));
    }
}

TEST_CASE("total_size is the flat sum of entry sizes") {
    // entry sizes already carry subtree totals, so the folder total is flat
    Object leaf_dir;
    leaf_dir = add_entry(std::move(leaf_dir), "a.bin", make_entry(Kind::file, 300, 1));
    leaf_dir = add_entry(std::move(leaf_dir), "b.bin", make_entry(Kind::file, 200, 2));

    Object root;
    Entry sub = make_entry(Kind::folder, folder_total(leaf_dir), 3);
    root = add_entry(std::move(root), "docs", sub);
    root = add_entry(std::move(root), "top.bin", make_entry(Kind::file, 50, 4));

    uint64_t expect = 300 + 200 + 50;
    CHECK(folder_total(root) == expect);
    CHECK(to_string(encode(root)).find("\"total_size\":550") != std::string::npos);

    auto back = decode(encode(root));
    CHECK(back == root);
}

TEST_CASE("add and remove are inverse") {
    Object f;
    f = add_entry(std::move(f), "keep", make_entry(Kind::file, 1, 1));
    auto before = encode(f);
    f = add_entry(std::move(f), "temp", make_entry(Kind::file, 2, 2));
    CHECK(encode(f) != before);
    f = remove_entry(std::move(f), "temp");
    CHECK(encode(f) == before);
}

TEST_CASE("duplicate and missing names are rejected") {
    Object f;
    f = add_entry(std::move(f), "x", make_entry(Kind::file, 1, 1));
    testutil::expect_code(Errc::duplicate_name, [&] {
        add_entry(f, "x", make_entry(Kind::file, 2, 2));
    });
    testutil::expect_code(Errc::name_not_found, [&] { remove_entry(f, "y"); });
}

TEST_CASE("decode rejects damaged records") {
    Object f;
    f = add_entry(std::move(f), "x", make_entry(Kind::file, 9, 1));
    auto good = encode(f);

    auto expect_malformed = [](std::string text) {
        testutil::expect_code(Errc::malformed_folder, [&] { decode(to_bytes(text)); });
    };

    expect_malformed("not json at all");
    expect_malformed("[1,2,3]");
    expect_malformed(R"({"total_size":0})");                       // entries missing
    expect_malformed(R"({"entries":[],"total_size":0})");          // wrong entries type
    expect_malformed(R"({"entries":{},"total_size":1})");          // total does not match

    std::string text = to_string(good);
    auto kind_pos = text.find("\"file\"");
    REQUIRE(kind_pos != std::string::npos);
    std::string bad_kind = text;
    bad_kind.replace(kind_pos, 6, "\"link\"");
    expect_malformed(bad_kind);

    std::string bad_hex = text;
    auto hex_pos = bad_hex.find("0101");
    REQUIRE(hex_pos != std::string::npos);
    bad_hex[hex_pos] = 'z';
    expect_malformed(bad_hex);

    std::string bad_total = text;
    auto total_pos = bad_total.find("\"total_size\":9");
    REQUIRE(total_pos != std::string::npos);
    bad_total.replace(total_pos, 14, "\"total_size\":8");
    expect_malformed(bad_total);
}

TEST_CASE("seal and open round trip for the owner") {
    crypto_init();
    RandomSource rng(11);
    auto kp = pre::keygen(rng);

    Object f;
    for (int i = 0; i < 40; ++i)
        f = add_entry(std::move(f), "file" + std::to_string(i),
                      make_entry(Kind::file, 1000 + i, static_cast<uint8_t>(i)));

    auto sealed = seal(kp.pk, f, rng);
    CHECK(sealed.ciphertext.size() == encode(f).size() + pre::kCipherOverhead);
    CHECK(sealed.chunks.leaves.size() == oracle::expected_chunks(sealed.ciphertext.size(), merkle::kMaxObjectSize));
    CHECK(open(kp.sk, sealed.capsule, sealed.ciphertext) == f);

    auto other = pre::keygen(rng);
    testutil::expect_code(Errc::wrong_key, [&] {
        open(other.sk, sealed.capsule, sealed.ciphertext);
    });
}

TEST_CASE("a large folder spans several objects") {
    crypto_init();
    RandomSource rng(12);
    auto kp = pre::keygen(rng);

    // ~128 bytes of json per entry; 12000 entries comfortably exceed 1 MiB
    Object f;
    for (int i = 0; i < 12000; ++i)
        f = add_entry(std::move(f), "entry" + std::to_string(i),
                      make_entry(Kind::file, i, static_cast<uint8_t>(i * 7)));
    auto sealed = seal(kp.pk, f, rng);
    CHECK(sealed.chunks.leaves.size() > 1);
    CHECK(sealed.chunks.leaves.size() == oracle::expected_chunks(sealed.ciphertext.size(), merkle::kMaxObjectSize));
    CHECK(sealed.chunks.manifest.has_value());
    CHECK(open(kp.sk, sealed.capsule, sealed.ciphertext) == f);
}

TEST_CASE("a shared folder opens through the re-encryption path") {
    crypto_init();
    RandomSource rng(13);
    auto owner = pre::keygen(rng);
    auto friend_kp = pre::keygen(rng);

    Object f;
    f = add_entry(std::move(f), "shared.txt", make_entry(Kind::file, 77, 5));
    auto sealed = seal(owner.pk, f, rng);

    auto rk = pre::rekey(owner.sk, friend_kp.pk, rng);
    auto capsule2 = pre::reencrypt(rk, sealed.capsule);
    CHECK(open(friend_kp.sk, capsule2, sealed.ciphertext) == f);

    // owner path refuses the transformed capsule, shared path the original
    testutil::expect_code(Errc::capsule_mismatch, [&] {
        pre::decrypt_own(owner.sk, capsule2, sealed.ciphertext);
    });
    testutil::expect_code(Errc::capsule_mismatch, [&] {
        pre::decrypt_shared(friend_kp.sk, sealed.capsule, sealed.ciphertext);
    });
}
