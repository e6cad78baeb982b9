// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "helpers.hpp"

#include <doctest.h>

TEST_CASE("sha256 matches the published test vector") {
    // FIPS 180-2 appendix B.1: SHA-256("abc")
    auto d = mtfs::sha256(mtfs::to_bytes("abc"));
    CHECK(d.hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hex round trip and rejection") {
    mtfs::RandomSource rng(7);
    auto b = rng.bytes(41);
    CHECK(mtfs::from_hex(mtfs::to_hex(b)) == b);
    testutil::expect_code(mtfs::Errc::invalid_hex, [] { mtfs::from_hex("abc"); }); // odd length
    testutil::expect_code(mtfs::Errc::invalid_hex, [] { mtfs::from_hex("zz"); });
    CHECK(mtfs::from_hex("").empty());
}

TEST_CASE("digest hex round trip") {
    auto d = mtfs::sha256(mtfs::to_bytes("x"));
    CHECK(mtfs::Digest::from_hex(d.hex()) == d);
    testutil::expect_code(mtfs::Errc::invalid_hex,
                          [] { mtfs::Digest::from_hex("ab"); }); // wrong width
    CHECK(mtfs::Digest{}.is_zero());
    CHECK_FALSE(d.is_zero());
}

TEST_CASE("seeded randomness is reproducible and domain separated") {
    mtfs::RandomSource a(42), b(42), c(43);
    mtfs::RandomSource d(42, "other");
    auto ba = a.bytes(64), bb = b.bytes(64);
    CHECK(ba == bb);
    CHECK(ba != c.bytes(64));
    CHECK(ba != d.bytes(64));
    CHECK(a.deterministic());

    // draws keep moving
    mtfs::RandomSource e(1);
    CHECK(e.bytes(16) != e.bytes(16));
}

TEST_CASE("system randomness is not constant") {
    mtfs::RandomSource sys1, sys2;
    CHECK_FALSE(sys1.deterministic());
    CHECK(sys1.bytes(32) != sys2.bytes(32));
}
