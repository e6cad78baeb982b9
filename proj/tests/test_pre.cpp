// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/pre.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace mtfs;
using namespace mtfs::pre;

TEST_CASE("owner encrypt and decrypt round trip") {
    RandomSource rng(31);
    auto kp = keygen(rng);
    for (size_t n : {size_t{0}, size_t{1}, size_t{100}, size_t{70000}}) {
        CAPTURE(n);
        auto pt = rng.bytes(n);
        auto enc = encrypt(kp.pk, pt, rng);
        CHECK(enc.ciphertext.size() == n + kCipherOverhead); // constant overhead
        CHECK(decrypt_own(kp.sk, enc.capsule, enc.ciphertext) == pt);
    }
}

TEST_CASE("wrong key does not open the data") {
    RandomSource rng(32);
    auto alice = keygen(rng);
    auto mallory = keygen(rng);
    auto enc = encrypt(alice.pk, to_bytes("secret"), rng);
    testutil::expect_code(Errc::wrong_key,
                          [&] { decrypt_own(mallory.sk, enc.capsule, enc.ciphertext); });
}

TEST_CASE("sharing re-targets the capsule and never touches the ciphertext") {
    RandomSource rng(33);
    auto alice = keygen(rng);
    auto bob = keygen(rng);
    auto pt = rng.bytes(4096);
    auto enc = encrypt(alice.pk, pt, rng);
    const Bytes frozen = enc.ciphertext; // the stored bytes, before any sharing

    auto rk = rekey(alice.sk, bob.pk, rng);
    auto shared_cap = reencrypt(rk, enc.capsule);
    CHECK(shared_cap.flag == CapsuleFlag::reencrypted);

    // receiver opens the ORIGINAL ciphertext with only the new capsule
    CHECK(enc.ciphertext == frozen);
    CHECK(decrypt_shared(bob.sk, shared_cap, frozen) == pt);

    // owner still opens the same bytes through the original capsule
    CHECK(decrypt_own(alice.sk, enc.capsule, frozen) == pt);

    SUBCASE("third party gains nothing from the shared capsule") {
        auto eve = keygen(rng);
        testutil::expect_code(Errc::wrong_key,
                              [&] { decrypt_shared(eve.sk, shared_cap, frozen); });
    }
    SUBCASE("transform is single hop") {
        testutil::expect_code(Errc::already_reencrypted,
                              [&] { reencrypt(rk, shared_cap); });
    }
    SUBCASE("flag routes to the right decrypt path") {
        testutil::expect_code(Errc::capsule_mismatch,
                              [&] { decrypt_own(bob.sk, shared_cap, frozen); });
        testutil::expect_code(Errc::capsule_mismatch,
                              [&] { decrypt_shared(alice.sk, enc.capsule, frozen); });
    }
    SUBCASE("rekey toward a different receiver does not help bob") {
        auto carol = keygen(rng);
        auto rk2 = rekey(alice.sk, carol.pk, rng);
        auto cap2 = reencrypt(rk2, enc.capsule);
        testutil::expect_code(Errc::wrong_key, [&] { decrypt_shared(bob.sk, cap2, frozen); });
        CHECK(decrypt_shared(carol.sk, cap2, frozen) == pt);
    }
}

TEST_CASE("capsule serialization stays compact and round trips") {
    RandomSource rng(34);
    auto alice = keygen(rng);
    auto bob = keygen(rng);
    auto enc = encrypt(alice.pk, to_bytes("x"), rng);

    auto ser = enc.capsule.serialize();
    CHECK(ser.size() == kCapsuleOriginalSize);
    CHECK(ser.size() < 256);
    CHECK(Capsule::deserialize(ser) == enc.capsule);

    auto rk = rekey(alice.sk, bob.pk, rng);
    auto cap2 = reencrypt(rk, enc.capsule);
    auto ser2 = cap2.serialize();
    CHECK(ser2.size() == kCapsuleReencryptedSize);
    CHECK(ser2.size() < 256);
    CHECK(Capsule::deserialize(ser2) == cap2);

    auto rkser = rk.serialize();
    CHECK(ReencryptionKey::deserialize(rkser) == rk);
    auto pkser = alice.pk.serialize();
    CHECK(PublicKey::deserialize(pkser) == alice.pk);

    SUBCASE("parse rejects damage") {
        auto bad = ser;
        bad[0] = 9; // version
        testutil::expect_code(Errc::version_error, [&] { Capsule::deserialize(bad); });
        bad = ser;
        bad.pop_back();
        testutil::expect_code(Errc::malformed_record, [&] { Capsule::deserialize(bad); });
        bad = pkser;
        bad[1] = 0x77;
        testutil::expect_code(Errc::malformed_record, [&] { PublicKey::deserialize(bad); });
    }
    SUBCASE("tampered binding value is caught before use") {
        auto cap = enc.capsule;
        cap.s[5] ^= 0x20;
        testutil::expect_code(Errc::capsule_mismatch,
                              [&] { decrypt_own(alice.sk, cap, enc.ciphertext); });
        testutil::expect_code(Errc::capsule_mismatch, [&] { reencrypt(rk, cap); });
    }
}

TEST_CASE("keygen from the same seed is reproducible") {
    RandomSource a(77, "id"), b(77, "id");
    auto ka = keygen(a), kb = keygen(b);
    CHECK(ka.pk == kb.pk);
    CHECK(ka.sk == kb.sk);
    CHECK(ka.pk.digest() == kb.pk.digest());
}

TEST_CASE("signatures verify, bind the message, and are deterministic") {
    RandomSource rng(35);
    auto kp = keygen(rng);
    auto other = keygen(rng);
    auto msg = to_bytes("ledger entry 1");

    auto sig = sign(kp.sk, msg);
    CHECK(verify(kp.pk, msg, sig));
    CHECK(sign(kp.sk, msg) == sig); // deterministic

    auto msg2 = to_bytes("ledger entry 2");
    CHECK_FALSE(verify(kp.pk, msg2, sig));
    CHECK_FALSE(verify(other.pk, msg, sig));

    auto bad = sig;
    bad[40] ^= 1;
    CHECK_FALSE(verify(kp.pk, msg, ByteView(bad)));
    CHECK_FALSE(verify(kp.pk, msg, ByteView(bad.data(), 63)));
}
