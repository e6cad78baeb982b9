// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/ledger.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <map>
#include <random>

using namespace mtfs;
using namespace mtfs::ledger;

namespace {

// Independent query oracles over the submission log. They never look at
// blocks or receipts; position in the log is the order of record.
std::optional<folder::RootPointer> oracle_latest_root(const std::vector<Transaction>& log,
                                                      const Digest& owner) {
    std::optional<StorageContract> last;
    for (const auto& tx : log)
        if (const auto* sc = std::get_if<StorageContract>(&tx.body))
            if (sc->owner == owner)
                last = *sc;
    if (!last || last->root_ref.is_zero())
        return std::nullopt;
    return folder::RootPointer{last->owner, last->root_ref, last->group_id};
}

std::vector<FileSend> oracle_pending_shares(const std::vector<Transaction>& log,
                                            const Digest& receiver) {
    std::vector<FileSend> out;
    for (size_t i = 0; i < log.size(); ++i) {
        const auto* fs = std::get_if<FileSend>(&log[i].body);
        if (!fs || fs->receiver != receiver)
            continue;
        bool accepted = false;
        for (size_t j = i + 1; j < log.size() && !accepted; ++j)
            if (const auto* sc = std::get_if<StorageContract>(&log[j].body))
                accepted = sc->owner == receiver;
        if (!accepted)
            out.push_back(*fs);
    }
    return out;
}

Digest filled(uint8_t b) {
    Digest d;
    d.v.fill(b);
    return d;
}

} // namespace

TEST_CASE("transaction bytes are canonical json") {
    crypto_init();
    RandomSource rng(21);
    auto kp = pre::keygen(rng);
    auto tx = make_storage_contract(kp.sk, filled(0x42), GroupId::parse("011"));

    std::string text = to_string(tx.bytes());
    // sorted keys, no whitespace
    size_t prev = 0;
    for (const char* key : {"actor_pk", "group_id", "kind", "owner", "root_ref", "signature"}) {
        auto pos = text.find(std::string("\"") + key + "\":");
        REQUIRE(pos != std::string::npos);
        CHECK(pos > prev);
        prev = pos;
    }
    CHECK(text.find(' ') == std::string::npos);
    CHECK(text.find("\"group_id\":\"011\"") != std::string::npos);

    // unsigned form is the signed form minus the signature field
    auto unsig = to_string(tx.unsigned_bytes());
    CHECK(unsig.find("signature") == std::string::npos);
    CHECK(text.substr(0, unsig.size() - 1) == unsig.substr(0, unsig.size() - 1));

    CHECK(Transaction::parse(tx.bytes()) == tx);
    CHECK(tx.verify());
    CHECK(tx.actor() == kp.pk.digest());

    auto fs = make_file_send(kp.sk, filled(9), filled(8), filled(7));
    CHECK(Transaction::parse(fs.bytes()) == fs);
    CHECK(fs.verify());
    std::string fs_text = to_string(fs.bytes());
    CHECK(fs_text.find("\"kind\":\"file_send\"") != std::string::npos);
}

TEST_CASE("same inputs give byte-identical transactions") {
    crypto_init();
    RandomSource rng(22);
    auto kp = pre::keygen(rng);
    auto a = make_storage_contract(kp.sk, filled(1), GroupId::parse("10"));
    auto b = make_storage_contract(kp.sk, filled(1), GroupId::parse("10"));
    CHECK(a.bytes() == b.bytes()); // deterministic signatures
}

TEST_CASE("tampering breaks verification") {
    crypto_init();
    RandomSource rng(23);
    auto kp = pre::keygen(rng);
    auto tx = make_storage_contract(kp.sk, filled(0x42), GroupId::parse("01"));

    // flip one hex digit of root_ref: still canonical, signature now stale
    std::string text = to_string(tx.bytes());
    auto pos = text.find("4242");
    REQUIRE(pos != std::string::npos);
    text[pos] = '5';
    auto mutated = Transaction::parse(to_bytes(text));
    CHECK(!mutated.verify());

    // claiming someone else's identity fails the pk-digest check
    auto other = pre::keygen(rng);
    auto forged = tx;
    std::get<StorageContract>(forged.body).owner = other.pk.digest();
    CHECK(!forged.verify());
}

TEST_CASE("parse rejects malformed or non-canonical transactions") {
    crypto_init();
    RandomSource rng(24);
    auto kp = pre::keygen(rng);
    auto tx = make_file_send(kp.sk, filled(1), filled(2), filled(3));
    std::string text = to_string(tx.bytes());

    auto expect_malformed = [](const std::string& t) {
        testutil::expect_code(Errc::malformed_record,
                              [&] { Transaction::parse(to_bytes(t)); });
    };

    expect_malformed("nope");
    expect_malformed("{}");
    expect_malformed(text + " ");                       // trailing byte
    std::string spaced = text;
    spaced.insert(spaced.find(':'), " ");               // whitespace variant
    expect_malformed(spaced);
    std::string upper = text;
    auto hex = upper.find("\"sender\":\"") + 10;
    upper[hex] = static_cast<char>(std::toupper(upper[hex]));
    if (upper != text)
        expect_malformed(upper);                        // uppercase hex variant
    std::string bad_kind = text;
    bad_kind.replace(bad_kind.find("file_send"), 9, "file_grab");
    expect_malformed(bad_kind);
}

TEST_CASE("genesis block is fixed and chains start at height one") {
    Chain c;
    REQUIRE(c.blocks().size() == 1);
    const auto& g = c.blocks()[0];
    CHECK(g.height == 0);
    CHECK(g.prev_hash.is_zero());
    CHECK(g.tx_root.is_zero());
    CHECK(g.timestamp_ms == 0);
    CHECK(g.transactions.empty());
    CHECK(g.header_hash == g.compute_header_hash());
    CHECK(c.next_height() == 1);
    CHECK(Block::parse(g.bytes()) == g);
}

TEST_CASE("receipts name the slot the transaction will seal into") {
    crypto_init();
    RandomSource rng(25);
    auto a = pre::keygen(rng);
    auto b = pre::keygen(rng);

    Chain c;
    auto r0 = c.submit(make_storage_contract(a.sk, filled(1), GroupId{}), 10);
    auto r1 = c.submit(make_file_send(a.sk, b.pk.digest(), filled(2), filled(3)), 20);
    auto r2 = c.submit(make_storage_contract(b.sk, filled(4), GroupId::parse("1")), 30);
    CHECK(r0 == Receipt{1, 0});
    CHECK(r1 == Receipt{1, 1});
    CHECK(r2 == Receipt{1, 2});
    CHECK(c.pending_count() == 3);

    CHECK(!c.tick(900));  // period not yet over
    REQUIRE(c.tick(1000));
    CHECK(c.pending_count() == 0);
    REQUIRE(c.blocks().size() == 2);
    const auto& blk = c.blocks()[1];
    CHECK(blk.height == 1);
    CHECK(blk.timestamp_ms == 1000);
    CHECK(blk.prev_hash == c.blocks()[0].header_hash);
    REQUIRE(blk.transactions.size() == 3);
    CHECK(std::get<StorageContract>(blk.transactions[0].body).root_ref == filled(1));
    CHECK(std::get<FileSend>(blk.transactions[1].body).object_ref == filled(2));
    CHECK(blk.tx_root == Block::compute_tx_root(blk.transactions));

    auto r3 = c.submit(make_storage_contract(a.sk, filled(5), GroupId{}), 1100);
    CHECK(r3 == Receipt{2, 0});
    CHECK(!c.tick(1100)); // fresh period
}

TEST_CASE("a full batch seals immediately") {
    crypto_init();
    RandomSource rng(26);
    auto kp = pre::keygen(rng);

    Chain c(1000, 4);
    for (uint32_t i = 0; i < 4; ++i) {
        auto r = c.submit(make_storage_contract(kp.sk, filled(static_cast<uint8_t>(i + 1)),
                                                GroupId{}),
                          50);
        CHECK(r == Receipt{1, i});
    }
    CHECK(c.pending_count() == 0);
    CHECK(c.blocks().size() == 2);
    CHECK(c.blocks()[1].transactions.size() == 4);
}

TEST_CASE("bad signatures never enter the chain") {
    crypto_init();
    RandomSource rng(27);
    auto kp = pre::keygen(rng);
    auto tx = make_storage_contract(kp.sk, filled(1), GroupId{});
    tx.signature[10] ^= 1;
    Chain c;
    testutil::expect_code(Errc::bad_signature, [&] { c.submit(tx, 0); });
    CHECK(c.pending_count() == 0);
}

TEST_CASE("latest_root tracks commits, updates and cancellation") {
    crypto_init();
    RandomSource rng(28);
    auto a = pre::keygen(rng);
    auto b = pre::keygen(rng);

    Chain c;
    CHECK(!c.latest_root(a.pk.digest()));

    c.submit(make_storage_contract(a.sk, filled(1), GroupId::parse("01")), 10);
    auto rp = c.latest_root(a.pk.digest()); // visible while still pending
    REQUIRE(rp);
    CHECK(rp->root_ref == filled(1));
    CHECK(rp->group_id == GroupId::parse("01"));
    CHECK(!c.latest_root(b.pk.digest()));

    c.seal(100);
    c.submit(make_storage_contract(a.sk, filled(2), GroupId::parse("10")), 110);
    rp = c.latest_root(a.pk.digest());
    REQUIRE(rp);
    CHECK(rp->root_ref == filled(2));

    c.submit(make_cancellation(a.sk), 120);
    CHECK(!c.latest_root(a.pk.digest()));
}

TEST_CASE("pending_shares clears when the receiver commits a root") {
    crypto_init();
    RandomSource rng(29);
    auto a = pre::keygen(rng);
    auto b = pre::keygen(rng);

    Chain c;
    c.submit(make_file_send(a.sk, b.pk.digest(), filled(1), filled(2)), 10);
    c.submit(make_file_send(a.sk, b.pk.digest(), filled(3), filled(4)), 20);
    auto shares = c.pending_shares(b.pk.digest());
    REQUIRE(shares.size() == 2);
    CHECK(shares[0].object_ref == filled(1));
    CHECK(shares[1].object_ref == filled(3));
    CHECK(c.pending_shares(a.pk.digest()).empty());

    c.submit(make_storage_contract(b.sk, filled(9), GroupId{}), 30);
    CHECK(c.pending_shares(b.pk.digest()).empty());

    c.seal(100);
    c.submit(make_file_send(a.sk, b.pk.digest(), filled(5), filled(6)), 110);
    shares = c.pending_shares(b.pk.digest());
    REQUIRE(shares.size() == 1);
    CHECK(shares[0].object_ref == filled(5));
}

TEST_CASE("queries match the full-scan oracles on random histories") {
    crypto_init();
    RandomSource seed_rng(30);
    std::mt19937_64 rng(31);

    std::vector<pre::KeyPair> actors;
    for (int i = 0; i < 4; ++i)
        actors.push_back(pre::keygen(seed_rng));

    for (int round = 0; round < 40; ++round) {
        Chain c(1000, 5); // small batch so seals land mid-sequence
        std::vector<Transaction> log;
        uint64_t now = 0;
        size_t len = 4 + rng() % 12;
        for (size_t i = 0; i < len; ++i) {
            now += rng() % 700;
            c.tick(now);
            const auto& actor = actors[rng() % actors.size()];
            Transaction tx;
            switch (rng() % 4) {
            case 0:
                tx = make_cancellation(actor.sk);
                break;
            case 1: {
                auto& to = actors[rng() % actors.size()];
                tx = make_file_send(actor.sk, to.pk.digest(),
                               filled(static_cast<uint8_t>(rng() % 250 + 1)),
                               filled(static_cast<uint8_t>(rng() % 250 + 1)));
                break;
            }
            default:
                tx = make_storage_contract(actor.sk,
                                           filled(static_cast<uint8_t>(rng() % 250 + 1)),
                                           rng() % 2 ? GroupId::parse("01") : GroupId{});
            }
            log.push_back(tx);
            c.submit(std::move(tx), now);
        }
        for (const auto& actor : actors) {
            auto id = actor.pk.digest();
            CHECK(c.latest_root(id) == oracle_latest_root(log, id));
            CHECK(c.pending_shares(id) == oracle_pending_shares(log, id));
        }
    }
}

TEST_CASE("serialization round trips and flattening ignores block boundaries") {
    crypto_init();
    RandomSource rng(32);
    auto a = pre::keygen(rng);
    auto b = pre::keygen(rng);

    std::vector<Transaction> txs;
    for (uint8_t i = 1; i <= 7; ++i) {
        txs.push_back(make_storage_contract(a.sk, filled(i), GroupId::parse("0")));
        txs.push_back(make_file_send(a.sk, b.pk.digest(), filled(i), filled(i)));
    }

    Chain per_tx(1000, 1);  // seals after every transaction
    Chain one_block(1000, 100);
    uint64_t now = 0;
    for (const auto& tx : txs) {
        now += 10;
        per_tx.submit(tx, now);
        one_block.submit(tx, now);
    }
    one_block.seal(now);
    CHECK(per_tx.blocks().size() == txs.size() + 1);
    CHECK(one_block.blocks().size() == 2);
    CHECK(per_tx.flatten_transactions() == one_block.flatten_transactions());

    auto wire = per_tx.serialize();
    auto back = Chain::deserialize(wire);
    CHECK(back.blocks() == per_tx.blocks());
    CHECK(back.serialize() == wire);
    CHECK(back.latest_root(a.pk.digest()) == per_tx.latest_root(a.pk.digest()));

    // a restored chain keeps sequencing correctly
    back.submit(make_cancellation(a.sk), now + 10);
    back.seal(now + 20);
    CHECK(verify_chain(back.serialize()).ok);
    CHECK(!back.latest_root(a.pk.digest()));

    testutil::expect_code(Errc::malformed_record, [&] { Chain::deserialize({}); });
    Bytes cut(wire.begin(), wire.begin() + wire.size() / 2);
    testutil::expect_code(Errc::truncated, [&] { Chain::deserialize(cut); });
}

TEST_CASE("verify_chain accepts every honest prefix") {
    crypto_init();
    RandomSource rng(33);
    auto kp = pre::keygen(rng);

    Chain c(1000, 3);
    CHECK(verify_chain(c.serialize()).ok); // genesis only
    uint64_t now = 0;
    for (uint8_t i = 1; i <= 9; ++i) {
        now += 400;
        c.submit(make_storage_contract(kp.sk, filled(i), GroupId{}), now);
        c.tick(now);
        CHECK(verify_chain(c.serialize()).ok);
    }
    CHECK(!verify_chain({}).ok);
}

TEST_CASE("verify_chain flags any single-byte mutation") {
    crypto_init();
    RandomSource rng(34);
    auto a = pre::keygen(rng);
    auto b = pre::keygen(rng);

    Chain c(1000, 2);
    c.submit(make_storage_contract(a.sk, filled(1), GroupId::parse("01")), 100);
    c.submit(make_file_send(a.sk, b.pk.digest(), filled(2), filled(3)), 150);
    c.submit(make_storage_contract(b.sk, filled(4), GroupId{}), 1200);
    c.seal(1300);
    auto wire = c.serialize();
    REQUIRE(verify_chain(wire).ok);

    size_t missed = 0;
    for (size_t pos = 0; pos < wire.size(); ++pos) {
        for (uint8_t delta : {uint8_t{0x01}, uint8_t{0x80}}) {
            auto mutated = wire;
            mutated[pos] ^= delta;
            if (verify_chain(mutated).ok)
                ++missed;
        }
    }
    CHECK(missed == 0);

    // dropping the tail block also fails (prev link has no successor to check,
    // but the record framing must still parse cleanly)
    Bytes cut(wire.begin(), wire.end() - 1);
    CHECK(!verify_chain(cut).ok);
}
