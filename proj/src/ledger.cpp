// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/ledger.hpp"

#include "mtfs/error.hpp"
#include "mtfs/merkle.hpp"

#include <nlohmann/json.hpp>

namespace mtfs::ledger {

using ordered = std::map<std::string, nlohmann::json>;

namespace {

// Canonical transaction JSON: sorted keys, no whitespace, lowercase hex.
// These bytes are what gets signed (without "signature") and hashed (with it).
ordered tx_fields(const Transaction& tx) {
    ordered j;
    j["actor_pk"] = to_hex(tx.actor_pk.serialize());
    if (const auto* sc = std::get_if<StorageContract>(&tx.body)) {
        j["group_id"] = sc->group_id.str();
        j["kind"] = "storage_contract";
        j["owner"] = sc->owner.hex();
        j["root_ref"] = sc->root_ref.hex();
    } else {
        const auto& fs = std::get<FileSend>(tx.body);
        j["kind"] = "file_send";
        j["object_ref"] = fs.object_ref.hex();
        j["receiver"] = fs.receiver.hex();
        j["reenc_capsule_ref"] = fs.reenc_capsule_ref.hex();
        j["sender"] = fs.sender.hex();
    }
    return j;
}

Bytes dump(ordered j) {
    auto text = nlohmann::json(std::move(j)).dump();
    return Bytes(text.begin(), text.end());
}

Digest digest_field(const nlohmann::json& j, const char* key) {
    return Digest::from_hex(j.at(key).get<std::string>());
}

Transaction tx_from_json(const nlohmann::json& j) {
    Transaction tx;
    auto pk_bytes = from_hex(j.at("actor_pk").get<std::string>());
    tx.actor_pk = pre::PublicKey::deserialize(pk_bytes);
    auto sig = from_hex(j.at("signature").get<std::string>());
    if (sig.size() != pre::kSignatureSize)
        fail(Errc::malformed_record, "signature length");
    std::copy(sig.begin(), sig.end(), tx.signature.begin());
    auto kind = j.at("kind").get<std::string>();
    if (kind == "storage_contract") {
        StorageContract sc;
        sc.group_id = GroupId::parse(j.at("group_id").get<std::string>());
        sc.owner = digest_field(j, "owner");
        sc.root_ref = digest_field(j, "root_ref");
        tx.body = std::move(sc);
    } else if (kind == "file_send") {
        FileSend fs;
        fs.object_ref = digest_field(j, "object_ref");
        fs.receiver = digest_field(j, "receiver");
        fs.reenc_capsule_ref = digest_field(j, "reenc_capsule_ref");
        fs.sender = digest_field(j, "sender");
        tx.body = std::move(fs);
    } else {
        fail(Errc::malformed_record, "unknown transaction kind: " + kind);
    }
    return tx;
}

ordered header_fields(const Block& b) {
    ordered j;
    j["height"] = b.height;
    j["prev_hash"] = b.prev_hash.hex();
    j["timestamp_ms"] = b.timestamp_ms;
    j["tx_root"] = b.tx_root.hex();
    return j;
}

} // namespace

Digest Transaction::actor() const {
    if (const auto* sc = std::get_if<StorageContract>(&body))
        return sc->owner;
    return std::get<FileSend>(body).sender;
}

Bytes Transaction::unsigned_bytes() const { return dump(tx_fields(*this)); }

Bytes Transaction::bytes() const {
    auto j = tx_fields(*this);
    j["signature"] = to_hex(signature);
    return dump(std::move(j));
}

Digest Transaction::hash() const { return sha256(bytes()); }

bool Transaction::verify() const {
    if (actor() != actor_pk.digest())
        return false;
    return pre::verify(actor_pk, unsigned_bytes(), signature);
}

Transaction Transaction::parse(ByteView in) {
    Transaction tx;
    try {
        auto j = nlohmann::json::parse(in.begin(), in.end());
        tx = tx_from_json(j);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(Errc::malformed_record, std::string("transaction: ") + e.what());
    }
    // reject any non-canonical encoding of the same content
    auto canon = tx.bytes();
    if (!std::equal(canon.begin(), canon.end(), in.begin(), in.end()))
        fail(Errc::malformed_record, "transaction bytes not canonical");
    return tx;
}

namespace {

Transaction signed_tx(const pre::PrivateKey& sk, std::variant<StorageContract, FileSend> body) {
    Transaction tx;
    tx.body = std::move(body);
    tx.actor_pk = sk.public_key();
    tx.signature = pre::sign(sk, tx.unsigned_bytes());
    return tx;
}

} // namespace

Transaction make_storage_contract(const pre::PrivateKey& sk, const Digest& root_ref,
                                  const GroupId& group_id) {
    StorageContract sc{sk.public_key().digest(), root_ref, group_id};
    return signed_tx(sk, std::move(sc));
}

Transaction make_cancellation(const pre::PrivateKey& sk) {
    // all-zero root_ref withdraws the root pointer
    return make_storage_contract(sk, Digest{}, GroupId{});
}

Transaction make_file_send(const pre::PrivateKey& sk, const Digest& receiver,
                           const Digest& object_ref, const Digest& reenc_capsule_ref) {
    FileSend fs{sk.public_key().digest(), receiver, object_ref, reenc_capsule_ref};
    return signed_tx(sk, std::move(fs));
}

Digest Block::compute_header_hash() const { return sha256(dump(header_fields(*this))); }

Digest Block::compute_tx_root(const std::vector<Transaction>& txs) {
    if (txs.empty())
        return Digest{};
    std::vector<merkle::ObjectId> hashes;
    hashes.reserve(txs.size());
    for (const auto& tx : txs)
        hashes.push_back(tx.hash());
    return merkle::build_root(hashes);
}

Bytes Block::bytes() const {
    std::vector<nlohmann::json> txs;
    txs.reserve(transactions.size());
    for (const auto& tx : transactions) {
        auto j = tx_fields(tx);
        j["signature"] = to_hex(tx.signature);
        txs.emplace_back(std::move(j));
    }
    ordered j = header_fields(*this);
    j["header_hash"] = header_hash.hex();
    j["transactions"] = std::move(txs);
    return dump(std::move(j));
}

Block Block::parse(ByteView in) {
    Block b;
    try {
        auto j = nlohmann::json::parse(in.begin(), in.end());
        b.height = j.at("height").get<uint64_t>();
        b.prev_hash = digest_field(j, "prev_hash");
        b.tx_root = digest_field(j, "tx_root");
        b.timestamp_ms = j.at("timestamp_ms").get<uint64_t>();
        b.header_hash = digest_field(j, "header_hash");
        for (const auto& tj : j.at("transactions"))
            b.transactions.push_back(tx_from_json(tj));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(Errc::malformed_record, std::string("block: ") + e.what());
    }
    auto canon = b.bytes();
    if (!std::equal(canon.begin(), canon.end(), in.begin(), in.end()))
        fail(Errc::malformed_record, "block bytes not canonical");
    return b;
}

Chain::Chain(uint64_t seal_period_ms, size_t seal_batch)
    : seal_period_ms_(seal_period_ms), seal_batch_(seal_batch ? seal_batch : 1) {
    Block genesis;
    genesis.header_hash = genesis.compute_header_hash();
    blocks_.push_back(std::move(genesis));
}

Receipt Chain::submit(Transaction tx, uint64_t now_ms) {
    if (!tx.verify())
        fail(Errc::bad_signature, "transaction rejected");
    // single sealer: the future slot is known the moment the tx is accepted
    Receipt at{next_height(), static_cast<uint32_t>(pending_.size())};
    pending_.push_back(Slot{std::move(tx), at});
    if (pending_.size() >= seal_batch_)
        seal(now_ms);
    return at;
}

bool Chain::tick(uint64_t now_ms) {
    if (pending_.empty() || now_ms < last_seal_ms_ + seal_period_ms_)
        return false;
    return seal(now_ms);
}

bool Chain::seal(uint64_t now_ms) {
    if (pending_.empty())
        return false;
    Block b;
    b.height = blocks_.size();
    b.prev_hash = blocks_.back().header_hash;
    b.timestamp_ms = now_ms;
    b.transactions.reserve(pending_.size());
    for (auto& slot : pending_)
        b.transactions.push_back(std::move(slot.tx));
    b.tx_root = Block::compute_tx_root(b.transactions);
    b.header_hash = b.compute_header_hash();
    blocks_.push_back(std::move(b));
    pending_.clear();
    last_seal_ms_ = now_ms;
    return true;
}

void Chain::scan(const std::function<void(const Transaction&, Receipt)>& fn) const {
    for (const auto& b : blocks_)
        for (uint32_t i = 0; i < b.transactions.size(); ++i)
            fn(b.transactions[i], Receipt{b.height, i});
    for (const auto& slot : pending_)
        fn(slot.tx, slot.at);
}

std::optional<folder::RootPointer> Chain::latest_root(const Digest& owner) const {
    std::optional<StorageContract> last;
    scan([&](const Transaction& tx, Receipt) {
        if (const auto* sc = std::get_if<StorageContract>(&tx.body))
            if (sc->owner == owner)
                last = *sc;
    });
    if (!last || last->root_ref.is_zero())
        return std::nullopt;
    return folder::RootPointer{last->owner, last->root_ref, last->group_id};
}

std::vector<FileSend> Chain::pending_shares(const Digest& receiver) const {
    // A share stays pending until the receiver commits any later root update;
    // that commit is what records the accepted object in their namespace.
    std::optional<Receipt> accepted_up_to;
    std::vector<std::pair<Receipt, FileSend>> sends;
    scan([&](const Transaction& tx, Receipt at) {
        if (const auto* sc = std::get_if<StorageContract>(&tx.body)) {
            if (sc->owner == receiver)
                accepted_up_to = at;
        } else if (const auto& fs = std::get<FileSend>(tx.body); fs.receiver == receiver) {
            sends.emplace_back(at, fs);
        }
    });
    std::vector<FileSend> out;
    for (auto& [at, fs] : sends)
        if (!accepted_up_to || at > *accepted_up_to)
            out.push_back(std::move(fs));
    return out;
}

namespace {

void put_record(Bytes& out, const Bytes& rec) {
    uint32_t n = static_cast<uint32_t>(rec.size());
    out.push_back(static_cast<uint8_t>(n >> 24));
    out.push_back(static_cast<uint8_t>(n >> 16));
    out.push_back(static_cast<uint8_t>(n >> 8));
    out.push_back(static_cast<uint8_t>(n));
    out.insert(out.end(), rec.begin(), rec.end());
}

// Returns false when the buffer is exhausted; throws Truncated on a cut record.
bool next_record(ByteView in, size_t& off, ByteView& rec) {
    if (off == in.size())
        return false;
    if (in.size() - off < 4)
        fail(Errc::truncated, "record header");
    size_t n = (size_t{in[off]} << 24) | (size_t{in[off + 1]} << 16) |
               (size_t{in[off + 2]} << 8) | size_t{in[off + 3]};
    off += 4;
    if (n > in.size() - off)
        fail(Errc::truncated, "record body");
    rec = in.subspan(off, n);
    off += n;
    return true;
}

} // namespace

Bytes Chain::flatten_transactions() const {
    Bytes out;
    scan([&](const Transaction& tx, Receipt) { put_record(out, tx.bytes()); });
    return out;
}

Bytes Chain::serialize() const {
    Bytes out;
    for (const auto& b : blocks_)
        put_record(out, b.bytes());
    return out;
}

Chain Chain::deserialize(ByteView in, uint64_t seal_period_ms, size_t seal_batch) {
    Chain c(seal_period_ms, seal_batch);
    c.blocks_.clear();
    size_t off = 0;
    ByteView rec;
    while (next_record(in, off, rec))
        c.blocks_.push_back(Block::parse(rec));
    if (c.blocks_.empty())
        fail(Errc::malformed_record, "chain has no genesis");
    c.last_seal_ms_ = c.blocks_.back().timestamp_ms;
    return c;
}

VerifyResult verify_chain(ByteView serialized) {
    uint64_t height = 0;
    Digest prev{}; // genesis links to the zero digest
    size_t off = 0;
    ByteView rec;
    for (;;) {
        bool more = false;
        Block b;
        try {
            more = next_record(serialized, off, rec);
            if (more)
                b = Block::parse(rec);
        } catch (const std::exception& e) {
            return {false, height, e.what()};
        }
        if (!more)
            break;
        if (b.height != height)
            return {false, height, "height out of sequence"};
        if (b.prev_hash != prev)
            return {false, height, "previous hash mismatch"};
        if (b.header_hash != b.compute_header_hash())
            return {false, height, "header hash mismatch"};
        if (b.tx_root != Block::compute_tx_root(b.transactions))
            return {false, height, "transaction root mismatch"};
        for (const auto& tx : b.transactions)
            if (!tx.verify())
                return {false, height, "bad transaction signature"};
        prev = b.header_hash;
        ++height;
    }
    if (height == 0)
        return {false, 0, "chain has no genesis"};
    return {true, 0, ""};
}

} // namespace mtfs::ledger
