// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/folder.hpp"
#include "mtfs/group_id.hpp"
#include "mtfs/pre.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace mtfs::ledger {

// Single-sequencer hash chain: one designated sealer orders transactions into
// blocks. There is no consensus, no fork choice; the chain is the system's
// source of truth for root pointers and pending shares.

// Commits an owner's current root folder hash and its storage position. An
// all-zero root_ref cancels the subscription.
struct StorageContract {
    Digest owner; // public key digest
    Digest root_ref;
    GroupId group_id;

    bool operator==(const StorageContract&) const = default;
};

// Grants a receiver access to one object through a re-encrypted capsule.
struct FileSend {
    Digest sender;
    Digest receiver;
    Digest object_ref;
    Digest reenc_capsule_ref;

    bool operator==(const FileSend&) const = default;
};

struct Transaction {
    std::variant<StorageContract, FileSend> body;
    pre::PublicKey actor_pk; // the signing party's key, carried inline
    std::array<uint8_t, pre::kSignatureSize> signature{};

    bool operator==(const Transaction&) const = default;

    Digest actor() const; // owner or sender
    Bytes unsigned_bytes() const;
    Bytes bytes() const;      // canonical JSON including the signature
    Digest hash() const;      // sha256(bytes())
    bool verify() const;      // signature and pk-digest consistency
    static Transaction parse(ByteView); // MalformedRecord
};

Transaction make_storage_contract(const pre::PrivateKey& sk, const Digest& root_ref,
                                  const GroupId& group_id);
Transaction make_cancellation(const pre::PrivateKey& sk);
Transaction make_file_send(const pre::PrivateKey& sk, const Digest& receiver,
                           const Digest& object_ref, const Digest& reenc_capsule_ref);

struct Block {
    uint64_t height = 0;
    Digest prev_hash;  // hash of the previous block header; zero for genesis
    Digest tx_root;    // Merkle root over transaction hashes; zero when empty
    uint64_t timestamp_ms = 0;
    Digest header_hash; // hash of this block's own header, pinned inside the record
    std::vector<Transaction> transactions;

    bool operator==(const Block&) const = default;

    Digest compute_header_hash() const;
    static Digest compute_tx_root(const std::vector<Transaction>& txs);
    Bytes bytes() const;
    static Block parse(ByteView);
};

struct Receipt {
    uint64_t height = 0;
    uint32_t index = 0;
    auto operator<=>(const Receipt&) const = default;
};

struct VerifyResult {
    bool ok = true;
    uint64_t first_bad_height = 0;
    std::string reason;
};

class Chain {
public:
    // default sealing policy: every second or every 16 transactions
    explicit Chain(uint64_t seal_period_ms = 1000, size_t seal_batch = 16);

    // Verifies the signature and assigns the slot the transaction will hold
    // once sealed. Throws BadSignature.
    Receipt submit(Transaction tx, uint64_t now_ms);

    // Seals pending transactions if the policy says so (or force). Returns
    // true when a block was produced.
    bool tick(uint64_t now_ms);
    bool seal(uint64_t now_ms);

    // Queries see sealed blocks plus the pending batch: a submitted
    // transaction is immediately visible at its assigned slot.
    std::optional<folder::RootPointer> latest_root(const Digest& owner) const;
    std::vector<FileSend> pending_shares(const Digest& receiver) const;

    const std::vector<Block>& blocks() const { return blocks_; }
    uint64_t next_height() const { return blocks_.size(); }
    size_t pending_count() const { return pending_.size(); }

    // Byte-stable digest of every transaction in order; block boundaries and
    // timestamps excluded. Two deployments that processed the same
    // transactions agree on this.
    Bytes flatten_transactions() const;

    Bytes serialize() const; // length-prefixed block records
    static Chain deserialize(ByteView, uint64_t seal_period_ms = 1000, size_t seal_batch = 16);

private:
    struct Slot {
        Transaction tx;
        Receipt at;
    };
    void scan(const std::function<void(const Transaction&, Receipt)>& fn) const;

    uint64_t seal_period_ms_;
    size_t seal_batch_;
    uint64_t last_seal_ms_ = 0;
    std::vector<Block> blocks_; // genesis at index 0
    std::vector<Slot> pending_;
};

// Full structural + signature verification of a serialized chain.
VerifyResult verify_chain(ByteView serialized);

} // namespace mtfs::ledger
