// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/client.hpp"
#include "mtfs/folder.hpp"
#include "mtfs/ledger.hpp"
#include "mtfs/replication.hpp"
#include "mtfs/routing.hpp"

#include <optional>

namespace mtfs::workflows {

// End-to-end user flows: put, get, list, share, accept. A session composes
// the client's keys with a network exchange; all cross-node effects travel
// as messages, so the same code runs over the simulator and over TCP.

struct SessionConfig {
    pre::KeyPair keys;
    wire::NodeInfo entry;  // overlay member answering snapshots and reads
    wire::NodeInfo ledger; // sealer node taking transactions and queries
    size_t replicas = 3;
    // deterministic sessions (simulation, tests) pass a seed; nullopt draws
    // capsule randomness from the OS
    std::optional<uint64_t> rng_seed;
};

class Session {
public:
    Session(client::Exchange& ex, SessionConfig cfg);

    Digest owner() const { return cfg_.keys.pk.digest(); }

    // Encrypt, chunk, place every object on its group path, re-seal the
    // folder chain, and commit the new root. Returns the contract receipt.
    ledger::Receipt put_file(const std::string& path, ByteView content);

    // Walk the folder chain from the committed root and decrypt.
    Bytes get_file(const std::string& path);

    // Entries of the folder at `path` ("" or "/" is the root).
    folder::Object list(const std::string& path);

    // Re-target the file's capsule toward `receiver` and commit a FileSend.
    // The stored ciphertext is never touched.
    ledger::Receipt share_file(const pre::PublicKey& receiver, const std::string& path);

    // Adopt a share addressed to this session under `name` in the root
    // folder. References the sender's objects; copies nothing.
    ledger::Receipt accept_share(const ledger::FileSend& send, const std::string& name);

    // Shares addressed to this session and not yet folded into a committed
    // root (ledger-ordered).
    std::vector<ledger::FileSend> pending_shares();

    // This session's committed root pointer, if any.
    std::optional<folder::RootPointer> latest_root();

private:
    struct Placement {
        Digest root;
        Digest capsule_id;
        GroupId group_id; // outermost position on the root's group path
        uint64_t ciphertext_size = 0;
    };

    // membership snapshot via the entry node; refreshed per workflow call
    void refresh_members();
    std::vector<wire::NodeInfo> path_of(const Digest& key) const;

    // Push one object to `want` holders drawn deepest-first from the group
    // path of `placement_key`, stepping shallower past full or silent nodes.
    std::vector<wire::NodeInfo> place_object(const Digest& placement_key, const Digest& id,
                                             ByteView bytes,
                                             const std::vector<app::LinkSpec>& links);

    // Store one encrypted blob: leaves on their own paths, manifest and
    // capsule on the root's path under "_mt" / "_capsule" links.
    Placement place_content(const Bytes& ciphertext, const pre::Capsule& capsule);

    Bytes fetch_content(const Digest& root);
    std::optional<Bytes> fetch_object(const Digest& root, const std::string& link,
                                      const Digest& expect);
    pre::Capsule fetch_capsule(const Digest& content_root, const Digest& capsule_ref);
    uint64_t content_size(const Digest& root);

    folder::Object open_folder(const Digest& root_ref, const Digest& capsule_ref);

    // folder chain from the root down to the folder at `dirs`; missing tail
    // folders are created empty when `create` is set
    struct Level {
        std::string name; // entry name in the parent; empty for the root
        folder::Object obj;
    };
    std::vector<Level> load_chain(const std::vector<std::string>& dirs, bool create);

    // re-seal the chain bottom-up, place every folder object, commit the root
    ledger::Receipt commit_chain(std::vector<Level> chain);

    ledger::Receipt submit(const ledger::Transaction& tx);
    Bytes ledger_query(app::LedgerQueryKind kind, const Digest& who);

    client::Exchange& ex_;
    SessionConfig cfg_;
    RandomSource rng_;
    std::map<Digest, wire::NodeInfo> members_;
};

// "a/b/c" -> {"a","b","c"}; validates non-empty names, rejects "."/"..".
std::vector<std::string> split_path(const std::string& path);

} // namespace mtfs::workflows
