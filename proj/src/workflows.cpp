// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/workflows.hpp"

#include "mtfs/error.hpp"
#include "mtfs/node.hpp"

#include <algorithm>

namespace mtfs::workflows {

namespace {

// request/response helper; wrong payload kind counts as no answer
template <typename T>
std::optional<T> ask(client::Exchange& ex, const wire::NodeInfo& to, app::AppMsg req) {
    auto resp = ex.request(to, std::move(req));
    if (!resp)
        return std::nullopt;
    if (auto* r = std::get_if<T>(&*resp))
        return std::move(*r);
    return std::nullopt;
}

} // namespace

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty())
            return;
        if (cur == "." || cur == "..")
            fail(Errc::usage_error, "path steps like '" + cur + "' are not supported");
        out.push_back(std::move(cur));
        cur.clear();
    };
    for (char c : path) {
        if (c == '/')
            flush();
        else
            cur.push_back(c);
    }
    flush();
    return out;
}

Session::Session(client::Exchange& ex, SessionConfig cfg)
    : ex_(ex), cfg_(std::move(cfg)),
      rng_(cfg_.rng_seed ? RandomSource(*cfg_.rng_seed, "mtfs.session." + owner().hex())
                         : RandomSource()) {}

void Session::refresh_members() {
    auto resp = ask<app::SnapshotResp>(ex_, cfg_.entry, app::SnapshotReq{});
    if (!resp)
        fail(Errc::unreachable_node, "entry node did not answer a snapshot request");
    members_.clear();
    for (const auto& n : resp->members)
        members_[n.node_id] = n;
}

std::vector<wire::NodeInfo> Session::path_of(const Digest& key) const {
    return routing::group_path(members_, routing::digest_bits(key));
}

std::vector<wire::NodeInfo> Session::place_object(const Digest& placement_key, const Digest& id,
                                                  ByteView bytes,
                                                  const std::vector<app::LinkSpec>& links) {
    auto path = path_of(placement_key);
    if (path.empty())
        fail(Errc::unreachable_node, "no members to place " + id.hex());
    // deepest first, then shallower on refusal
    auto candidates = replication::select_holders(path, path.size());
    size_t want = std::min(cfg_.replicas, candidates.size());
    std::vector<wire::NodeInfo> plan(candidates.begin(),
                                     candidates.begin() + static_cast<long>(want));

    auto push_to = [&](const wire::NodeInfo& to, const std::vector<wire::NodeInfo>& holders) {
        app::PushObject push;
        push.object_id = id;
        push.bytes.assign(bytes.begin(), bytes.end());
        push.links = links;
        push.holders = holders;
        auto ack = ask<app::PushAck>(ex_, to, std::move(push));
        return ack && ack->stored;
    };

    std::vector<wire::NodeInfo> chosen;
    for (const auto& cand : candidates) {
        if (chosen.size() == want)
            break;
        if (push_to(cand, plan))
            chosen.push_back(cand);
    }
    if (chosen.empty())
        fail(Errc::unreachable_node, "no holder accepted " + id.hex());
    if (chosen != plan) {
        // stragglers recorded the optimistic holder list; refresh it
        for (const auto& c : chosen)
            push_to(c, chosen);
    }
    return chosen;
}

Session::Placement Session::place_content(const Bytes& ciphertext,
                                          const pre::Capsule& capsule) {
    auto chunks = merkle::chunk(ciphertext);
    Bytes capsule_bytes = capsule.serialize();
    Digest capsule_id = sha256(capsule_bytes);

    if (!chunks.manifest) {
        // single object: the ciphertext itself lives under the root id
        place_object(chunks.root, chunks.root, chunks.leaves.front().bytes,
                     {{chunks.root, "_capsule", capsule_id}});
    } else {
        for (const auto& leaf : chunks.leaves)
            place_object(leaf.id, leaf.id, leaf.bytes, {});
        Bytes mt = merkle::encode_manifest(*chunks.manifest);
        Digest mt_id = sha256(mt);
        place_object(chunks.root, mt_id, mt, {{chunks.root, "_mt", mt_id}});
    }
    place_object(chunks.root, capsule_id, capsule_bytes,
                 {{chunks.root, "_capsule", capsule_id}});

    Placement p;
    p.root = chunks.root;
    p.capsule_id = capsule_id;
    p.group_id = path_of(chunks.root).back().group_id;
    p.ciphertext_size = ciphertext.size();
    return p;
}

std::optional<Bytes> Session::fetch_object(const Digest& root, const std::string& link,
                                           const Digest& expect) {
    auto path = path_of(root);
    auto candidates = replication::select_holders(path, path.size());
    for (const auto& cand : candidates) {
        app::GetObject q;
        q.object_id = root;
        q.link = link;
        auto resp = ask<app::ObjectResp>(ex_, cand, std::move(q));
        if (!resp || !resp->found)
            continue;
        if (!expect.is_zero() && resp->object_id != expect)
            continue; // a link by that name exists but points elsewhere
        if (sha256(resp->bytes) != resp->object_id)
            continue; // damaged replica; try the next holder
        return std::move(resp->bytes);
    }
    return std::nullopt;
}

Bytes Session::fetch_content(const Digest& root) {
    if (auto direct = fetch_object(root, "", root))
        return std::move(*direct);
    auto mt = fetch_object(root, "_mt", Digest{});
    if (!mt)
        fail(Errc::not_found, "content " + root.hex() + " is not retrievable");
    auto manifest = merkle::decode_manifest(*mt);
    if (manifest.root != root)
        fail(Errc::integrity_failure, "manifest does not belong to " + root.hex());
    return merkle::reassemble(root, manifest, [&](const Digest& leaf) {
        return fetch_object(leaf, "", leaf);
    });
}

pre::Capsule Session::fetch_capsule(const Digest& content_root, const Digest& capsule_ref) {
    // own content: the capsule sits with the content under a suffix link
    if (auto viaLink = fetch_object(content_root, "_capsule", capsule_ref))
        return pre::Capsule::deserialize(*viaLink);
    // shared content: the re-encrypted capsule is its own object on its own path
    if (!capsule_ref.is_zero())
        if (auto direct = fetch_object(capsule_ref, "", capsule_ref))
            return pre::Capsule::deserialize(*direct);
    fail(Errc::not_found, "no capsule for " + content_root.hex());
}

uint64_t Session::content_size(const Digest& root) {
    if (auto direct = fetch_object(root, "", root))
        return direct->size();
    if (auto mt = fetch_object(root, "_mt", Digest{})) {
        auto manifest = merkle::decode_manifest(*mt);
        if (manifest.root != root)
            fail(Errc::integrity_failure, "manifest does not belong to " + root.hex());
        return manifest.total_size;
    }
    fail(Errc::not_found, "content " + root.hex() + " is not retrievable");
}

folder::Object Session::open_folder(const Digest& root_ref, const Digest& capsule_ref) {
    auto ciphertext = fetch_content(root_ref);
    auto capsule = fetch_capsule(root_ref, capsule_ref);
    return folder::open(cfg_.keys.sk, capsule, ciphertext);
}

std::vector<Session::Level> Session::load_chain(const std::vector<std::string>& dirs,
                                                bool create) {
    std::vector<Level> chain;
    auto rp = latest_root();
    chain.push_back({"", rp ? open_folder(rp->root_ref, Digest{}) : folder::Object{}});
    for (const auto& d : dirs) {
        const auto& entries = chain.back().obj.entries;
        auto it = entries.find(d);
        if (it == entries.end()) {
            if (!create)
                fail(Errc::not_found, "no folder named " + d);
            chain.push_back({d, folder::Object{}});
            continue;
        }
        if (it->second.kind != folder::Kind::folder)
            fail(Errc::not_found, d + " is a file, not a folder");
        chain.push_back({d, open_folder(it->second.object_ref, it->second.capsule_ref)});
    }
    return chain;
}

ledger::Receipt Session::commit_chain(std::vector<Level> chain) {
    // seal bottom-up; each sealed child becomes an entry in its parent
    for (size_t i = chain.size(); i-- > 1;) {
        auto sealed = folder::seal(cfg_.keys.pk, chain[i].obj, rng_);
        auto placed = place_content(sealed.ciphertext, sealed.capsule);

        folder::Entry e;
        e.kind = folder::Kind::folder;
        e.object_ref = placed.root;
        e.size = folder::folder_total(chain[i].obj);
        e.capsule_ref = placed.capsule_id;

        auto& parent = chain[i - 1].obj;
        if (parent.entries.count(chain[i].name))
            parent = folder::remove_entry(std::move(parent), chain[i].name);
        parent = folder::add_entry(std::move(parent), chain[i].name, e);
    }
    auto sealed = folder::seal(cfg_.keys.pk, chain.front().obj, rng_);
    auto placed = place_content(sealed.ciphertext, sealed.capsule);
    return submit(ledger::make_storage_contract(cfg_.keys.sk, placed.root, placed.group_id));
}

ledger::Receipt Session::submit(const ledger::Transaction& tx) {
    app::TxSubmit s;
    s.tx = tx.bytes();
    auto resp = ask<app::TxReceipt>(ex_, cfg_.ledger, std::move(s));
    if (!resp)
        fail(Errc::ledger_down, "ledger node did not answer");
    if (!resp->ok)
        fail(Errc::ledger_down, "transaction rejected: " + resp->error);
    return ledger::Receipt{resp->receipt.height, resp->receipt.index};
}

Bytes Session::ledger_query(app::LedgerQueryKind kind, const Digest& who) {
    app::LedgerQuery q;
    q.kind = kind;
    q.who = who;
    auto resp = ask<app::LedgerResp>(ex_, cfg_.ledger, std::move(q));
    if (!resp)
        fail(Errc::ledger_down, "ledger node did not answer");
    if (!resp->ok)
        fail(Errc::ledger_down, "ledger query failed: " + resp->error);
    return std::move(resp->data);
}

std::optional<folder::RootPointer> Session::latest_root() {
    return node::decode_root_pointer(ledger_query(app::LedgerQueryKind::latest_root, owner()));
}

std::vector<ledger::FileSend> Session::pending_shares() {
    return node::decode_file_sends(ledger_query(app::LedgerQueryKind::pending_shares, owner()));
}

ledger::Receipt Session::put_file(const std::string& path, ByteView content) {
    auto comps = split_path(path);
    if (comps.empty())
        fail(Errc::usage_error, "put needs a file name");
    std::string name = comps.back();
    comps.pop_back();

    refresh_members();
    auto chain = load_chain(comps, true);
    if (chain.back().obj.entries.count(name))
        fail(Errc::duplicate_name, name + " already exists at that path");

    auto enc = pre::encrypt(cfg_.keys.pk, content, rng_);
    auto placed = place_content(enc.ciphertext, enc.capsule);

    folder::Entry e;
    e.kind = folder::Kind::file;
    e.object_ref = placed.root;
    e.size = content.size();
    e.capsule_ref = placed.capsule_id;
    chain.back().obj = folder::add_entry(std::move(chain.back().obj), name, e);

    return commit_chain(std::move(chain));
}

Bytes Session::get_file(const std::string& path) {
    auto comps = split_path(path);
    if (comps.empty())
        fail(Errc::usage_error, "get needs a file name");
    std::string name = comps.back();
    comps.pop_back();

    refresh_members();
    auto chain = load_chain(comps, false);
    const auto& entries = chain.back().obj.entries;
    auto it = entries.find(name);
    if (it == entries.end())
        fail(Errc::not_found, "no file named " + name);
    if (it->second.kind != folder::Kind::file)
        fail(Errc::not_found, name + " is a folder, not a file");

    auto ciphertext = fetch_content(it->second.object_ref);
    auto capsule = fetch_capsule(it->second.object_ref, it->second.capsule_ref);
    if (capsule.flag == pre::CapsuleFlag::original)
        return pre::decrypt_own(cfg_.keys.sk, capsule, ciphertext);
    return pre::decrypt_shared(cfg_.keys.sk, capsule, ciphertext);
}

folder::Object Session::list(const std::string& path) {
    refresh_members();
    return load_chain(split_path(path), false).back().obj;
}

ledger::Receipt Session::share_file(const pre::PublicKey& receiver, const std::string& path) {
    auto comps = split_path(path);
    if (comps.empty())
        fail(Errc::usage_error, "share needs a file name");
    std::string name = comps.back();
    comps.pop_back();

    refresh_members();
    auto chain = load_chain(comps, false);
    const auto& entries = chain.back().obj.entries;
    auto it = entries.find(name);
    if (it == entries.end() || it->second.kind != folder::Kind::file)
        fail(Errc::not_found, "no file named " + name);

    auto capsule = fetch_capsule(it->second.object_ref, it->second.capsule_ref);
    auto rk = pre::rekey(cfg_.keys.sk, receiver, rng_);
    auto handed = pre::reencrypt(rk, capsule);

    Bytes handed_bytes = handed.serialize();
    Digest handed_id = sha256(handed_bytes);
    place_object(handed_id, handed_id, handed_bytes, {});

    return submit(ledger::make_file_send(cfg_.keys.sk, receiver.digest(),
                                         it->second.object_ref, handed_id));
}

ledger::Receipt Session::accept_share(const ledger::FileSend& send, const std::string& name) {
    if (send.receiver != owner())
        fail(Errc::not_addressee, "that share is addressed to someone else");
    auto comps = split_path(name);
    if (comps.size() != 1)
        fail(Errc::usage_error, "accept takes a plain name for the root folder");

    refresh_members();
    auto chain = load_chain({}, false);
    if (chain.back().obj.entries.count(comps.front()))
        fail(Errc::duplicate_name, comps.front() + " already exists");

    uint64_t ct_size = content_size(send.object_ref);
    if (ct_size < pre::kCipherOverhead)
        fail(Errc::integrity_failure, "shared object is too small to be a ciphertext");

    folder::Entry e;
    e.kind = folder::Kind::file;
    e.object_ref = send.object_ref;
    e.size = ct_size - pre::kCipherOverhead;
    e.capsule_ref = send.reenc_capsule_ref;
    chain.back().obj = folder::add_entry(std::move(chain.back().obj), comps.front(), e);

    return commit_chain(std::move(chain));
}

} // namespace mtfs::workflows
