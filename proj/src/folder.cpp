// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/folder.hpp"

#include "mtfs/error.hpp"

#include <nlohmann/json.hpp>

namespace mtfs::folder {

using ordered = std::map<std::string, nlohmann::json>;

uint64_t folder_total(const Object& f) {
    uint64_t sum = 0;
    for (const auto& [name, e] : f.entries)
        sum += e.size;
    return sum;
}

Object add_entry(Object f, const std::string& name, Entry e) {
    if (f.entries.count(name))
        fail(Errc::duplicate_name, "entry exists: " + name);
    f.entries.emplace(name, std::move(e));
    return f;
}

Object remove_entry(Object f, const std::string& name) {
    if (!f.entries.erase(name))
        fail(Errc::name_not_found, "no entry named " + name);
    return f;
}

Bytes encode(const Object& f) {
    ordered entries;
    for (const auto& [name, e] : f.entries) {
        entries[name] = ordered{
            {"capsule_ref", e.capsule_ref.hex()},
            {"kind", e.kind == Kind::file ? "file" : "folder"},
            {"object_ref", e.object_ref.hex()},
            {"size", e.size},
        };
    }
    ordered top{
        {"entries", std::move(entries)},
        {"total_size", folder_total(f)},
    };
    auto text = nlohmann::json(std::move(top)).dump();
    return Bytes(text.begin(), text.end());
}

Object decode(ByteView bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(Errc::malformed_folder, "folder record is not a json object");
    try {
        Object f;
        const auto& entries = j.at("entries");
        if (!entries.is_object())
            fail(Errc::malformed_folder, "entries must be an object");
        for (const auto& [name, je] : entries.items()) {
            Entry e;
            std::string kind = je.at("kind").get<std::string>();
            if (kind == "file")
                e.kind = Kind::file;
            else if (kind == "folder")
                e.kind = Kind::folder;
            else
                fail(Errc::malformed_folder, "unknown entry kind: " + kind);
            e.object_ref = Digest::from_hex(je.at("object_ref").get<std::string>());
            e.capsule_ref = Digest::from_hex(je.at("capsule_ref").get<std::string>());
            e.size = je.at("size").get<uint64_t>();
            f.entries.emplace(name, std::move(e));
        }
        if (j.at("total_size").get<uint64_t>() != folder_total(f))
            fail(Errc::malformed_folder, "total_size does not match the entries");
        return f;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_folder, std::string("folder record: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::invalid_hex)
            fail(Errc::malformed_folder, "folder record: bad digest");
        throw;
    }
}

Sealed seal(const pre::PublicKey& pk, const Object& f, RandomSource& rng) {
    auto enc = pre::encrypt(pk, encode(f), rng);
    auto chunks = merkle::chunk(enc.ciphertext);
    return {std::move(enc.ciphertext), enc.capsule, std::move(chunks)};
}

Object open(const pre::PrivateKey& sk, const pre::Capsule& capsule, ByteView ciphertext) {
    Bytes plain = capsule.flag == pre::CapsuleFlag::original
                      ? pre::decrypt_own(sk, capsule, ciphertext)
                      : pre::decrypt_shared(sk, capsule, ciphertext);
    return decode(plain);
}

} // namespace mtfs::folder
