// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/group_id.hpp"
#include "mtfs/merkle.hpp"
#include "mtfs/pre.hpp"

#include <map>
#include <string>

namespace mtfs::folder {

// Owner-maintained directory records. The object layer is name-free; names
// and sizes live only here. Folder bytes are encrypted and chunked exactly
// like file bytes, so a folder is just another stored object tree.

enum class Kind : uint8_t { file, folder };

struct Entry {
    Kind kind = Kind::file;
    Digest object_ref;  // content hash, or Merkle root when the data spans objects
    uint64_t size = 0;  // file: plaintext bytes; folder: subtree total
    Digest capsule_ref; // where the capsule for this object lives

    bool operator==(const Entry&) const = default;
};

struct Object {
    std::map<std::string, Entry> entries; // name-keyed; map order = canonical order

    bool operator==(const Object&) const = default;
};

// Latest committed root folder location for one owner.
struct RootPointer {
    Digest owner; // public key digest
    Digest root_ref;
    GroupId group_id; // where the root folder object was placed

    bool operator==(const RootPointer&) const = default;
};

// total_size as serialized: entry sizes already carry subtree totals
uint64_t folder_total(const Object& f);

Object add_entry(Object f, const std::string& name, Entry e); // DuplicateName
Object remove_entry(Object f, const std::string& name);       // NameNotFound

// Canonical JSON; two equal folders always produce identical bytes, so
// identical folders hash identically.
Bytes encode(const Object& f);
Object decode(ByteView bytes); // MalformedFolder

struct Sealed {
    Bytes ciphertext;
    pre::Capsule capsule;
    merkle::ChunkingResult chunks; // of the ciphertext
};

Sealed seal(const pre::PublicKey& pk, const Object& f, RandomSource& rng);

// Opens with whichever decryption path the capsule calls for (owner or
// shared); WrongKey if the key does not fit.
Object open(const pre::PrivateKey& sk, const pre::Capsule& capsule, ByteView ciphertext);

} // namespace mtfs::folder
