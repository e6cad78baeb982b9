// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"
#include "mtfs/merkle.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

namespace mtfs {

// Content-addressed object store. Objects are immutable and keyed by their
// SHA-256; putting an id that is already present is a no-op. A store also
// keeps the paper's suffix links: the manifest of root R is reachable as
// "<R hex>_mt" and its capsule as "<R hex>_capsule".
class ObjectStore {
public:
    virtual ~ObjectStore() = default;

    // Throws ObjectTooLarge above the 1 MiB convention size.
    virtual merkle::ObjectId put(ByteView bytes) = 0;
    // Throws MissingObject.
    virtual Bytes get(const merkle::ObjectId& id) const = 0;
    virtual bool has(const merkle::ObjectId& id) const = 0;
    virtual bool erase(const merkle::ObjectId& id) = 0;

    virtual void link(const merkle::ObjectId& root, const std::string& suffix,
                      const merkle::ObjectId& target) = 0;
    virtual std::optional<merkle::ObjectId> linked(const merkle::ObjectId& root,
                                                   const std::string& suffix) const = 0;

    virtual std::vector<merkle::ObjectId> ids() const = 0;
    virtual size_t count() const = 0;

    std::optional<Bytes> try_get(const merkle::ObjectId& id) const {
        if (!has(id)) return std::nullopt;
        return get(id);
    }
};

class MemoryStore final : public ObjectStore {
public:
    MemoryStore() = default;
    explicit MemoryStore(size_t capacity_objects) : capacity_(capacity_objects) {}

    merkle::ObjectId put(ByteView bytes) override;
    Bytes get(const merkle::ObjectId& id) const override;
    bool has(const merkle::ObjectId& id) const override;
    bool erase(const merkle::ObjectId& id) override;
    void link(const merkle::ObjectId& root, const std::string& suffix,
              const merkle::ObjectId& target) override;
    std::optional<merkle::ObjectId> linked(const merkle::ObjectId& root,
                                           const std::string& suffix) const override;
    std::vector<merkle::ObjectId> ids() const override;
    size_t count() const override;

    bool full() const;

private:
    mutable std::shared_mutex mu_;
    std::unordered_map<Digest, Bytes, DigestHash> objects_;
    std::map<std::pair<std::string, std::string>, Digest> links_; // (root hex, suffix) -> id
    size_t capacity_ = 0; // 0 = unlimited
};

// One file per object under <dir>/objects/<hex id>; links are pointer files
// named <root hex><suffix> holding the target id in hex, so a link can be
// installed before its target object arrives.
class DiskStore final : public ObjectStore {
public:
    explicit DiskStore(const std::filesystem::path& data_dir);

    merkle::ObjectId put(ByteView bytes) override;
    Bytes get(const merkle::ObjectId& id) const override;
    bool has(const merkle::ObjectId& id) const override;
    bool erase(const merkle::ObjectId& id) override;
    void link(const merkle::ObjectId& root, const std::string& suffix,
              const merkle::ObjectId& target) override;
    std::optional<merkle::ObjectId> linked(const merkle::ObjectId& root,
                                           const std::string& suffix) const override;
    std::vector<merkle::ObjectId> ids() const override;
    size_t count() const override;

    const std::filesystem::path& dir() const { return objects_dir_; }

private:
    std::filesystem::path objects_dir_;
    mutable std::mutex io_mu_;
};

} // namespace mtfs
