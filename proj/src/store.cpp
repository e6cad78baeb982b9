// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/store.hpp"
#include "mtfs/error.hpp"

#include <fstream>
#include <system_error>

namespace mtfs {

namespace fs = std::filesystem;

static void check_size(size_t n) {
    if (n > merkle::kMaxObjectSize)
        fail(Errc::object_too_large,
             std::to_string(n) + " bytes exceeds the " +
                 std::to_string(merkle::kMaxObjectSize) + "-byte object convention");
}

merkle::ObjectId MemoryStore::put(ByteView bytes) {
    check_size(bytes.size());
    Digest id = sha256(bytes);
    std::unique_lock lk(mu_);
    if (capacity_ != 0 && objects_.size() >= capacity_ && !objects_.count(id))
        fail(Errc::store_full, "store capacity reached");
    objects_.try_emplace(id, Bytes(bytes.begin(), bytes.end()));
    return id;
}

Bytes MemoryStore::get(const merkle::ObjectId& id) const {
    std::shared_lock lk(mu_);
    auto it = objects_.find(id);
    if (it == objects_.end())
        fail(Errc::missing_object, id.hex());
    return it->second;
}

bool MemoryStore::has(const merkle::ObjectId& id) const {
    std::shared_lock lk(mu_);
    return objects_.count(id) != 0;
}

bool MemoryStore::erase(const merkle::ObjectId& id) {
    std::unique_lock lk(mu_);
    return objects_.erase(id) != 0;
}

void MemoryStore::link(const merkle::ObjectId& root, const std::string& suffix,
                       const merkle::ObjectId& target) {
    std::unique_lock lk(mu_);
    links_[{root.hex(), suffix}] = target;
}

std::optional<merkle::ObjectId> MemoryStore::linked(const merkle::ObjectId& root,
                                                    const std::string& suffix) const {
    std::shared_lock lk(mu_);
    auto it = links_.find({root.hex(), suffix});
    if (it == links_.end()) return std::nullopt;
    return it->second;
}

std::vector<merkle::ObjectId> MemoryStore::ids() const {
    std::shared_lock lk(mu_);
    std::vector<Digest> out;
    out.reserve(objects_.size());
    for (const auto& [id, _] : objects_)
        out.push_back(id);
    return out;
}

size_t MemoryStore::count() const {
    std::shared_lock lk(mu_);
    return objects_.size();
}

bool MemoryStore::full() const {
    std::shared_lock lk(mu_);
    return capacity_ != 0 && objects_.size() >= capacity_;
}

DiskStore::DiskStore(const fs::path& data_dir) : objects_dir_(data_dir / "objects") {
    fs::create_directories(objects_dir_);
}

merkle::ObjectId DiskStore::put(ByteView bytes) {
    check_size(bytes.size());
    Digest id = sha256(bytes);
    std::lock_guard lk(io_mu_);
    fs::path final_path = objects_dir_ / id.hex();
    if (fs::exists(final_path))
        return id;
    fs::path tmp = objects_dir_ / (id.hex() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out)
            fail(Errc::internal, "write failed: " + tmp.string());
    }
    fs::rename(tmp, final_path);
    return id;
}

Bytes DiskStore::get(const merkle::ObjectId& id) const {
    fs::path p = objects_dir_ / id.hex();
    std::ifstream in(p, std::ios::binary);
    if (!in)
        fail(Errc::missing_object, id.hex());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

bool DiskStore::has(const merkle::ObjectId& id) const {
    return fs::exists(objects_dir_ / id.hex());
}

bool DiskStore::erase(const merkle::ObjectId& id) {
    std::lock_guard lk(io_mu_);
    std::error_code ec;
    return fs::remove(objects_dir_ / id.hex(), ec);
}

void DiskStore::link(const merkle::ObjectId& root, const std::string& suffix,
                     const merkle::ObjectId& target) {
    // pointer file: 64 hex chars naming the target; the target object may
    // arrive later (replication pushes objects one at a time)
    std::lock_guard lk(io_mu_);
    fs::path link_path = objects_dir_ / (root.hex() + suffix);
    std::ofstream out(link_path, std::ios::binary | std::ios::trunc);
    auto hex = target.hex();
    out.write(hex.data(), static_cast<std::streamsize>(hex.size()));
}

std::optional<merkle::ObjectId> DiskStore::linked(const merkle::ObjectId& root,
                                                  const std::string& suffix) const {
    fs::path link_path = objects_dir_ / (root.hex() + suffix);
    std::ifstream in(link_path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string hex((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return Digest::from_hex(hex);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::vector<merkle::ObjectId> DiskStore::ids() const {
    std::vector<Digest> out;
    for (const auto& entry : fs::directory_iterator(objects_dir_)) {
        std::string name = entry.path().filename().string();
        if (name.size() == 64) {
            try {
                out.push_back(Digest::from_hex(name));
            } catch (const Error&) {
            }
        }
    }
    return out;
}

size_t DiskStore::count() const { return ids().size(); }

} // namespace mtfs
