// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "mtfs/error.hpp"

namespace mtfs::config {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

uint64_t parse_number(const std::string& text, const char* what) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        fail(Errc::usage_error, std::string("bad ") + what + ": '" + text + "'");
    return v;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
    Endpoint ep;
    auto colon = text.rfind(':');
    if (colon == std::string::npos) {
        if (text.empty())
            fail(Errc::usage_error, "empty endpoint");
        ep.host = text;
        return ep;
    }
    ep.host = text.substr(0, colon);
    if (ep.host.empty())
        fail(Errc::usage_error, "endpoint needs a host: '" + text + "'");
    uint64_t port = parse_number(text.substr(colon + 1), "endpoint port");
    if (port == 0 || port > 65535)
        fail(Errc::usage_error, "endpoint port out of range: '" + text + "'");
    ep.port = static_cast<uint16_t>(port);
    return ep;
}

overlay::RedundancyMode parse_redundancy(const std::string& name) {
    if (name == "none")
        return overlay::RedundancyMode::none;
    if (name == "extra_links")
        return overlay::RedundancyMode::extra_links;
    if (name == "cluster")
        return overlay::RedundancyMode::cluster;
    fail(Errc::usage_error, "unknown redundancy mode: '" + name + "'");
}

std::string redundancy_name(overlay::RedundancyMode mode) {
    switch (mode) {
    case overlay::RedundancyMode::none:
        return "none";
    case overlay::RedundancyMode::extra_links:
        return "extra_links";
    case overlay::RedundancyMode::cluster:
        return "cluster";
    }
    return "none";
}

CliConfig parse_file(const std::string& text) {
    CliConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::usage_error,
                 "config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key == "data_dir") {
            cfg.data_dir = value;
        } else if (key == "identity") {
            cfg.identity = value;
        } else if (key == "entry") {
            cfg.entry = parse_endpoint(value);
        } else if (key == "ledger") {
            cfg.ledger = parse_endpoint(value);
        } else if (key == "redundancy") {
            cfg.redundancy = parse_redundancy(value);
        } else if (key == "replicas") {
            cfg.replicas = parse_number(value, "replicas");
        } else {
            fail(Errc::usage_error,
                 "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

std::string encode_identity(const pre::KeyPair& keys) {
    std::string out;
    out += "# private key material, keep out of backups you share\n";
    out += "sk = " + to_hex(ByteView(keys.sk.scalar.data(), keys.sk.scalar.size())) + "\n";
    out += "pk = " + to_hex(keys.pk.serialize()) + "\n";
    return out;
}

pre::KeyPair decode_identity(const std::string& text) {
    std::optional<std::string> sk_hex, pk_hex;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::malformed_record, "identity file: expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key == "sk")
            sk_hex = value;
        else if (key == "pk")
            pk_hex = value;
        else
            fail(Errc::malformed_record, "identity file: unknown key '" + key + "'");
    }
    if (!sk_hex || !pk_hex)
        fail(Errc::malformed_record, "identity file: missing sk or pk");
    Bytes sk_bytes = from_hex(*sk_hex);
    if (sk_bytes.size() != 32)
        fail(Errc::malformed_record, "identity file: bad private key length");
    pre::KeyPair keys;
    std::copy(sk_bytes.begin(), sk_bytes.end(), keys.sk.scalar.begin());
    keys.pk = pre::PublicKey::deserialize(from_hex(*pk_hex));
    if (keys.sk.public_key() != keys.pk)
        fail(Errc::malformed_record, "identity file: key pair mismatch");
    return keys;
}

CliConfig apply_env(CliConfig base, const std::map<std::string, std::string>& env) {
    if (auto it = env.find("MTFS_DATA_DIR"); it != env.end() && !it->second.empty())
        base.data_dir = it->second;
    if (auto it = env.find("MTFS_IDENTITY"); it != env.end() && !it->second.empty())
        base.identity = it->second;
    if (auto it = env.find("MTFS_ENTRY"); it != env.end() && !it->second.empty())
        base.entry = parse_endpoint(it->second);
    return base;
}

}  // namespace mtfs::config
