// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0
//
// Tool configuration merged from, in rising precedence: built-in defaults,
// a key=value config file, environment variables, command-line flags.

#pragma once

#include <map>
#include <optional>
#include <string>

#include "mtfs/overlay.hpp"
#include "mtfs/pre.hpp"
#include "mtfs/transport.hpp"

namespace mtfs::config {

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = transport::kDefaultPort;
};

// "host:port" or bare "host"; Errc::usage_error on garbage
Endpoint parse_endpoint(const std::string& text);

struct CliConfig {
    std::string data_dir = "mtfs-data";
    std::string identity;              // key file; defaults to <data_dir>/identity.key
    std::optional<Endpoint> entry;     // node to talk to
    std::optional<Endpoint> ledger;    // sealer; defaults to entry
    overlay::RedundancyMode redundancy = overlay::RedundancyMode::none;
    size_t replicas = 3;

    std::string identity_path() const {
        return identity.empty() ? data_dir + "/identity.key" : identity;
    }
};

// Key=value lines, # comments. Unknown keys are an error so typos surface.
// Recognized keys: data_dir, identity, entry, ledger, redundancy, replicas.
CliConfig parse_file(const std::string& text);

// Environment: MTFS_DATA_DIR, MTFS_IDENTITY, MTFS_ENTRY. Overrides `base`.
CliConfig apply_env(CliConfig base,
                    const std::map<std::string, std::string>& env);

overlay::RedundancyMode parse_redundancy(const std::string& name);
std::string redundancy_name(overlay::RedundancyMode mode);

// Identity file: the key pair as key=value hex lines.
std::string encode_identity(const pre::KeyPair& keys);
pre::KeyPair decode_identity(const std::string& text); // Errc::malformed_record

}  // namespace mtfs::config
