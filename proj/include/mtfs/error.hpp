// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mtfs {

enum class Errc {
    // merkle / store
    empty_leaf_set,
    missing_object,
    integrity_failure,
    root_mismatch,
    object_too_large,
    store_full,
    // crypto
    wrong_key,
    capsule_mismatch,
    already_reencrypted,
    bad_signature,
    // overlay
    already_bootstrapped,
    no_open_branch,
    branch_taken,
    join_failed,
    k_too_small,
    // routing
    invalid_hex,
    unreachable_node,
    // namespace
    malformed_folder,
    malformed_record,
    duplicate_name,
    name_not_found,
    not_found,
    // workflows
    not_addressee,
    ledger_down,
    // replication
    insufficient_path,
    object_lost,
    proof_timeout,
    bad_proof,
    // wire / transport
    truncated,
    version_error,
    unknown_variant,
    connection_refused,
    peer_closed,
    // sim / cli
    scenario_error,
    usage_error,
    internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace mtfs
