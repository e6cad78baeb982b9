// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/app.hpp"

#include <optional>

namespace mtfs::client {

// Client-side request plumbing, one implementation per runtime (simulator,
// TCP). Workflow code is written against this and runs unchanged on both.
class Exchange {
public:
    virtual ~Exchange() = default;

    // The client's own endpoint; responses come back here.
    virtual wire::NodeInfo self() const = 0;

    // Fire and forget (broadcast-class payloads).
    virtual void send(const wire::NodeInfo& to, app::AppMsg msg) = 0;

    // Request/response: fills req_id and reply_to, waits for the matching
    // response. nullopt when the peer never answers.
    virtual std::optional<app::AppMsg> request(const wire::NodeInfo& to, app::AppMsg req) = 0;

    // Broadcast a request and gather responses from many nodes; stops at
    // `expect` responses or when the window closes.
    virtual std::vector<app::AppMsg> collect(const wire::NodeInfo& to, app::AppMsg req,
                                             size_t expect, uint64_t window_ms) = 0;
};

// req_id / reply_to envelope access across payload types (0 / no-op for
// payload types without them).
uint64_t req_id_of(const app::AppMsg& m);
void set_envelope(app::AppMsg& m, uint64_t req_id, const wire::NodeInfo& reply_to);

} // namespace mtfs::client
