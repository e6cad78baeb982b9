// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/client.hpp"

namespace mtfs::client {

namespace {

template <typename T>
concept HasReqId = requires(T t) { t.req_id; };
template <typename T>
concept HasReplyTo = requires(T t) { t.reply_to; };

} // namespace

uint64_t req_id_of(const app::AppMsg& m) {
    return std::visit(
        [](const auto& p) -> uint64_t {
            if constexpr (HasReqId<decltype(p)>)
                return p.req_id;
            else
                return 0;
        },
        m);
}

void set_envelope(app::AppMsg& m, uint64_t req_id, const wire::NodeInfo& reply_to) {
    std::visit(
        [&](auto& p) {
            if constexpr (HasReqId<decltype(p)>)
                p.req_id = req_id;
            if constexpr (HasReplyTo<decltype(p)>)
                p.reply_to = reply_to;
        },
        m);
}

} // namespace mtfs::client
