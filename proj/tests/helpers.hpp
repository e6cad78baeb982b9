// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtfs/common.hpp"
#include "mtfs/error.hpp"

#include <doctest.h>

#include <functional>

namespace testutil {

// Asserts that `fn` throws mtfs::Error carrying exactly `want`.
inline void expect_code(mtfs::Errc want, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const mtfs::Error& e) {
        CHECK_MESSAGE(e.code() == want, "expected ", mtfs::errc_name(want), " got ",
                      mtfs::errc_name(e.code()), " (", e.what(), ")");
        return;
    }
    FAIL_CHECK("expected error ", mtfs::errc_name(want), ", nothing was thrown");
}

inline mtfs::Bytes random_bytes(mtfs::RandomSource& rng, size_t n) {
    return rng.bytes(n);
}

} // namespace testutil
