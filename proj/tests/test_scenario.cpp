// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/scenario.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace mtfs;

namespace {

std::map<Digest, std::set<size_t>> holders_by_object(const sim::Network& net) {
    std::map<Digest, std::set<size_t>> out;
    for (size_t i = 0; i < net.size(); ++i)
        for (const auto& id : net.node(i).store().ids())
            out[id].insert(i);
    return out;
}

// the full storage flow on one network: two users, three files, one share
const char* kStoryScript = R"(# fifteen node tree, one owner, one receiver
join 15
put alice docs/report.bin 2500000
put alice notes/todo.txt text:ship-it
put alice pics/cat.bin 65536
share alice bob docs/report.bin
accept bob report-from-alice.bin
get bob report-from-alice.bin
get alice docs/report.bin
stats from 0
audit from 0
broadcast from 3 payload beef
metrics
)";

sim::SimConfig story_config(uint64_t seed) {
    sim::SimConfig cfg;
    cfg.seed = seed;
    cfg.latency.min_ms = 3;
    cfg.latency.max_ms = 19;
    return cfg;
}

// value of `key=` in a step log line
std::string log_field(const std::string& line, const std::string& key) {
    auto at = line.find(key + "=");
    REQUIRE(at != std::string::npos);
    at += key.size() + 1;
    auto end = line.find(' ', at);
    return line.substr(at, end == std::string::npos ? end : end - at);
}

}  // namespace

TEST_CASE("scripts parse into typed steps and reject malformed lines") {
    auto steps = scenario::parse(
        "# comment\n"
        "\n"
        "join 7\n"
        "fail node 2 at 120ms\n"
        "recover node 2 at 400ms\n"
        "broadcast from 0 payload beefcafe\n"
        "put u1 a/b.bin 1024\n"
        "put u1 c.txt text:hello\n"
        "put u1 d.bin\n"
        "get u1 a/b.bin\n"
        "share u1 u2 a/b.bin\n"
        "accept u2 b-copy.bin\n"
        "audit from 1\n"
        "stats from 0\n"
        "metrics\n");
    REQUIRE(steps.size() == 13);
    CHECK(steps[0].kind == scenario::Step::Kind::join);
    CHECK(steps[0].count == 7);
    CHECK(steps[1].at_ms == 120);
    CHECK(steps[2].kind == scenario::Step::Kind::recover);
    CHECK(steps[3].payload == from_hex("beefcafe"));
    CHECK(steps[4].size == 1024);
    CHECK(steps[5].text == "hello");
    CHECK(steps[6].size == 4096); // unstated size gets the default
    CHECK(steps[9].kind == scenario::Step::Kind::accept);
    CHECK(steps[9].user == "u2");
    CHECK(steps[9].path == "b-copy.bin");

    for (const char* bad : {
             "warp 9",                        // unknown verb
             "join",                          // missing count
             "join 0",                        // empty network
             "join seven",                    // not a number
             "fail node 1 at 5",              // missing ms suffix
             "fail node x at 5ms",            // bad index
             "broadcast from 0 payload zz",   // not hex
             "broadcast from 0 beef",         // missing keyword
             "put u1",                        // missing path
             "share u1 a/b.bin",              // missing receiver
             "metrics now",                   // trailing token
         }) {
        CAPTURE(bad);
        testutil::expect_code(Errc::scenario_error, [&] { (void)scenario::parse(bad); });
    }
}

TEST_CASE("misuse at run time is a scenario error") {
    testutil::expect_code(Errc::scenario_error, [] {
        scenario::run(sim::SimConfig{}, "put alice a.txt 16\n"); // before any join
    });
    testutil::expect_code(Errc::scenario_error, [] {
        scenario::run(sim::SimConfig{}, "join 3\nmetrics\n"); // no broadcast yet
    });
    testutil::expect_code(Errc::scenario_error, [] {
        scenario::run(sim::SimConfig{}, "join 3\naccept bob x.bin\n"); // nothing pending
    });
    testutil::expect_code(Errc::scenario_error, [] {
        scenario::run(sim::SimConfig{}, "join 3\nbroadcast from 9 payload 00\n");
    });
}

TEST_CASE("the storage story runs end to end and reads back what was shared") {
    scenario::Runner runner(story_config(7));
    runner.run_script(kStoryScript);
    const auto& log = runner.log();
    REQUIRE(log.size() == 12);

    // bob read exactly the bytes alice generated for docs/report.bin
    auto expected = sha256(scenario::file_bytes("alice", "docs/report.bin", 2'500'000));
    CHECK(log_field(log[6], "sha256") == expected.hex().substr(0, 12));
    CHECK(log_field(log[6], "bytes") == "2500000");
    // alice still reads her own copy
    CHECK(log_field(log[7], "sha256") == expected.hex().substr(0, 12));

    CHECK(log_field(log[8], "nodes") == "15");
    CHECK(log_field(log[1], "bytes") == "2500000");
    CHECK(log_field(log[11], "coverage") == "1.000");

    // the sealer accepted storage contracts and the file send
    CHECK(!runner.ledger_transactions_hex().empty());
}

TEST_CASE("sharing adds objects without touching the sender's stored bytes") {
    scenario::Runner runner(story_config(7));
    runner.run_script(
        "join 15\n"
        "put alice docs/report.bin 2500000\n"
        "put alice notes/todo.txt text:ship-it\n"
        "put alice pics/cat.bin 65536\n");
    auto before = holders_by_object(runner.net());

    runner.run_script(
        "share alice bob docs/report.bin\n"
        "accept bob report-from-alice.bin\n"
        "get bob report-from-alice.bin\n");
    auto after = holders_by_object(runner.net());

    for (const auto& [id, at] : before) {
        CAPTURE(id.hex());
        REQUIRE(after.count(id) == 1);
        CHECK(after.at(id) == at); // same replicas on the same nodes
    }
    CHECK(after.size() > before.size()); // the share fabricated new objects
}

TEST_CASE("one seed, one script, one outcome") {
    auto a = scenario::run(story_config(42), kStoryScript);
    auto b = scenario::run(story_config(42), kStoryScript);
    CHECK(a.log == b.log);
    CHECK(a.trace_csv == b.trace_csv);
    CHECK(a.ledger_transactions_hex == b.ledger_transactions_hex);
    CHECK(!a.trace_csv.empty());

    auto c = scenario::run(story_config(43), kStoryScript);
    CHECK(c.trace_csv != a.trace_csv); // a different seed walks a different path
}

TEST_CASE("a scheduled failure punches a hole in a later broadcast") {
    auto out = scenario::run(story_config(9),
                             "join 15\n"
                             "fail node 1 at 0ms\n"
                             "broadcast from 0 payload 00\n"
                             "metrics\n");
    REQUIRE(out.log.size() == 4);
    auto coverage = std::stod(log_field(out.log[3], "coverage"));
    CHECK(coverage < 1.0);
    CHECK(coverage > 0.0);

    auto healed = scenario::run(story_config(9),
                                "join 15\n"
                                "fail node 1 at 0ms\n"
                                "recover node 1 at 1000ms\n"
                                "broadcast from 0 payload 00\n"
                                "broadcast from 0 payload 01\n"
                                "metrics\n");
    // the second broadcast leaves after the recovery and reaches everyone
    CHECK(log_field(healed.log[5], "coverage") == "1.000");
}
