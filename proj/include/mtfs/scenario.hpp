// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0
//
// Line-oriented scenario scripts executed against the simulated network.
// A script drives joins, failures, broadcasts, and per-user storage
// sessions in simulated time order, producing a deterministic step log
// and delivery trace for a given seed.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtfs/simnet.hpp"
#include "mtfs/workflows.hpp"

namespace mtfs::scenario {

struct Step {
    enum class Kind {
        join,       // join N
        fail,       // fail node I at Tms
        recover,    // recover node I at Tms
        broadcast,  // broadcast from I payload HEX
        put,        // put USER PATH SIZE  |  put USER PATH text:STR
        get,        // get USER PATH
        share,      // share USER PEER PATH
        accept,     // accept USER NAME
        audit,      // audit from I
        stats,      // stats from I
        metrics,    // metrics
    };

    Kind kind = Kind::metrics;
    size_t line_no = 0;
    size_t count = 0;        // join
    size_t index = 0;        // fail, recover, broadcast, audit, stats
    uint64_t at_ms = 0;      // fail, recover
    Bytes payload;           // broadcast
    std::string user;        // put, get, share, accept
    std::string peer;        // share receiver
    std::string path;        // put, get, share; accept stores the entry name here
    uint64_t size = 0;       // put with generated content
    std::string text;        // put with inline content; non-empty wins over size
};

// Parses a script. Blank lines and lines starting with '#' are skipped.
// Throws Errc::scenario_error with the line number on any malformed step.
std::vector<Step> parse(const std::string& script);

// Deterministic per-user material. Every harness that replays the same
// scenario derives identical keys and file bytes from these.
uint64_t user_key_seed(const std::string& user);
uint64_t user_rng_seed(const std::string& user);
Bytes file_bytes(const std::string& user, const std::string& path, uint64_t size);

// Executes steps against an owned simulated network. Sessions are created
// on first mention of a user name, keyed by deterministic seeds, with node 0
// serving as both entry point and ledger sealer.
class Runner {
public:
    explicit Runner(sim::SimConfig cfg);
    ~Runner();

    void run_script(const std::string& script);
    void apply(const Step& step);

    sim::Network& net() { return net_; }
    workflows::Session& session(const std::string& user);
    const std::vector<std::string>& log() const { return log_; }
    std::string trace_csv() const { return net_.trace_csv(); }
    // all transactions accepted by the sealer, length-prefixed, hex encoded;
    // independent of block seal timing
    std::string ledger_transactions_hex();

private:
    sim::SimExchange& probe(); // session-free client used by audit and stats

    sim::SimConfig cfg_;
    sim::Network net_;
    std::map<std::string, std::unique_ptr<sim::SimExchange>> exchanges_;
    std::map<std::string, std::unique_ptr<workflows::Session>> sessions_;
    std::map<std::string, pre::KeyPair> keys_;
    std::unique_ptr<sim::SimExchange> probe_;
    std::vector<std::string> log_;
    std::optional<Digest> last_broadcast_;
};

struct Outcome {
    std::vector<std::string> log;
    std::string trace_csv;
    std::string ledger_transactions_hex;
};

// One-shot convenience: build a network from cfg, run the script, return
// the deterministic outputs.
Outcome run(sim::SimConfig cfg, const std::string& script);

}  // namespace mtfs::scenario
