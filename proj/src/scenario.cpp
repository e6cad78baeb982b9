// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtfs/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "mtfs/app.hpp"
#include "mtfs/error.hpp"

namespace mtfs::scenario {

namespace {

[[noreturn]] void bad_step(size_t line_no, const std::string& what) {
    fail(Errc::scenario_error, "line " + std::to_string(line_no) + ": " + what);
}

uint64_t parse_u64(const std::string& tok, size_t line_no, const char* what) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        bad_step(line_no, std::string("bad ") + what + " '" + tok + "'");
    return v;
}

uint64_t parse_ms(const std::string& tok, size_t line_no) {
    if (tok.size() < 3 || tok.substr(tok.size() - 2) != "ms")
        bad_step(line_no, "expected a time like 120ms, got '" + tok + "'");
    return parse_u64(tok.substr(0, tok.size() - 2), line_no, "time");
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

void expect_tokens(const std::vector<std::string>& t, size_t n, size_t line_no,
                   const char* usage) {
    if (t.size() != n)
        bad_step(line_no, std::string("usage: ") + usage);
}

// remaining-token keyword check, e.g. the literal "from" in "broadcast from 0"
void expect_word(const std::vector<std::string>& t, size_t at, const char* word,
                 size_t line_no, const char* usage) {
    if (t.at(at) != word)
        bad_step(line_no, std::string("usage: ") + usage);
}

uint64_t seed_from(const std::string& domain) {
    Digest d = sha256(to_bytes(domain));
    uint64_t v = 0;
    for (size_t i = 0; i < 8; ++i)
        v = (v << 8) | d.v[i];
    return v;
}

std::string short_hex(const Digest& d) { return d.hex().substr(0, 12); }

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

uint64_t user_key_seed(const std::string& user) {
    return seed_from("mtfs.scenario.user." + user);
}

uint64_t user_rng_seed(const std::string& user) {
    return seed_from("mtfs.scenario.rng." + user);
}

Bytes file_bytes(const std::string& user, const std::string& path, uint64_t size) {
    RandomSource rng(seed_from("mtfs.scenario.file." + user + "." + path),
                     "mtfs.scenario.file");
    return rng.bytes(size);
}

std::vector<Step> parse(const std::string& script) {
    std::vector<Step> steps;
    std::istringstream in(script);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = tokenize(line);
        if (t.empty() || t[0][0] == '#')
            continue;
        Step s;
        s.line_no = line_no;
        const std::string& verb = t[0];
        if (verb == "join") {
            expect_tokens(t, 2, line_no, "join N");
            s.kind = Step::Kind::join;
            s.count = parse_u64(t[1], line_no, "node count");
            if (s.count == 0)
                bad_step(line_no, "join needs at least one node");
        } else if (verb == "fail" || verb == "recover") {
            const char* usage = "fail|recover node I at Tms";
            expect_tokens(t, 5, line_no, usage);
            expect_word(t, 1, "node", line_no, usage);
            expect_word(t, 3, "at", line_no, usage);
            s.kind = verb == "fail" ? Step::Kind::fail : Step::Kind::recover;
            s.index = parse_u64(t[2], line_no, "node index");
            s.at_ms = parse_ms(t[4], line_no);
        } else if (verb == "broadcast") {
            const char* usage = "broadcast from I payload HEX";
            expect_tokens(t, 5, line_no, usage);
            expect_word(t, 1, "from", line_no, usage);
            expect_word(t, 3, "payload", line_no, usage);
            s.kind = Step::Kind::broadcast;
            s.index = parse_u64(t[2], line_no, "node index");
            try {
                s.payload = from_hex(t[4]);
            } catch (const Error&) {
                bad_step(line_no, "payload is not hex: '" + t[4] + "'");
            }
        } else if (verb == "put") {
            if (t.size() != 3 && t.size() != 4)
                bad_step(line_no, "usage: put USER PATH [SIZE | text:STR]");
            s.kind = Step::Kind::put;
            s.user = t[1];
            s.path = t[2];
            s.size = 4096; // default content size when the script names none
            if (t.size() == 4) {
                if (t[3].rfind("text:", 0) == 0)
                    s.text = t[3].substr(5);
                else
                    s.size = parse_u64(t[3], line_no, "size");
            }
        } else if (verb == "get") {
            expect_tokens(t, 3, line_no, "get USER PATH");
            s.kind = Step::Kind::get;
            s.user = t[1];
            s.path = t[2];
        } else if (verb == "share") {
            expect_tokens(t, 4, line_no, "share USER PEER PATH");
            s.kind = Step::Kind::share;
            s.user = t[1];
            s.peer = t[2];
            s.path = t[3];
        } else if (verb == "accept") {
            expect_tokens(t, 3, line_no, "accept USER NAME");
            s.kind = Step::Kind::accept;
            s.user = t[1];
            s.path = t[2];
        } else if (verb == "audit" || verb == "stats") {
            const char* usage = "audit|stats from I";
            expect_tokens(t, 3, line_no, usage);
            expect_word(t, 1, "from", line_no, usage);
            s.kind = verb == "audit" ? Step::Kind::audit : Step::Kind::stats;
            s.index = parse_u64(t[2], line_no, "node index");
        } else if (verb == "metrics") {
            expect_tokens(t, 1, line_no, "metrics");
            s.kind = Step::Kind::metrics;
        } else {
            bad_step(line_no, "unknown step '" + verb + "'");
        }
        steps.push_back(std::move(s));
    }
    return steps;
}

Runner::Runner(sim::SimConfig cfg) : cfg_(cfg), net_(cfg) {}
Runner::~Runner() = default;

void Runner::run_script(const std::string& script) {
    for (const auto& step : parse(script))
        apply(step);
}

sim::SimExchange& Runner::probe() {
    if (!probe_)
        probe_ = std::make_unique<sim::SimExchange>(net_, "scenario.probe");
    return *probe_;
}

workflows::Session& Runner::session(const std::string& user) {
    auto it = sessions_.find(user);
    if (it != sessions_.end())
        return *it->second;
    if (net_.size() == 0)
        fail(Errc::scenario_error, "user '" + user + "' appears before any join step");
    auto ex = std::make_unique<sim::SimExchange>(net_, "scenario." + user);
    RandomSource krng(user_key_seed(user), "mtfs.scenario.keys");
    workflows::SessionConfig cfg;
    cfg.keys = pre::keygen(krng);
    cfg.entry = net_.node(0).self();
    cfg.ledger = net_.node(0).self();
    cfg.rng_seed = user_rng_seed(user);
    keys_[user] = cfg.keys;
    auto session = std::make_unique<workflows::Session>(*ex, cfg);
    auto* raw = session.get();
    exchanges_[user] = std::move(ex);
    sessions_[user] = std::move(session);
    return *raw;
}

void Runner::apply(const Step& s) {
    switch (s.kind) {
    case Step::Kind::join: {
        if (net_.size() == 0) {
            net_.grow(s.count);
        } else {
            for (size_t i = 0; i < s.count; ++i)
                net_.join(net_.add_node(), 0);
        }
        log_.push_back("join n=" + std::to_string(s.count) +
                       " nodes=" + std::to_string(net_.size()) +
                       " height=" + std::to_string(net_.height()));
        break;
    }
    case Step::Kind::fail:
    case Step::Kind::recover: {
        bool fail_it = s.kind == Step::Kind::fail;
        net_.schedule_failure(s.index, s.at_ms, fail_it);
        log_.push_back(std::string(fail_it ? "fail" : "recover") +
                       " node=" + std::to_string(s.index) +
                       " at=" + std::to_string(s.at_ms) + "ms");
        break;
    }
    case Step::Kind::broadcast: {
        if (s.index >= net_.size())
            bad_step(s.line_no, "broadcast origin out of range");
        Bytes wrapped = app::pack(app::AppMsg{app::UserBroadcast{s.payload}});
        last_broadcast_ = net_.originate_broadcast(s.index, std::move(wrapped));
        net_.run();
        log_.push_back("broadcast from=" + std::to_string(s.index) +
                       " msg=" + short_hex(*last_broadcast_));
        break;
    }
    case Step::Kind::put: {
        Bytes content = s.text.empty() ? file_bytes(s.user, s.path, s.size)
                                       : to_bytes(s.text);
        auto receipt = session(s.user).put_file(s.path, content);
        log_.push_back("put user=" + s.user + " path=" + s.path +
                       " bytes=" + std::to_string(content.size()) +
                       " receipt=" + std::to_string(receipt.height) + "/" +
                       std::to_string(receipt.index));
        break;
    }
    case Step::Kind::get: {
        Bytes content = session(s.user).get_file(s.path);
        log_.push_back("get user=" + s.user + " path=" + s.path +
                       " bytes=" + std::to_string(content.size()) +
                       " sha256=" + short_hex(sha256(content)));
        break;
    }
    case Step::Kind::share: {
        auto& sender = session(s.user);
        session(s.peer); // materialize the receiver so its keys exist
        auto receipt = sender.share_file(keys_.at(s.peer).pk, s.path);
        log_.push_back("share from=" + s.user + " to=" + s.peer +
                       " path=" + s.path +
                       " receipt=" + std::to_string(receipt.height) + "/" +
                       std::to_string(receipt.index));
        break;
    }
    case Step::Kind::accept: {
        auto& receiver = session(s.user);
        auto pending = receiver.pending_shares();
        if (pending.empty())
            bad_step(s.line_no, "no pending shares for user '" + s.user + "'");
        auto receipt = receiver.accept_share(pending.front(), s.path);
        log_.push_back("accept user=" + s.user + " name=" + s.path +
                       " from=" + short_hex(pending.front().sender) +
                       " receipt=" + std::to_string(receipt.height) + "/" +
                       std::to_string(receipt.index));
        break;
    }
    case Step::Kind::audit: {
        if (s.index >= net_.size())
            bad_step(s.line_no, "audit target out of range");
        auto& probe = this->probe();
        auto replies = probe.collect(net_.node(s.index).self(), app::AppMsg{app::AuditNow{}},
                                     net_.size() + 1, 0);
        uint64_t checked = 0, failed = 0, repairs = 0;
        for (const auto& r : replies) {
            if (const auto* rep = std::get_if<app::AuditReport>(&r)) {
                checked += rep->checked;
                failed += rep->failed;
                repairs += rep->repairs;
            }
        }
        log_.push_back("audit from=" + std::to_string(s.index) +
                       " checked=" + std::to_string(checked) +
                       " failed=" + std::to_string(failed) +
                       " repairs=" + std::to_string(repairs));
        break;
    }
    case Step::Kind::stats: {
        if (s.index >= net_.size())
            bad_step(s.line_no, "stats target out of range");
        auto& probe = this->probe();
        auto replies = probe.collect(net_.node(s.index).self(), app::AppMsg{app::StatsReq{}},
                                     net_.size() + 1, 0);
        uint64_t nodes = 0, objects = 0, bytes = 0;
        for (const auto& r : replies) {
            if (const auto* rep = std::get_if<app::StatsResp>(&r)) {
                ++nodes;
                objects += rep->objects;
                bytes += rep->bytes_stored;
            }
        }
        log_.push_back("stats nodes=" + std::to_string(nodes) +
                       " objects=" + std::to_string(objects) +
                       " bytes=" + std::to_string(bytes));
        break;
    }
    case Step::Kind::metrics: {
        if (!last_broadcast_)
            bad_step(s.line_no, "metrics before any broadcast");
        auto m = net_.metrics(*last_broadcast_, net_.alive_count());
        log_.push_back("metrics coverage=" + fixed3(m.coverage) +
                       " max_hops=" + std::to_string(m.max_hops) +
                       " mean_hops=" + fixed3(m.mean_hops) +
                       " messages=" + std::to_string(m.messages));
        break;
    }
    }
}

std::string Runner::ledger_transactions_hex() {
    if (net_.size() == 0)
        return {};
    auto* chain = net_.node(0).chain();
    if (!chain)
        return {};
    return to_hex(chain->flatten_transactions());
}

Outcome run(sim::SimConfig cfg, const std::string& script) {
    Runner runner(std::move(cfg));
    runner.run_script(script);
    return Outcome{runner.log(), runner.trace_csv(), runner.ledger_transactions_hex()};
}

}  // namespace mtfs::scenario
