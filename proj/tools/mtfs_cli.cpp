// Copyright (c) MTFS contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every command is a thin adapter over the library:
// argument parsing, file I/O, and output formatting live here; protocol
// logic does not.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtfs/config.hpp"
#include "mtfs/error.hpp"
#include "mtfs/scenario.hpp"
#include "mtfs/transport.hpp"
#include "mtfs/workflows.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtfs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOperational = 1;
constexpr int kExitUsage = 2;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Errc::not_found, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, ByteView bytes) {
    if (auto dir = fs::path(path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(Errc::internal, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Bytes read_file_bytes(const std::string& path) {
    std::string s = read_file(path);
    return Bytes(s.begin(), s.end());
}

// Options shared by every command; flags beat env beats config file.
struct Common {
    std::string config_file;
    std::string data_dir;
    std::string identity;
    std::string entry;
    std::string ledger;
    bool json_out = false;
};

std::map<std::string, std::string> snapshot_env() {
    std::map<std::string, std::string> env;
    for (const char* key : {"MTFS_DATA_DIR", "MTFS_IDENTITY", "MTFS_ENTRY"}) {
        if (const char* v = std::getenv(key))
            env[key] = v;
    }
    return env;
}

config::CliConfig resolve(const Common& c) {
    config::CliConfig cfg;
    if (!c.config_file.empty())
        cfg = config::parse_file(read_file(c.config_file));
    cfg = config::apply_env(std::move(cfg), snapshot_env());
    if (!c.data_dir.empty())
        cfg.data_dir = c.data_dir;
    if (!c.identity.empty())
        cfg.identity = c.identity;
    if (!c.entry.empty())
        cfg.entry = config::parse_endpoint(c.entry);
    if (!c.ledger.empty())
        cfg.ledger = config::parse_endpoint(c.ledger);
    return cfg;
}

pre::KeyPair load_identity(const config::CliConfig& cfg) {
    return config::decode_identity(read_file(cfg.identity_path()));
}

wire::NodeInfo endpoint_info(const config::Endpoint& ep) {
    wire::NodeInfo info;
    info.host = ep.host;
    info.port = ep.port;
    return info;
}

config::Endpoint require_entry(const config::CliConfig& cfg) {
    if (!cfg.entry)
        fail(Errc::usage_error, "no entry node configured (flag --entry, env MTFS_ENTRY, "
                                "or config file)");
    return *cfg.entry;
}

// Nodes are addressed by id; a client knows only host:port, so take a
// membership snapshot and find the node advertising that address.
wire::NodeInfo identify(transport::TcpExchange& ex, const config::Endpoint& ep) {
    auto reply = ex.request(endpoint_info(ep), app::SnapshotReq{});
    if (!reply)
        fail(Errc::unreachable_node, ep.host + ":" + std::to_string(ep.port) +
                                         " did not answer");
    const auto* snap = std::get_if<app::SnapshotResp>(&*reply);
    if (!snap)
        fail(Errc::unreachable_node, "unexpected reply from entry node");
    for (const auto& m : snap->members)
        if (m.host == ep.host && m.port == ep.port)
            return m;
    fail(Errc::unreachable_node, "no node advertises " + ep.host + ":" +
                                     std::to_string(ep.port) +
                                     "; pass the address exactly as the node announces it");
}

struct UserContext {
    transport::TcpExchange ex{"cli"};
    std::unique_ptr<workflows::Session> session;
    wire::NodeInfo entry;
};

std::unique_ptr<UserContext> open_session(const config::CliConfig& cfg) {
    auto ctx = std::make_unique<UserContext>();
    auto entry_ep = require_entry(cfg);
    ctx->entry = identify(ctx->ex, entry_ep);
    wire::NodeInfo ledger = ctx->entry;
    if (cfg.ledger && !(cfg.ledger->host == entry_ep.host && cfg.ledger->port == entry_ep.port))
        ledger = identify(ctx->ex, *cfg.ledger);
    workflows::SessionConfig sc;
    sc.keys = load_identity(cfg);
    sc.entry = ctx->entry;
    sc.ledger = ledger;
    sc.replicas = cfg.replicas;
    ctx->session = std::make_unique<workflows::Session>(ctx->ex, sc);
    return ctx;
}

json entry_to_json(const folder::Entry& e, const std::string& name) {
    return json{{"name", name},
                {"kind", e.kind == folder::Kind::folder ? "folder" : "file"},
                {"size", e.size},
                {"object_ref", e.object_ref.hex()},
                {"capsule_ref", e.capsule_ref.hex()}};
}

int cmd_keygen(const Common& c) {
    auto cfg = resolve(c);
    std::string path = cfg.identity_path();
    if (fs::exists(path))
        fail(Errc::usage_error, path + " already exists; refusing to overwrite keys");
    RandomSource rng; // system entropy
    auto keys = pre::keygen(rng);
    if (auto dir = fs::path(path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    std::string text = config::encode_identity(keys);
    write_file(path, ByteView(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
    fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write);
    std::string pk_hex = to_hex(keys.pk.serialize());
    if (c.json_out)
        std::cout << json{{"identity", path},
                          {"public_key", pk_hex},
                          {"address", keys.pk.digest().hex()}}
                         .dump()
                  << "\n";
    else
        std::cout << "identity: " << path << "\npublic key: " << pk_hex
                  << "\naddress: " << keys.pk.digest().hex() << "\n";
    return kExitOk;
}

int cmd_node_start(const Common& c, const std::string& advertise, uint16_t port,
                   bool bootstrap, const std::string& redundancy, size_t replicas) {
    auto cfg = resolve(c);
    auto keys = load_identity(cfg);

    transport::HostConfig hc;
    hc.host = advertise;     // what peers dial
    hc.bind_host = "0.0.0.0";
    hc.port = port;
    hc.data_dir = cfg.data_dir + "/objects";
    hc.node.overlay.self.node_id = keys.pk.digest();
    hc.node.overlay.redundancy =
        redundancy.empty() ? cfg.redundancy : config::parse_redundancy(redundancy);
    hc.node.policy.r = replicas ? replicas : cfg.replicas;
    hc.node.sealer = bootstrap; // the first node runs the ledger

    transport::NodeHost host(hc);
    if (bootstrap) {
        host.bootstrap();
        std::cout << "bootstrapped as tree root, listening on port " << host.port() << "\n";
    } else {
        auto entry_ep = require_entry(cfg);
        transport::TcpExchange probe("probe");
        host.join(identify(probe, entry_ep));
        std::cout << "joined at group id '"
                  << host.inspect([](node::StorageNode& n) {
                         return n.overlay().group_id().str();
                     })
                  << "', listening on port " << host.port() << "\n";
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    host.stop();
    return kExitOk;
}

int cmd_put(const Common& c, const std::string& local, const std::string& remote) {
    auto ctx = open_session(resolve(c));
    Bytes content = read_file_bytes(local);
    auto receipt = ctx->session->put_file(remote, content);
    if (c.json_out)
        std::cout << json{{"path", remote},
                          {"bytes", content.size()},
                          {"receipt", {{"height", receipt.height}, {"index", receipt.index}}}}
                         .dump()
                  << "\n";
    else
        std::cout << "stored " << remote << " (" << content.size() << " bytes), receipt "
                  << receipt.height << "/" << receipt.index << "\n";
    return kExitOk;
}

int cmd_get(const Common& c, const std::string& remote, const std::string& local) {
    auto ctx = open_session(resolve(c));
    Bytes content = ctx->session->get_file(remote);
    write_file(local, content);
    if (c.json_out)
        std::cout << json{{"path", remote},
                          {"bytes", content.size()},
                          {"sha256", sha256(content).hex()},
                          {"local", local}}
                         .dump()
                  << "\n";
    else
        std::cout << "fetched " << remote << " -> " << local << " (" << content.size()
                  << " bytes)\n";
    return kExitOk;
}

int cmd_ls(const Common& c, const std::string& remote) {
    auto ctx = open_session(resolve(c));
    auto obj = ctx->session->list(remote);
    if (c.json_out) {
        json arr = json::array();
        for (const auto& [name, entry] : obj.entries)
            arr.push_back(entry_to_json(entry, name));
        std::cout << arr.dump() << "\n";
        return kExitOk;
    }
    for (const auto& [name, entry] : obj.entries)
        std::cout << (entry.kind == folder::Kind::folder ? "folder" : "file  ") << "  "
                  << entry.size << "\t" << entry.object_ref.hex() << "  " << name << "\n";
    return kExitOk;
}

int cmd_share(const Common& c, const std::string& remote, const std::string& receiver_hex) {
    auto ctx = open_session(resolve(c));
    pre::PublicKey receiver;
    try {
        receiver = pre::PublicKey::deserialize(from_hex(receiver_hex));
    } catch (const Error&) {
        fail(Errc::usage_error, "receiver must be the hex public key printed by keygen");
    }
    auto receipt = ctx->session->share_file(receiver, remote);
    if (c.json_out)
        std::cout << json{{"path", remote},
                          {"receiver", receiver.digest().hex()},
                          {"receipt", {{"height", receipt.height}, {"index", receipt.index}}}}
                         .dump()
                  << "\n";
    else
        std::cout << "shared " << remote << " with " << receiver.digest().hex() << ", receipt "
                  << receipt.height << "/" << receipt.index << "\n";
    return kExitOk;
}

int cmd_pending(const Common& c) {
    auto ctx = open_session(resolve(c));
    auto pending = ctx->session->pending_shares();
    if (c.json_out) {
        json arr = json::array();
        for (const auto& s : pending)
            arr.push_back(json{{"share_ref", s.reenc_capsule_ref.hex()},
                               {"sender", s.sender.hex()},
                               {"object_ref", s.object_ref.hex()}});
        std::cout << arr.dump() << "\n";
        return kExitOk;
    }
    for (const auto& s : pending)
        std::cout << s.reenc_capsule_ref.hex() << "  from " << s.sender.hex() << "\n";
    if (pending.empty())
        std::cout << "no pending shares\n";
    return kExitOk;
}

int cmd_accept(const Common& c, const std::string& share_ref_hex, std::string name) {
    auto ctx = open_session(resolve(c));
    Digest ref;
    try {
        ref = Digest::from_hex(share_ref_hex);
    } catch (const Error&) {
        fail(Errc::usage_error, "share reference must be the hex id printed by `pending`");
    }
    auto pending = ctx->session->pending_shares();
    const ledger::FileSend* match = nullptr;
    for (const auto& s : pending)
        if (s.reenc_capsule_ref == ref)
            match = &s;
    if (!match)
        fail(Errc::not_found, "no pending share with that reference");
    if (name.empty())
        name = "shared-" + share_ref_hex.substr(0, 12);
    auto receipt = ctx->session->accept_share(*match, name);
    if (c.json_out)
        std::cout << json{{"name", name},
                          {"sender", match->sender.hex()},
                          {"receipt", {{"height", receipt.height}, {"index", receipt.index}}}}
                         .dump()
                  << "\n";
    else
        std::cout << "accepted as " << name << ", receipt " << receipt.height << "/"
                  << receipt.index << "\n";
    return kExitOk;
}

int cmd_audit(const Common& c) {
    auto cfg = resolve(c);
    transport::TcpExchange ex("audit");
    auto entry = identify(ex, require_entry(cfg));
    auto replies = ex.collect(entry, app::AuditNow{}, 1 << 16, 2000);
    uint64_t checked = 0, failed = 0, repairs = 0, auditors = 0;
    for (const auto& r : replies) {
        if (const auto* rep = std::get_if<app::AuditReport>(&r)) {
            ++auditors;
            checked += rep->checked;
            failed += rep->failed;
            repairs += rep->repairs;
        }
    }
    if (c.json_out)
        std::cout << json{{"nodes", auditors},
                          {"checked", checked},
                          {"failed", failed},
                          {"repairs", repairs}}
                         .dump()
                  << "\n";
    else
        std::cout << auditors << " nodes reporting: checked " << checked << ", failed "
                  << failed << ", repaired " << repairs << "\n";
    return kExitOk;
}

int cmd_net_stats(const Common& c) {
    auto cfg = resolve(c);
    transport::TcpExchange ex("stats");
    auto entry = identify(ex, require_entry(cfg));
    auto replies = ex.collect(entry, app::StatsReq{}, 1 << 16, 2000);
    size_t nodes = 0, height = 0, open_branches = 0;
    std::map<size_t, uint64_t> objects_per_depth;
    uint64_t objects = 0, bytes = 0;
    for (const auto& r : replies) {
        const auto* rep = std::get_if<app::StatsResp>(&r);
        if (!rep)
            continue;
        ++nodes;
        size_t depth = rep->self.group_id.depth();
        height = std::max(height, depth);
        open_branches += 2 - std::min<size_t>(2, rep->children);
        objects_per_depth[depth] += rep->objects;
        objects += rep->objects;
        bytes += rep->bytes_stored;
    }
    if (c.json_out) {
        json per_depth = json::object();
        for (const auto& [d, n] : objects_per_depth)
            per_depth[std::to_string(d)] = n;
        std::cout << json{{"nodes", nodes},
                          {"height", height},
                          {"open_branches", open_branches},
                          {"objects", objects},
                          {"bytes", bytes},
                          {"objects_per_depth", per_depth}}
                         .dump()
                  << "\n";
        return kExitOk;
    }
    std::cout << "nodes: " << nodes << "\nheight: " << height
              << "\nopen branches: " << open_branches << "\nobjects: " << objects << " ("
              << bytes << " bytes)\n";
    for (const auto& [d, n] : objects_per_depth)
        std::cout << "  depth " << d << ": " << n << " objects\n";
    return kExitOk;
}

int cmd_sim_run(const Common& c, const std::string& script_path, uint64_t seed,
                const std::string& trace_path) {
    sim::SimConfig cfg;
    cfg.seed = seed;
    auto outcome = scenario::run(cfg, read_file(script_path));
    if (c.json_out) {
        std::cout << json{{"log", outcome.log}, {"seed", seed}}.dump() << "\n";
    } else {
        for (const auto& line : outcome.log)
            std::cout << line << "\n";
    }
    if (!trace_path.empty())
        write_file(trace_path, ByteView(reinterpret_cast<const uint8_t*>(
                                            outcome.trace_csv.data()),
                                        outcome.trace_csv.size()));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"private content-addressed file storage over a tree overlay"};
    app.require_subcommand(1);

    Common common;
    app.add_option("--config", common.config_file, "key=value config file");
    app.add_option("--data-dir", common.data_dir, "local state directory");
    app.add_option("--identity", common.identity, "identity key file");
    app.add_option("--entry", common.entry, "entry node host:port");
    app.add_option("--ledger", common.ledger, "ledger node host:port, defaults to entry");
    app.add_flag("--json", common.json_out, "machine-readable output");

    auto* keygen = app.add_subcommand("keygen", "create an identity key pair");

    auto* node = app.add_subcommand("node", "storage node lifecycle");
    auto* node_start = node->add_subcommand("start", "run a storage node");
    std::string advertise = "127.0.0.1";
    uint16_t port = transport::kDefaultPort;
    bool bootstrap = false;
    std::string redundancy;
    size_t replicas = 0;
    node_start->add_option("--host", advertise, "address peers use to reach this node");
    node_start->add_option("--port", port, "listen port");
    node_start->add_flag("--bootstrap", bootstrap, "start a new tree as its root");
    node_start->add_option("--redundancy", redundancy, "none | extra_links | cluster");
    node_start->add_option("--replicas", replicas, "replicas per object");

    std::string put_local, put_remote;
    auto* put = app.add_subcommand("put", "store a local file");
    put->add_option("local", put_local, "local file")->required();
    put->add_option("remote", put_remote, "remote path")->required();

    std::string get_remote, get_local;
    auto* get = app.add_subcommand("get", "fetch a remote file");
    get->add_option("remote", get_remote, "remote path")->required();
    get->add_option("local", get_local, "local destination")->required();

    std::string ls_remote;
    auto* ls = app.add_subcommand("ls", "list a remote folder");
    ls->add_option("remote", ls_remote, "remote folder path, empty for the root");

    std::string share_remote, share_receiver;
    auto* share = app.add_subcommand("share", "grant a file to another key");
    share->add_option("remote", share_remote, "remote path")->required();
    share->add_option("receiver", share_receiver, "receiver public key (hex)")->required();

    auto* pending = app.add_subcommand("pending", "list shares waiting for acceptance");

    std::string accept_ref, accept_name;
    auto* accept = app.add_subcommand("accept", "accept a pending share");
    accept->add_option("share-ref", accept_ref, "share reference from `pending`")->required();
    accept->add_option("--name", accept_name, "entry name in your root folder");

    auto* audit = app.add_subcommand("audit", "trigger a storage audit round");

    auto* net = app.add_subcommand("net", "network inspection");
    auto* net_stats = net->add_subcommand("stats", "tree and storage statistics");

    auto* sim = app.add_subcommand("sim", "deterministic simulation");
    auto* sim_run = sim->add_subcommand("run", "execute a scenario script");
    std::string script_path, trace_path;
    uint64_t seed = 1;
    sim_run->add_option("script", script_path, "scenario script file")->required();
    sim_run->add_option("--seed", seed, "simulation seed");
    sim_run->add_option("--trace", trace_path, "write the delivery trace CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*keygen)
            return cmd_keygen(common);
        if (*node_start)
            return cmd_node_start(common, advertise, port, bootstrap, redundancy, replicas);
        if (*put)
            return cmd_put(common, put_local, put_remote);
        if (*get)
            return cmd_get(common, get_remote, get_local);
        if (*ls)
            return cmd_ls(common, ls_remote);
        if (*share)
            return cmd_share(common, share_remote, share_receiver);
        if (*pending)
            return cmd_pending(common);
        if (*accept)
            return cmd_accept(common, accept_ref, accept_name);
        if (*audit)
            return cmd_audit(common);
        if (*net_stats)
            return cmd_net_stats(common);
        if (*sim_run)
            return cmd_sim_run(common, script_path, seed, trace_path);
        std::cerr << "error: missing subcommand\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << json{{"error", errc_name(e.code())}, {"detail", e.what()}}.dump()
                  << "\n";
        return e.code() == Errc::usage_error ? kExitUsage : kExitOperational;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"detail", e.what()}}.dump() << "\n";
        return kExitOperational;
    }
}
