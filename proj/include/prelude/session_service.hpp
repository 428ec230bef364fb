#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prelude/environments.hpp"

namespace httplib {
class Server;
}

namespace prelude {

// Static configuration shared by every session of one service instance.
//
//   {"host": "127.0.0.1", "port": 8080, "journal_dir": "sessions",
//    "tokenizer": {...}, "embedder": {...}, "backend": {...},
//    "corpora": {"demo": {"path": "docs.jsonl", "task": "summarization"}},
//    "defaults": {"policy": {"kind": "cipher", "k": 5}, "rounds": 200, "seed": 0}}
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string journal_dir = "sessions";
    std::shared_ptr<const Tokenizer> tokenizer;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const ChatBackend> backend;
    std::map<std::string, std::shared_ptr<const Corpus>> corpora;
    nlohmann::json default_policy = nlohmann::json::object();
    int default_rounds = 200;
    std::uint64_t default_seed = 0;
};

ServiceConfig parse_service_config(const nlohmann::json& j, const std::string& base_dir = ".");
ServiceConfig load_service_config(const std::string& path);

struct CreateSessionRequest {
    std::optional<std::string> task;  // must agree with the corpus when given
    std::string corpus_ref;
    nlohmann::json policy = nlohmann::json::object();  // merged over the defaults
    std::optional<int> rounds;
    std::optional<std::uint64_t> seed;

    static CreateSessionRequest from_json(const nlohmann::json& j);
};

struct RoundDraft {
    int round = 0;
    std::string doc_id;
    std::string context;
    std::string response;
    std::optional<std::string> preference_used;
};

struct EditResult {
    int round = 0;
    std::size_t cost = 0;
    double normalized = 0.0;
    std::optional<std::string> stored_preference;
};

struct SessionMetrics {
    int rounds = 0;
    int scheduled_rounds = 0;
    std::size_t total_cost = 0;
    MetricSeries cumulative;
    MetricSeries normalized;
    MetricSeries zero_cost;
    ExpenseReport expense;
};

enum class SessionStatus { Ready, AwaitingEdit, Finished };
std::string_view to_string(SessionStatus s);

// Live sessions with a human as the editor. Each session is persisted as an
// append-only journal <journal_dir>/<id>.jsonl of events
// (session-created, round-committed, preference-overridden); on startup the
// state of every session is rebuilt by folding its journal. An outstanding
// draft is not journaled: after a restart the session is ready again at its
// last committed round.
//
// Calls on one session serialize; distinct sessions proceed concurrently.
class SessionManager {
public:
    explicit SessionManager(ServiceConfig config);
    ~SessionManager();

    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    // Throws ConfigError (field diagnostics) or NotFoundError (corpus_ref).
    std::string create_session(const CreateSessionRequest& request);
    std::vector<std::string> session_ids() const;

    // ConflictError unless the session is ready.
    RoundDraft next_round(const std::string& id);
    // ConflictError unless a draft is outstanding.
    EditResult submit_edit(const std::string& id, const std::string& revision);
    std::vector<PreferenceView> list_preferences(const std::string& id);
    // NotFoundError for an unknown round; ConflictError for policies
    // without a preference store.
    PreferenceView override_preference(const std::string& id, int round, const std::string& text);
    SessionMetrics get_metrics(const std::string& id);
    std::vector<RoundLog> logs(const std::string& id);
    SessionStatus status(const std::string& id);
    // Committed store contents, for consistency checks.
    std::optional<PreferenceStore> store(const std::string& id);

    const ServiceConfig& config() const noexcept { return config_; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<Session> open(const std::string& id, const nlohmann::json& created);
    void recover();

    ServiceConfig config_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// Registers the JSON routes on `server`:
//   POST /sessions                      -> {"session_id"}
//   GET  /sessions                      -> {"sessions": [...]}
//   GET  /sessions/{id}/round           -> draft
//   POST /sessions/{id}/edit            {"revision"} -> cost
//   GET  /sessions/{id}/preferences     -> [view]
//   PUT  /sessions/{id}/preferences     {"round", "text"} -> view
//   GET  /sessions/{id}/metrics         -> series bundle
//   GET  /sessions/{id}/logs            -> [round log]
// Errors are {"error": kind, "message"} with 400, 404, 409 or 500.
void install_routes(httplib::Server& server, SessionManager& manager);

// Blocks serving until the process is stopped.
void serve(SessionManager& manager);

nlohmann::json to_json(const RoundDraft& d);
nlohmann::json to_json(const EditResult& r);
nlohmann::json to_json(const PreferenceView& v);
nlohmann::json to_json(const SessionMetrics& m);

}  // namespace prelude
