#include "prelude/session_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "prelude/config.hpp"
#include "prelude/error.hpp"

namespace prelude {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// One event per write(2) on an O_APPEND descriptor, then fsync.
void append_event(const fs::path& path, const json& event) {
    auto line = event.dump() + "\n";
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open journal '" + path.string() + "': " + std::strerror(errno));
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        auto n = ::write(fd, p, left);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            int err = errno;
            ::close(fd);
            throw IoError("write to journal '" + path.string() + "' failed: " + std::strerror(err));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

std::string new_session_id() {
    static std::mutex mu;
    static std::random_device rd;
    std::lock_guard lock(mu);
    std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    static const char* hex = "0123456789abcdef";
    std::string id(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) id[static_cast<std::size_t>(i)] = hex[v & 0xf];
    return id;
}

bool valid_session_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
}

json series_json(const MetricSeries& s) {
    json points = json::array();
    for (const auto& p : s.points) points.push_back({{"round", p.round}, {"value", p.value}});
    return {{"name", s.name}, {"bin", s.bin}, {"points", points}};
}

json totals_json(const UsageTotals& t) {
    return {{"input", t.input}, {"output", t.output}, {"total", t.total}};
}

json optional_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Ready: return "ready";
        case SessionStatus::AwaitingEdit: return "awaiting-edit";
        case SessionStatus::Finished: return "finished";
    }
    return "?";
}

ServiceConfig parse_service_config(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("config: expected an object");
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (fs::path(base_dir) / p).lexically_normal().string();
    };
    ServiceConfig c;
    try {
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.journal_dir = resolve(j.value("journal_dir", c.journal_dir));
    } catch (const json::exception&) {
        throw ConfigError("host/port/journal_dir: wrong type");
    }
    if (c.port < 0 || c.port > 65535) throw ConfigError("port: out of range");
    c.tokenizer = make_tokenizer(j.value("tokenizer", json::object()), base_dir);
    c.embedder = make_embedder(j.value("embedder", json::object()));
    c.backend = make_backend(j.value("backend", json::object()), base_dir);

    auto corpora = j.value("corpora", json::object());
    if (!corpora.is_object()) throw ConfigError("corpora: expected an object");
    for (const auto& [ref, spec] : corpora.items()) {
        auto where = "corpora." + ref;
        if (!spec.is_object() || !spec.contains("path") || !spec["path"].is_string())
            throw ConfigError(where + ".path: required");
        Task task;
        try {
            task = parse_task(spec.value("task", std::string("summarization")));
        } catch (const Error&) {
            throw ConfigError(where + ".task: unknown task");
        }
        c.corpora[ref] = std::make_shared<const Corpus>(load_corpus(resolve(spec["path"].get<std::string>()), task));
    }

    auto defaults = j.value("defaults", json::object());
    c.default_policy = defaults.value("policy", json::object());
    parse_policy_config(c.default_policy, "defaults.policy");
    c.default_rounds = defaults.value("rounds", c.default_rounds);
    c.default_seed = defaults.value("seed", c.default_seed);
    return c;
}

ServiceConfig load_service_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    } catch (const IoError&) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    auto dir = fs::path(path).parent_path().string();
    return parse_service_config(j, dir.empty() ? "." : dir);
}

CreateSessionRequest CreateSessionRequest::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("body: expected a JSON object");
    CreateSessionRequest r;
    try {
        if (j.contains("task")) r.task = j.at("task").get<std::string>();
        r.corpus_ref = j.value("corpus", std::string());
        if (j.contains("policy")) r.policy = j.at("policy");
        if (j.contains("rounds")) r.rounds = j.at("rounds").get<int>();
        if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception&) {
        throw ConfigError("body: task/corpus/policy/rounds/seed has the wrong type");
    }
    if (r.corpus_ref.empty()) throw ConfigError("corpus: required");
    if (!r.policy.is_object()) throw ConfigError("policy: expected an object");
    return r;
}

// ---------------------------------------------------------------------------

struct SessionManager::Session {
    std::string id;
    fs::path journal;
    std::shared_ptr<const Corpus> corpus;
    RunComponents components;
    std::unique_ptr<Episode> episode;
    std::optional<Draft> pending;
    std::mutex mu;

    CipherPolicy* cipher() { return dynamic_cast<CipherPolicy*>(&episode->policy()); }

    SessionStatus status() const {
        if (pending) return SessionStatus::AwaitingEdit;
        return episode->done() ? SessionStatus::Finished : SessionStatus::Ready;
    }
};

SessionManager::SessionManager(ServiceConfig config) : config_(std::move(config)) {
    std::error_code ec;
    fs::create_directories(config_.journal_dir, ec);
    if (ec) throw IoError("cannot create journal directory '" + config_.journal_dir + "': " + ec.message());
    recover();
}

SessionManager::~SessionManager() = default;

std::shared_ptr<SessionManager::Session> SessionManager::open(const std::string& id, const json& created) {
    auto ref = created.at("corpus").get<std::string>();
    auto it = config_.corpora.find(ref);
    if (it == config_.corpora.end()) throw NotFoundError("corpus: unknown corpus '" + ref + "'");

    auto s = std::make_shared<Session>();
    s->id = id;
    s->journal = fs::path(config_.journal_dir) / (id + ".jsonl");
    s->corpus = it->second;
    s->components.policy = parse_policy_config(created.at("policy"));
    if (s->components.policy.kind == PolicyKind::Oracle)
        throw ConfigError("policy.kind: oracle needs a simulated user's latent preference");
    s->components.tokenizer = config_.tokenizer;
    s->components.embedder = config_.embedder;
    s->components.backend = config_.backend;
    Schedule schedule{created.at("schedule").get<std::vector<std::string>>(), created.at("seed").get<std::uint64_t>()};
    s->episode = std::make_unique<Episode>(*s->corpus, std::move(schedule), s->components);
    return s;
}

void SessionManager::recover() {
    for (const auto& entry : fs::directory_iterator(config_.journal_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
        auto id = entry.path().stem().string();
        auto text = read_file(entry.path());
        // A torn final event (crash mid-write) was never acknowledged; drop it.
        auto end = text.rfind('\n');
        auto complete = end == std::string::npos ? 0 : end + 1;
        if (complete != text.size()) {
            fs::resize_file(entry.path(), complete);
            text.resize(complete);
        }
        if (text.empty()) continue;

        std::shared_ptr<Session> session;
        std::size_t pos = 0, line_no = 0;
        while (pos < text.size()) {
            auto eol = text.find('\n', pos);
            auto line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;
            auto where = entry.path().string() + ":" + std::to_string(line_no) + ": ";
            try {
                auto event = json::parse(line);
                auto kind = event.at("event").get<std::string>();
                if (!session) {
                    if (kind != "session-created") throw LoadError("journal must start with session-created");
                    session = open(id, event);
                } else if (kind == "round-committed") {
                    session->episode->replay(round_log_from_json(event.at("log").dump()));
                } else if (kind == "preference-overridden") {
                    auto* cipher = session->cipher();
                    if (!cipher) throw LoadError("override on a policy without a store");
                    cipher->override_preference(event.at("round").get<int>(), event.at("text").get<std::string>());
                } else {
                    throw LoadError("unknown event '" + kind + "'");
                }
            } catch (const LoadError& e) {
                throw LoadError(where + e.what());
            } catch (const std::exception& e) {
                throw LoadError(where + e.what());
            }
        }
        std::lock_guard lock(mu_);
        sessions_[id] = session;
    }
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

std::string SessionManager::create_session(const CreateSessionRequest& request) {
    auto it = config_.corpora.find(request.corpus_ref);
    if (it == config_.corpora.end()) throw NotFoundError("corpus: unknown corpus '" + request.corpus_ref + "'");
    const auto& corpus = *it->second;
    if (request.task) {
        Task task;
        try {
            task = parse_task(*request.task);
        } catch (const Error&) {
            throw ConfigError("task: unknown task '" + *request.task + "'");
        }
        if (task != corpus.task())
            throw ConfigError("task: corpus '" + request.corpus_ref + "' is a " + std::string(to_string(corpus.task())) +
                              " corpus");
    }

    json policy = config_.default_policy;
    policy.merge_patch(request.policy);
    auto pc = parse_policy_config(policy);
    policy = {{"kind", std::string(to_string(pc.kind))}, {"k", pc.k}, {"delta", pc.delta},
              {"explore_rounds", pc.explore_rounds}};
    auto rounds = request.rounds.value_or(config_.default_rounds);
    if (rounds < 1) throw ConfigError("rounds: must be >= 1");
    auto seed = request.seed.value_or(config_.default_seed);
    auto schedule = schedule_rounds(corpus, rounds, seed);

    std::string id;
    do {
        id = new_session_id();
    } while (fs::exists(fs::path(config_.journal_dir) / (id + ".jsonl")));

    json created = {{"event", "session-created"}, {"session_id", id},
                    {"task", std::string(to_string(corpus.task()))}, {"corpus", request.corpus_ref},
                    {"policy", policy}, {"rounds", rounds}, {"seed", seed}, {"schedule", schedule.rounds}};
    auto session = open(id, created);
    append_event(session->journal, created);
    std::lock_guard lock(mu_);
    sessions_[id] = session;
    return id;
}

std::vector<std::string> SessionManager::session_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

RoundDraft SessionManager::next_round(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->pending) throw ConflictError("round " + std::to_string(s->pending->round) + " is awaiting an edit");
    if (s->episode->done()) throw ConflictError("all scheduled rounds are committed");
    const auto& doc = s->episode->next_document();
    auto draft = s->episode->begin_round();
    s->pending = draft;
    return {draft.round, doc.doc_id, draft.context, draft.response, draft.preference_used};
}

EditResult SessionManager::submit_edit(const std::string& id, const std::string& revision) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (!s->pending) throw ConflictError("no draft is awaiting an edit");
    auto log = s->episode->commit_round(*s->pending, revision);
    s->pending.reset();
    append_event(s->journal, {{"event", "round-committed"}, {"log", json::parse(to_json_line(log))}});
    return {log.round, log.cost, log.normalized, log.stored_preference};
}

std::vector<PreferenceView> SessionManager::list_preferences(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    auto* cipher = s->cipher();
    return cipher ? cipher->store().views() : std::vector<PreferenceView>{};
}

PreferenceView SessionManager::override_preference(const std::string& id, int round, const std::string& text) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    auto* cipher = s->cipher();
    if (!cipher)
        throw ConflictError("policy '" + s->components.policy.label() + "' keeps no preference store");
    auto view = cipher->override_preference(round, text);
    append_event(s->journal, {{"event", "preference-overridden"}, {"round", round}, {"text", text}});
    return view;
}

SessionMetrics SessionManager::get_metrics(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    const auto& logs = s->episode->logs();
    SessionMetrics m;
    m.rounds = static_cast<int>(logs.size());
    m.scheduled_rounds = static_cast<int>(s->episode->schedule().rounds.size());
    for (const auto& l : logs) m.total_cost += l.cost;
    m.cumulative = cumulative_cost(logs);
    m.normalized = binned_normalized(logs);
    m.zero_cost = zero_cost_fraction(logs);
    m.expense = expense_report(ledger_entries(logs));
    return m;
}

std::vector<RoundLog> SessionManager::logs(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return s->episode->logs();
}

SessionStatus SessionManager::status(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return s->status();
}

std::optional<PreferenceStore> SessionManager::store(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    auto* cipher = s->cipher();
    if (!cipher) return std::nullopt;
    return cipher->store();
}

// ---------------------------------------------------------------------------

json to_json(const RoundDraft& d) {
    return {{"round", d.round}, {"doc_id", d.doc_id}, {"context", d.context}, {"draft_response", d.response},
            {"preference_used", optional_json(d.preference_used)}};
}

json to_json(const EditResult& r) {
    return {{"round", r.round}, {"cost", r.cost}, {"normalized", r.normalized},
            {"stored_preference", optional_json(r.stored_preference)}};
}

json to_json(const PreferenceView& v) {
    return {{"round", v.round}, {"preference", v.preference}, {"active", v.active}, {"revision", v.revision}};
}

json to_json(const SessionMetrics& m) {
    return {{"rounds", m.rounds},
            {"scheduled_rounds", m.scheduled_rounds},
            {"total_cost", m.total_cost},
            {"cumulative_cost", series_json(m.cumulative)},
            {"binned_normalized", series_json(m.normalized)},
            {"zero_cost_fraction", series_json(m.zero_cost)},
            {"expense", {{"agent", totals_json(m.expense.agent)}, {"user_simulator", totals_json(m.expense.user_simulator)}}}};
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const NotFoundError& e) {
            reply(res, 404, {{"error", "not-found"}, {"message", e.what()}});
        } catch (const ConflictError& e) {
            reply(res, 409, {{"error", "conflict"}, {"message", e.what()}});
        } catch (const ConfigError& e) {
            reply(res, 400, {{"error", "invalid-config"}, {"message", e.what()}});
        } catch (const UsageError& e) {
            reply(res, 400, {{"error", "bad-request"}, {"message", e.what()}});
        } catch (const json::exception& e) {
            reply(res, 400, {{"error", "bad-request"}, {"message", std::string("invalid JSON body: ") + e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    };
}

std::string session_id(const httplib::Request& req) {
    auto id = req.matches[1].str();
    if (!valid_session_id(id)) throw NotFoundError("unknown session '" + id + "'");
    return id;
}

json body_object(const httplib::Request& req) {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw UsageError("body must be a JSON object");
    return j;
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& m) {
    server.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        auto body = req.body.empty() ? json::object() : json::parse(req.body);
        auto id = m.create_session(CreateSessionRequest::from_json(body));
        reply(res, 201, {{"session_id", id}});
    }));
    server.Get("/sessions", guarded([&m](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& id : m.session_ids())
            list.push_back({{"session_id", id}, {"status", std::string(to_string(m.status(id)))}});
        reply(res, 200, {{"sessions", list}});
    }));
    server.Get(R"(/sessions/([^/]+)/round)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, to_json(m.next_round(session_id(req))));
    }));
    server.Post(R"(/sessions/([^/]+)/edit)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        auto id = session_id(req);
        auto body = body_object(req);
        if (!body.contains("revision") || !body["revision"].is_string())
            throw UsageError("revision: required string");
        reply(res, 200, to_json(m.submit_edit(id, body["revision"].get<std::string>())));
    }));
    server.Get(R"(/sessions/([^/]+)/preferences)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        json list = json::array();
        for (const auto& v : m.list_preferences(session_id(req))) list.push_back(to_json(v));
        reply(res, 200, list);
    }));
    server.Put(R"(/sessions/([^/]+)/preferences)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        auto id = session_id(req);
        auto body = body_object(req);
        if (!body.contains("round") || !body["round"].is_number_integer()) throw UsageError("round: required integer");
        if (!body.contains("text") || !body["text"].is_string()) throw UsageError("text: required string");
        reply(res, 200, to_json(m.override_preference(id, body["round"].get<int>(), body["text"].get<std::string>())));
    }));
    server.Get(R"(/sessions/([^/]+)/metrics)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, to_json(m.get_metrics(session_id(req))));
    }));
    server.Get(R"(/sessions/([^/]+)/logs)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        json list = json::array();
        for (const auto& l : m.logs(session_id(req))) list.push_back(json::parse(to_json_line(l)));
        reply(res, 200, list);
    }));
}

void serve(SessionManager& manager) {
    httplib::Server server;
    install_routes(server, manager);
    const auto& c = manager.config();
    int port = c.port;
    if (port == 0) {
        port = server.bind_to_any_port(c.host);
        if (port < 0) throw IoError("cannot bind " + c.host);
    } else if (!server.bind_to_port(c.host, port)) {
        throw IoError("cannot bind " + c.host + ":" + std::to_string(port));
    }
    std::cout << "listening on http://" << c.host << ":" << port << std::endl;
    if (!server.listen_after_bind()) throw IoError("server stopped unexpectedly");
}

}  // namespace prelude
