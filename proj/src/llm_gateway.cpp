#include "prelude/llm_gateway.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"
#include "prelude/hash.hpp"
#include "prelude/text_transforms.hpp"

namespace prelude {

using nlohmann::json;

std::string_view to_string(MessageRole r) { return r == MessageRole::System ? "system" : "user"; }

std::string_view to_string(CallerRole r) { return r == CallerRole::Agent ? "agent" : "user-simulator"; }

std::string_view to_string(Purpose p) {
    switch (p) {
        case Purpose::Generate: return "generate";
        case Purpose::Aggregate: return "aggregate";
        case Purpose::Infer: return "infer";
        case Purpose::UserCheck: return "user-check";
        case Purpose::UserEdit: return "user-edit";
    }
    return "?";
}

CallerRole parse_caller_role(std::string_view s) {
    if (s == "agent") return CallerRole::Agent;
    if (s == "user-simulator") return CallerRole::UserSimulator;
    throw ConfigError("unknown caller role '" + std::string(s) + "'");
}

Purpose parse_purpose(std::string_view s) {
    for (auto p : {Purpose::Generate, Purpose::Aggregate, Purpose::Infer, Purpose::UserCheck, Purpose::UserEdit})
        if (to_string(p) == s) return p;
    throw ConfigError("unknown purpose '" + std::string(s) + "'");
}

ChatRequest ChatRequest::user_prompt(std::string prompt, CallerRole caller, Purpose purpose) {
    ChatRequest r;
    r.messages.push_back({MessageRole::User, std::move(prompt)});
    r.caller_role = caller;
    r.purpose = purpose;
    return r;
}

std::string ChatRequest::joined_content() const {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i) out += '\n';
        out += messages[i].content;
    }
    return out;
}

std::string ChatRequest::digest() const {
    std::string buf;
    buf += to_string(caller_role);
    buf += '\x1f';
    buf += to_string(purpose);
    buf += greedy ? "\x1fg" : "\x1fs";
    for (const auto& m : messages) {
        buf += '\x1e';
        buf += to_string(m.role);
        buf += '\x1f';
        buf += m.content;
    }
    return hex_digest(buf);
}

// ---------------------------------------------------------------------------

UsageLedger::UsageLedger(const UsageLedger& other) : entries_(other.entries()) {}

UsageLedger& UsageLedger::operator=(const UsageLedger& other) {
    if (this != &other) {
        auto copy = other.entries();
        std::lock_guard lock(mu_);
        entries_ = std::move(copy);
    }
    return *this;
}

void UsageLedger::append(LedgerEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(entry);
}

std::vector<LedgerEntry> UsageLedger::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t UsageLedger::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

UsageTotals usage_total(const std::vector<LedgerEntry>& entries, std::optional<CallerRole> filter,
                        std::optional<Purpose> purpose) {
    UsageTotals t;
    for (const auto& e : entries) {
        if (filter && e.caller_role != *filter) continue;
        if (purpose && e.purpose != *purpose) continue;
        t.input += e.usage.input_tokens;
        t.output += e.usage.output_tokens;
    }
    t.total = t.input + t.output;
    return t;
}

UsageTotals usage_total(const UsageLedger& ledger, std::optional<CallerRole> filter) {
    return usage_total(ledger.entries(), filter);
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {
    for (const auto& r : rules_) {
        if (r.response.has_value() == r.echo.has_value())
            throw ConfigError("scripted rule '" + r.name + "' needs exactly one of response/echo");
        if (!r.transform.empty() && !transforms::known(r.transform))
            throw ConfigError("scripted rule '" + r.name + "' uses unknown transform '" + r.transform + "'");
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(std::string_view fixture, std::string_view origin) {
    std::vector<Rule> rules;
    try {
        auto doc = json::parse(fixture);
        std::size_t idx = 0;
        for (const auto& j : doc.at("rules")) {
            Rule r;
            r.name = j.value("name", "rule#" + std::to_string(idx));
            if (j.contains("purpose")) r.purpose = parse_purpose(j.at("purpose").get<std::string>());
            if (j.contains("contains")) {
                if (j.at("contains").is_string())
                    r.contains.push_back(j.at("contains").get<std::string>());
                else
                    r.contains = j.at("contains").get<std::vector<std::string>>();
            }
            if (j.contains("matches")) {
                r.matches_source = j.at("matches").get<std::string>();
                try {
                    r.matches.emplace(r.matches_source, std::regex::ECMAScript);
                } catch (const std::regex_error& e) {
                    throw ConfigError("scripted rule '" + r.name + "': bad regex: " + e.what());
                }
            }
            if (j.contains("response")) r.response = j.at("response").get<std::string>();
            if (j.contains("echo")) {
                const auto& e = j.at("echo");
                r.echo.emplace(e.at("after").get<std::string>(), e.value("until", ""));
            }
            r.transform = j.value("transform", "");
            rules.push_back(std::move(r));
            ++idx;
        }
    } catch (const json::exception& e) {
        throw LoadError(std::string(origin) + ": " + e.what());
    }
    return std::make_shared<ScriptedBackend>(std::move(rules));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open scripted fixture '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), path);
}

BackendReply ScriptedBackend::reply(const ChatRequest& request) const {
    const auto prompt = request.joined_content();
    for (const auto& r : rules_) {
        if (r.purpose && *r.purpose != request.purpose) continue;
        bool ok = true;
        for (const auto& needle : r.contains) {
            if (prompt.find(needle) == std::string::npos) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (r.matches && !std::regex_search(prompt, *r.matches)) continue;

        std::string text;
        if (r.response) {
            text = *r.response;
        } else {
            const auto& [after, until] = *r.echo;
            auto start = prompt.find(after);
            if (start == std::string::npos) continue;
            start += after.size();
            auto end = until.empty() ? std::string::npos : prompt.find(until, start);
            text = prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
        }
        if (!r.transform.empty()) text = transforms::apply(r.transform, text);
        return {std::move(text), std::nullopt, 1};
    }
    throw ConfigError("no scripted rule matches purpose '" + std::string(to_string(request.purpose)) +
                      "' (request digest " + request.digest() + ")");
}

// ---------------------------------------------------------------------------

RemoteChatBackend::RemoteChatBackend(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw ConfigError("remote LLM backend needs a base_url");
    if (options_.model.empty()) throw ConfigError("remote LLM backend needs a model");
}

BackendReply RemoteChatBackend::reply(const ChatRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    json body = {{"model", options_.model}, {"messages", messages}};
    if (request.greedy) body["temperature"] = 0;

    std::vector<std::pair<std::string, std::string>> headers;
    if (auto key = credential_from_env(options_.api_key_env); !key.empty())
        headers.emplace_back("Authorization", "Bearer " + key);

    auto res = post_json(options_.base_url, "/chat/completions", body.dump(), headers, options_.retry);
    BackendReply out;
    out.attempts = res.attempts;
    try {
        auto parsed = json::parse(res.body);
        out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        if (parsed.contains("usage") && parsed["usage"].is_object()) {
            const auto& u = parsed["usage"];
            if (u.contains("prompt_tokens") && u.contains("completion_tokens"))
                out.reported_usage = TokenUsage{u["prompt_tokens"].get<std::size_t>(),
                                                u["completion_tokens"].get<std::size_t>()};
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat completion response: ") + e.what(), res.attempts);
    }
    return out;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<const ChatBackend> backend, std::shared_ptr<const Tokenizer> tokenizer)
    : backend_(std::move(backend)), tokenizer_(std::move(tokenizer)) {
    if (!backend_) throw ConfigError("gateway has no backend configured");
    if (!tokenizer_) throw ConfigError("gateway has no tokenizer configured");
}

TokenUsage Gateway::count_usage(const ChatRequest& request, std::string_view response) const {
    TokenUsage u;
    for (const auto& m : request.messages) u.input_tokens += tokenizer_->count(m.content);
    u.output_tokens = tokenizer_->count(response);
    return u;
}

Completion Gateway::complete(const ChatRequest& request) {
    if (request.messages.empty()) throw UsageError("chat request has no messages");
    auto reply = backend_->reply(request);
    LedgerEntry entry;
    entry.round = round_;
    entry.caller_role = request.caller_role;
    entry.purpose = request.purpose;
    entry.attempts = reply.attempts;
    if (reply.reported_usage) {
        entry.usage = *reply.reported_usage;
        entry.source = UsageSource::Provider;
    } else {
        entry.usage = count_usage(request, reply.text);
        entry.source = UsageSource::Tokenizer;
    }
    ledger_.append(entry);
    return {std::move(reply.text), entry.usage};
}

}  // namespace prelude
