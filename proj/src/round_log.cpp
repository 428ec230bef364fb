#include "prelude/round_log.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"

namespace prelude {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json usage_json(const TokenUsage& u) {
    return ordered_json{{"input", u.input_tokens}, {"output", u.output_tokens}};
}

TokenUsage usage_from(const ordered_json& j) {
    return {j.at("input").get<std::size_t>(), j.at("output").get<std::size_t>()};
}

ordered_json optional_text(const std::optional<std::string>& s) {
    return s ? ordered_json(*s) : ordered_json(nullptr);
}

std::optional<std::string> optional_text_from(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

}  // namespace

std::string to_json_line(const RoundLog& log) {
    ordered_json calls = ordered_json::array();
    for (const auto& c : log.calls) {
        calls.push_back({{"caller_role", std::string(to_string(c.caller_role))},
                         {"purpose", std::string(to_string(c.purpose))},
                         {"usage", usage_json(c.usage)},
                         {"usage_source", c.source == UsageSource::Provider ? "provider" : "tokenizer"},
                         {"attempts", c.attempts}});
    }
    ordered_json j = {{"round", log.round},
                      {"doc_id", log.doc_id},
                      {"source", log.source},
                      {"preference_used", optional_text(log.preference_used)},
                      {"response", log.response},
                      {"revision", log.revision},
                      {"cost", log.cost},
                      {"normalized", log.normalized},
                      {"zero_edit", log.zero_edit},
                      {"retrieved_rounds", log.retrieved_rounds},
                      {"stored_preference", optional_text(log.stored_preference)},
                      {"agent_usage", usage_json(log.agent_usage)},
                      {"user_usage", usage_json(log.user_usage)},
                      {"calls", calls}};
    return j.dump();
}

RoundLog round_log_from_json(std::string_view line) {
    auto j = ordered_json::parse(line);
    RoundLog log;
    log.round = j.at("round").get<int>();
    log.doc_id = j.at("doc_id").get<std::string>();
    log.source = j.at("source").get<std::string>();
    log.preference_used = optional_text_from(j.at("preference_used"));
    log.response = j.at("response").get<std::string>();
    log.revision = j.at("revision").get<std::string>();
    log.cost = j.at("cost").get<std::size_t>();
    log.normalized = j.at("normalized").get<double>();
    log.zero_edit = j.at("zero_edit").get<bool>();
    log.retrieved_rounds = j.at("retrieved_rounds").get<std::vector<int>>();
    log.stored_preference = optional_text_from(j.at("stored_preference"));
    log.agent_usage = usage_from(j.at("agent_usage"));
    log.user_usage = usage_from(j.at("user_usage"));
    for (const auto& c : j.at("calls")) {
        LedgerEntry e;
        e.round = log.round;
        e.caller_role = parse_caller_role(c.at("caller_role").get<std::string>());
        e.purpose = parse_purpose(c.at("purpose").get<std::string>());
        e.usage = usage_from(c.at("usage"));
        e.source = c.at("usage_source").get<std::string>() == "provider" ? UsageSource::Provider : UsageSource::Tokenizer;
        e.attempts = c.at("attempts").get<int>();
        log.calls.push_back(e);
    }
    return log;
}

std::vector<RoundLog> parse_round_logs(std::string_view jsonl, std::string_view origin) {
    std::vector<RoundLog> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < jsonl.size()) {
        auto eol = jsonl.find('\n', pos);
        if (eol == std::string_view::npos) eol = jsonl.size();
        auto line = jsonl.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(round_log_from_json(line));
        } catch (const std::exception& e) {
            throw LoadError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<RoundLog> read_round_logs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read round log '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_round_logs(buf.str(), path);
}

}  // namespace prelude
