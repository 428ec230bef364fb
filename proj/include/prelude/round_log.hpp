#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/llm_gateway.hpp"

namespace prelude {

// Everything observed in one protocol round. Costs are recomputable from
// the stored texts; `source` is the hidden document source and never reaches
// a policy.
struct RoundLog {
    int round = 0;
    std::string doc_id;
    std::string source;
    std::optional<std::string> preference_used;
    std::string response;
    std::string revision;
    std::size_t cost = 0;
    double normalized = 0.0;
    bool zero_edit = true;
    std::vector<int> retrieved_rounds;
    std::optional<std::string> stored_preference;
    TokenUsage agent_usage;
    TokenUsage user_usage;
    std::vector<LedgerEntry> calls;

    bool operator==(const RoundLog&) const = default;
};

// One compact JSON object, keys in a fixed order; no trailing newline.
std::string to_json_line(const RoundLog& log);
RoundLog round_log_from_json(std::string_view line);

// Parses a line-delimited log file body. Throws LoadError with the line number.
std::vector<RoundLog> parse_round_logs(std::string_view jsonl, std::string_view origin = "<memory>");
std::vector<RoundLog> read_round_logs(const std::string& path);

}  // namespace prelude
