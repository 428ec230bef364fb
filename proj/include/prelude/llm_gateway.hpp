#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/http_client.hpp"
#include "prelude/text_units.hpp"

namespace prelude {

enum class MessageRole { System, User };
enum class CallerRole { Agent, UserSimulator };
enum class Purpose { Generate, Aggregate, Infer, UserCheck, UserEdit };

std::string_view to_string(MessageRole r);
std::string_view to_string(CallerRole r);
std::string_view to_string(Purpose p);
CallerRole parse_caller_role(std::string_view s);
Purpose parse_purpose(std::string_view s);

struct ChatMessage {
    MessageRole role = MessageRole::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    bool greedy = true;
    CallerRole caller_role = CallerRole::Agent;
    Purpose purpose = Purpose::Generate;

    // Single-user-message request, the shape every template produces.
    static ChatRequest user_prompt(std::string prompt, CallerRole caller, Purpose purpose);

    // Message contents joined by '\n'.
    std::string joined_content() const;
    // Stable hex digest over roles, contents, caller and purpose.
    std::string digest() const;

    bool operator==(const ChatRequest&) const = default;
};

struct TokenUsage {
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;

    std::size_t total() const noexcept { return input_tokens + output_tokens; }
    TokenUsage& operator+=(const TokenUsage& o) noexcept {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

enum class UsageSource { Tokenizer, Provider };

struct LedgerEntry {
    int round = 0;
    CallerRole caller_role = CallerRole::Agent;
    Purpose purpose = Purpose::Generate;
    TokenUsage usage;
    UsageSource source = UsageSource::Tokenizer;
    int attempts = 1;

    bool operator==(const LedgerEntry&) const = default;
};

struct UsageTotals {
    std::size_t input = 0;
    std::size_t output = 0;
    std::size_t total = 0;

    bool operator==(const UsageTotals&) const = default;
};

// Append-only record of every LLM call. Appends are serialized.
class UsageLedger {
public:
    UsageLedger() = default;
    UsageLedger(const UsageLedger& other);
    UsageLedger& operator=(const UsageLedger& other);

    void append(LedgerEntry entry);
    std::vector<LedgerEntry> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<LedgerEntry> entries_;
};

UsageTotals usage_total(const UsageLedger& ledger, std::optional<CallerRole> filter = std::nullopt);
UsageTotals usage_total(const std::vector<LedgerEntry>& entries, std::optional<CallerRole> filter = std::nullopt,
                        std::optional<Purpose> purpose = std::nullopt);

struct BackendReply {
    std::string text;
    std::optional<TokenUsage> reported_usage;
    int attempts = 1;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual BackendReply reply(const ChatRequest& request) const = 0;
};

// Rule table for tests and desk-scale runs. Rules are tried in order; the
// first whose purpose and predicates all match produces the reply.
//
// Fixture format (JSON):
//   {"rules": [{"name": "...", "purpose": "generate",
//               "contains": ["substring", ...], "matches": "<ECMAScript regex>",
//               "response": "fixed text"
//                 | "echo": {"after": "Article: ", "until": "\n"},
//               "transform": "uppercase" | "bullets" | "first-3-sentences" | "closing"}]}
//
// "echo" copies the prompt text between the first "after" marker and the
// next "until" marker (or the end), then applies the optional transform.
class ScriptedBackend final : public ChatBackend {
public:
    struct Rule {
        std::string name;
        std::optional<Purpose> purpose;
        std::vector<std::string> contains;
        std::string matches_source;
        std::optional<std::regex> matches;
        std::optional<std::string> response;
        std::optional<std::pair<std::string, std::string>> echo;
        std::string transform;
    };

    explicit ScriptedBackend(std::vector<Rule> rules);
    static std::shared_ptr<ScriptedBackend> from_json(std::string_view fixture, std::string_view origin = "<memory>");
    static std::shared_ptr<ScriptedBackend> load(const std::string& path);

    BackendReply reply(const ChatRequest& request) const override;

private:
    std::vector<Rule> rules_;
};

// OpenAI-compatible POST {base_url}/chat/completions with temperature 0.
class RemoteChatBackend final : public ChatBackend {
public:
    struct Options {
        std::string base_url;
        std::string model;
        std::string api_key_env = "OPENAI_API_KEY";
        RetryPolicy retry;
    };

    explicit RemoteChatBackend(Options options);
    BackendReply reply(const ChatRequest& request) const override;

private:
    Options options_;
};

struct Completion {
    std::string text;
    TokenUsage usage;
};

// Per-session front end over a shared backend. Token counts are computed
// with the configured tokenizer unless the backend reports its own.
class Gateway {
public:
    Gateway(std::shared_ptr<const ChatBackend> backend, std::shared_ptr<const Tokenizer> tokenizer);

    Completion complete(const ChatRequest& request);

    // Round index stamped on subsequent ledger entries.
    void set_round(int round) noexcept { round_ = round; }
    int round() const noexcept { return round_; }

    UsageLedger& ledger() noexcept { return ledger_; }
    const UsageLedger& ledger() const noexcept { return ledger_; }
    const Tokenizer& tokenizer() const noexcept { return *tokenizer_; }

    // Usage as the local tokenizer counts it.
    TokenUsage count_usage(const ChatRequest& request, std::string_view response) const;

private:
    std::shared_ptr<const ChatBackend> backend_;
    std::shared_ptr<const Tokenizer> tokenizer_;
    UsageLedger ledger_;
    int round_ = 0;
};

}  // namespace prelude
