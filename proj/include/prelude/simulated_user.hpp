#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/llm_gateway.hpp"
#include "prelude/prompts.hpp"

namespace prelude {

// Ground-truth preference per document source, per task. Visible only to
// the simulated user and the evaluator.
class LatentPreferenceRegistry {
public:
    LatentPreferenceRegistry() = default;

    // The nine source-conditioned preferences used by the GPT-4 user.
    static LatentPreferenceRegistry defaults();
    // {"summarization": {"<source>": "<preference>", ...}, "email": {...}}
    static LatentPreferenceRegistry from_json(std::string_view text, std::string_view origin = "<memory>");
    static LatentPreferenceRegistry load(const std::string& path);

    void set(Task task, std::string source, std::string preference);

    // Throws NotFoundError for an unknown source.
    const std::string& preference(Task task, const std::string& source) const;
    bool contains(Task task, const std::string& source) const;
    std::vector<std::string> sources(Task task) const;
    const std::map<std::string, std::string>& entries(Task task) const;

private:
    std::map<Task, std::map<std::string, std::string>> entries_;
};

// Deterministic stand-in for the editing user.
struct EditRule {
    std::string rule_id;
    std::string description;  // the latent preference text this rule embodies
    std::function<std::string(std::string_view)> transform;
    std::function<bool(std::string_view)> satisfied;
};

// "uppercase", "bullets", "first-3-sentences", "closing". Throws ConfigError.
EditRule builtin_rule(std::string_view rule_id);
std::vector<std::string> builtin_rule_ids();

// Response unchanged when the rule is satisfied, otherwise its transform.
std::string rule_user_edit(std::string_view response, const EditRule& rule);

// First alphabetic word equals "yes" (case-insensitive). Anything other
// than a leading yes/no sets `anomaly`.
bool parse_yes_no(std::string_view reply, bool* anomaly = nullptr);

struct UserEditResult {
    std::string revision;
    bool satisfied = false;
    bool parse_anomaly = false;
};

class UserSimulator {
public:
    virtual ~UserSimulator() = default;
    virtual UserEditResult edit(std::string_view context, std::string_view response, const std::string& source) = 0;
};

// Rule mode: each source maps to a built-in rule.
class RuleUser final : public UserSimulator {
public:
    explicit RuleUser(std::map<std::string, std::string> source_to_rule);

    UserEditResult edit(std::string_view context, std::string_view response, const std::string& source) override;

    const EditRule& rule_for(const std::string& source) const;
    // Registry whose preference texts are the rule descriptions.
    LatentPreferenceRegistry registry(Task task) const;

private:
    std::map<std::string, EditRule> rules_;
};

// Two-stage LLM user: a yes/no satisfaction check, then a revision only on "no".
class LlmUser final : public UserSimulator {
public:
    LlmUser(Gateway& gateway, Task task, LatentPreferenceRegistry registry);

    UserEditResult edit(std::string_view context, std::string_view response, const std::string& source) override;

    bool satisfaction_check(std::string_view context, std::string_view response, std::string_view latent,
                            bool* anomaly = nullptr);
    std::string revise(std::string_view response, std::string_view latent);

    // Replies that did not start with yes or no.
    const std::vector<std::string>& anomalies() const noexcept { return anomalies_; }
    const LatentPreferenceRegistry& registry() const noexcept { return registry_; }

private:
    Gateway& gateway_;
    Task task_;
    LatentPreferenceRegistry registry_;
    std::vector<std::string> anomalies_;
};

}  // namespace prelude
