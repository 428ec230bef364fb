#pragma once

#include <span>
#include <string>
#include <string_view>

#include "prelude/llm_gateway.hpp"

namespace prelude {

enum class Task { Summarization, Email };

std::string_view to_string(Task t);
// Accepts "summarization" and "email" (also "email-writing"). Throws ConfigError.
Task parse_task(std::string_view s);

struct EditPair {
    std::string response;
    std::string revision;
};

// Prompt text for every LLM call in the harness. Cells of the original
// templates are joined with '\n' where the source table breaks lines; all
// wording (including its typos) is kept as published.
namespace prompts {

// Agent generation conditioned on a preference (empty preference leaves
// the style slot empty).
std::string generation(Task task, std::string_view context, std::string_view preference);

// Latent preference induction. One pair gives the single-revision
// template; several pairs stack the "original/revised" block before the
// question.
std::string inference(Task task, std::span<const EditPair> pairs);

// Consolidation of retrieved preferences, one "- " line each.
std::string aggregation(Task task, std::span<const std::string> preferences);

// ICL-edit generation with retrieved (response, revision) examples.
std::string icl_edit(Task task, std::string_view context, std::span<const EditPair> examples);

// Two-stage simulated user.
std::string user_check(Task task, std::string_view context, std::string_view response,
                       std::string_view latent_preference);
std::string user_revise(Task task, std::string_view response, std::string_view latent_preference);

}  // namespace prompts

ChatRequest render_generation_prompt(std::string_view context, std::string_view preference, Task task);

}  // namespace prelude
