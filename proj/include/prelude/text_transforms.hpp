#pragma once

#include <string>
#include <string_view>
#include <vector>

// Deterministic text rewrites shared by the rule-based user and the
// scripted responder. Each is idempotent on its own output.
namespace prelude::transforms {

inline constexpr std::string_view kClosingLine = "Cheers, the editor.";

// A sentence ends at '.', '!' or '?' followed by whitespace or end of text.
// Trailing text without a terminator counts as a final sentence. Returned
// sentences are trimmed.
std::vector<std::string> split_sentences(std::string_view text);

std::string uppercase(std::string_view text);
bool has_lowercase(std::string_view text);

// One "- " bullet per sentence, one per line.
std::string bulletize(std::string_view text);

// First n sentences joined by single spaces.
std::string first_sentences(std::string_view text, std::size_t n);

std::string append_closing(std::string_view text);
bool ends_with_closing(std::string_view text);

// Applies a transform by name: "uppercase", "bullets", "first-3-sentences",
// "closing". Throws ConfigError for anything else.
std::string apply(std::string_view name, std::string_view text);
bool known(std::string_view name);

}  // namespace prelude::transforms
