#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "prelude/environments.hpp"

namespace prelude {

// Run configuration as JSON. Relative paths resolve against `base_dir`.
//
//   {"task": "summarization",
//    "corpus": "docs.jsonl", "rounds": 200, "seed": 7,
//    "tokenizer": {"kind": "fallback"} | {"kind": "bpe", "path": "cl100k.tiktoken"},
//    "embedder":  {"kind": "hash", "dimension": 256}
//               | {"kind": "remote", "base_url": ..., "model": ..., "api_key_env": ...},
//    "backend":   {"kind": "scripted", "rules": "rules.json" | {"rules": [...]}}
//               | {"kind": "remote", "base_url": ..., "model": ..., "api_key_env": ...},
//    "policy":    {"kind": "cipher", "k": 5, "delta": 0, "explore_rounds": 5},
//    "user":      {"mode": "rule", "rules": {"source": "uppercase", ...}}
//               | {"mode": "llm", "registry": "latent.json"},
//    "scorer":    "token-f1"}
//
// Every field except "corpus" has a default. Errors are ConfigError with
// the dotted field name first.
struct ExperimentConfig {
    Task task = Task::Summarization;
    std::string corpus_path;
    int rounds = 200;
    std::uint64_t seed = 0;
    RunComponents components;
    UserConfig user;
};

PolicyConfig parse_policy_config(const nlohmann::json& j, std::string_view field = "policy");
std::shared_ptr<const Tokenizer> make_tokenizer(const nlohmann::json& j, const std::string& base_dir = ".");
std::shared_ptr<const Embedder> make_embedder(const nlohmann::json& j);
std::shared_ptr<const ChatBackend> make_backend(const nlohmann::json& j, const std::string& base_dir = ".");
UserConfig parse_user_config(const nlohmann::json& j, const std::string& base_dir = ".");

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

// Loads the corpus, checking every source has a preference for the user.
Corpus load_experiment_corpus(const ExperimentConfig& config);

}  // namespace prelude
