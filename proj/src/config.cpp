#include "prelude/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prelude/error.hpp"
#include "prelude/text_transforms.hpp"

namespace prelude {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

const json& object_or_empty(const json& parent, const char* key) {
    static const json empty = json::object();
    return parent.contains(key) ? parent.at(key) : empty;
}

template <typename T>
T field(const json& j, std::string_view prefix, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(prefix) + "." + key + ": wrong type");
    }
}

std::string required_string(const json& j, std::string_view prefix, const char* key) {
    auto s = field<std::string>(j, prefix, key, "");
    if (s.empty()) throw ConfigError(std::string(prefix) + "." + key + ": required");
    return s;
}

void expect_object(const json& j, std::string_view field) {
    if (!j.is_object()) throw ConfigError(std::string(field) + ": expected an object");
}

}  // namespace

PolicyConfig parse_policy_config(const json& j, std::string_view prefix) {
    expect_object(j, prefix);
    PolicyConfig c;
    auto kind = field<std::string>(j, prefix, "kind", "cipher");
    try {
        c.kind = parse_policy_kind(kind);
    } catch (const Error&) {
        throw ConfigError(std::string(prefix) + ".kind: unknown policy '" + kind + "'");
    }
    c.k = field<int>(j, prefix, "k", c.k);
    c.delta = field<int>(j, prefix, "delta", c.delta);
    c.explore_rounds = field<int>(j, prefix, "explore_rounds", c.explore_rounds);
    c.validate();
    return c;
}

std::shared_ptr<const Tokenizer> make_tokenizer(const json& j, const std::string& base_dir) {
    expect_object(j, "tokenizer");
    auto kind = field<std::string>(j, "tokenizer", "kind", "fallback");
    if (kind == "fallback") return std::make_shared<FallbackTokenizer>();
    if (kind == "bpe") {
        auto path = resolve(base_dir, required_string(j, "tokenizer", "path"));
        return BpeTokenizer::load(path, field<std::string>(j, "tokenizer", "id", ""));
    }
    throw ConfigError("tokenizer.kind: unknown tokenizer '" + kind + "'");
}

std::shared_ptr<const Embedder> make_embedder(const json& j) {
    expect_object(j, "embedder");
    auto kind = field<std::string>(j, "embedder", "kind", "hash");
    if (kind == "hash") {
        auto dim = field<int>(j, "embedder", "dimension", 256);
        if (dim < 1) throw ConfigError("embedder.dimension: must be >= 1");
        return std::make_shared<HashEmbedder>(static_cast<std::size_t>(dim));
    }
    if (kind == "remote") {
        RemoteEmbedder::Options o;
        o.base_url = required_string(j, "embedder", "base_url");
        o.model = required_string(j, "embedder", "model");
        o.api_key_env = field<std::string>(j, "embedder", "api_key_env", o.api_key_env);
        o.dimension = field<std::size_t>(j, "embedder", "dimension", 0);
        return std::make_shared<RemoteEmbedder>(o);
    }
    throw ConfigError("embedder.kind: unknown embedder '" + kind + "'");
}

std::shared_ptr<const ChatBackend> make_backend(const json& j, const std::string& base_dir) {
    expect_object(j, "backend");
    auto kind = field<std::string>(j, "backend", "kind", "scripted");
    if (kind == "scripted") {
        if (!j.contains("rules")) throw ConfigError("backend.rules: required");
        const auto& rules = j.at("rules");
        if (rules.is_string()) return ScriptedBackend::load(resolve(base_dir, rules.get<std::string>()));
        if (rules.is_object()) return ScriptedBackend::from_json(rules.dump(), "backend.rules");
        throw ConfigError("backend.rules: expected a path or an object");
    }
    if (kind == "remote") {
        RemoteChatBackend::Options o;
        o.base_url = required_string(j, "backend", "base_url");
        o.model = required_string(j, "backend", "model");
        o.api_key_env = field<std::string>(j, "backend", "api_key_env", o.api_key_env);
        o.retry.max_retries = field<int>(j, "backend", "max_retries", o.retry.max_retries);
        return std::make_shared<RemoteChatBackend>(o);
    }
    throw ConfigError("backend.kind: unknown backend '" + kind + "'");
}

UserConfig parse_user_config(const json& j, const std::string& base_dir) {
    expect_object(j, "user");
    UserConfig u;
    auto mode = field<std::string>(j, "user", "mode", "rule");
    if (mode == "rule") {
        u.mode = UserConfig::Mode::Rule;
        u.rules = field<std::map<std::string, std::string>>(j, "user", "rules", {});
        if (u.rules.empty()) throw ConfigError("user.rules: rule mode needs a source -> rule map");
        for (const auto& [source, rule] : u.rules) {
            if (!transforms::known(rule)) throw ConfigError("user.rules." + source + ": unknown rule '" + rule + "'");
        }
    } else if (mode == "llm") {
        u.mode = UserConfig::Mode::Llm;
        auto path = field<std::string>(j, "user", "registry", "");
        u.registry = path.empty() ? LatentPreferenceRegistry::defaults()
                                  : LatentPreferenceRegistry::load(resolve(base_dir, path));
    } else {
        throw ConfigError("user.mode: expected 'rule' or 'llm', got '" + mode + "'");
    }
    return u;
}

ExperimentConfig parse_experiment_config(const json& j, const std::string& base_dir) {
    expect_object(j, "config");
    ExperimentConfig c;
    auto task = field<std::string>(j, "config", "task", "summarization");
    try {
        c.task = parse_task(task);
    } catch (const Error&) {
        throw ConfigError("task: unknown task '" + task + "'");
    }
    c.corpus_path = resolve(base_dir, required_string(j, "config", "corpus"));
    c.rounds = field<int>(j, "config", "rounds", c.rounds);
    if (c.rounds < 1) throw ConfigError("rounds: must be >= 1");
    c.seed = field<std::uint64_t>(j, "config", "seed", 0);
    c.components.policy = parse_policy_config(object_or_empty(j, "policy"));
    c.components.tokenizer = make_tokenizer(object_or_empty(j, "tokenizer"), base_dir);
    c.components.embedder = make_embedder(object_or_empty(j, "embedder"));
    c.components.backend = make_backend(object_or_empty(j, "backend"), base_dir);
    try {
        c.components.scorer = make_scorer(field<std::string>(j, "config", "scorer", "token-f1"));
    } catch (const Error& e) {
        throw ConfigError(std::string("scorer: ") + e.what());
    }
    c.user = parse_user_config(object_or_empty(j, "user"), base_dir);
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    auto dir = fs::path(path).parent_path().string();
    return parse_experiment_config(j, dir.empty() ? "." : dir);
}

Corpus load_experiment_corpus(const ExperimentConfig& config) {
    auto corpus = load_corpus(config.corpus_path, config.task);
    auto latent = config.user.latent(config.task);
    for (const auto& s : corpus.sources()) {
        if (!latent.contains(s))
            throw ConfigError("user: no preference for corpus source '" + s + "'");
    }
    return corpus;
}

}  // namespace prelude
