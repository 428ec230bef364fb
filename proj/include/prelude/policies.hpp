#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/embeddings.hpp"
#include "prelude/llm_gateway.hpp"
#include "prelude/prompts.hpp"

namespace prelude {

enum class PolicyKind { Oracle, NoLearning, EThenE, ContinualLpi, IclEdit, Cipher };

std::string_view to_string(PolicyKind k);
PolicyKind parse_policy_kind(std::string_view s);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Cipher;
    int k = 5;               // retrieval count (cipher, icl-edit)
    int delta = 0;           // edit tolerance in tokens (cipher)
    int explore_rounds = 5;  // T_e (e-then-e)

    // Throws ConfigError naming the offending field.
    void validate() const;
    // "cipher-5", "icl-edit-5", "e-then-e", ...
    std::string label() const;

    bool operator==(const PolicyConfig&) const = default;
};

// Output of the generation half of a round, before the user edits.
struct Draft {
    int round = 0;
    std::string context;
    std::optional<std::string> preference_used;  // absent for policies that learn no preference
    std::string response;
    std::vector<int> retrieved_rounds;
    EmbeddingVector context_embedding;  // set by retrieval policies
};

struct RoundOutcome {
    std::optional<std::string> preference_used;
    std::string response;
    std::string revision;
    std::size_t cost = 0;
    double normalized = 0.0;
    std::optional<std::string> stored_preference;  // cipher only
    std::vector<int> retrieved_rounds;
    bool inferred = false;  // an induction call was issued while learning
};

// Everything needed to replay a committed round into policy state without
// calling the LLM (resume after a crash or abort).
struct CommittedRound {
    int round = 0;
    std::string context;
    std::optional<std::string> preference_used;
    std::string response;
    std::string revision;
    std::optional<std::string> stored_preference;
    HiddenTag source_tag;
};

struct PolicyDeps {
    Task task = Task::Summarization;
    Gateway* gateway = nullptr;
    std::shared_ptr<const Embedder> embedder;  // required by cipher and icl-edit
};

// A policy under the interactive protocol. One round is draft() -> user
// edit -> learn(). draft() never mutates policy state; learn() commits the
// round or throws without committing.
class Policy {
public:
    using Editor = std::function<std::string(const Draft&)>;

    virtual ~Policy() = default;

    virtual PolicyKind kind() const noexcept = 0;

    // latent_preference is consulted only by the oracle.
    virtual Draft draft(int round, std::string_view context,
                        const std::optional<std::string>& latent_preference = std::nullopt) = 0;

    // source_tag is forwarded into storage for evaluation and never read.
    virtual RoundOutcome learn(const Draft& draft, std::string_view revision, const HiddenTag& source_tag) = 0;

    virtual void replay(const CommittedRound& round) = 0;

    // Rounds committed so far.
    virtual int rounds_committed() const noexcept = 0;

    RoundOutcome step(int round, std::string_view context, const Editor& edit, const HiddenTag& source_tag = {},
                      const std::optional<std::string>& latent_preference = std::nullopt);
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyDeps& deps);

// Consolidates retrieved preferences. Empty input gives "", a single
// preference is returned as is; only two or more issue an LLM call.
std::string aggregate_preferences(Gateway& gateway, Task task, std::span<const std::string> preferences);

// Latent preference induction over one or more (response, revision) pairs.
std::string infer_preference(Gateway& gateway, Task task, std::span<const EditPair> pairs);
std::string infer_preference(Gateway& gateway, Task task, std::string_view response, std::string_view revision);

// Retrieve, aggregate, generate; then on learn() compare the cost with the
// tolerance and either keep the aggregate or induce a new preference.
class CipherPolicy final : public Policy {
public:
    CipherPolicy(const PolicyConfig& config, const PolicyDeps& deps);

    PolicyKind kind() const noexcept override { return PolicyKind::Cipher; }
    Draft draft(int round, std::string_view context, const std::optional<std::string>& latent_preference) override;
    RoundOutcome learn(const Draft& draft, std::string_view revision, const HiddenTag& source_tag) override;
    void replay(const CommittedRound& round) override;
    int rounds_committed() const noexcept override { return static_cast<int>(store_.size()); }

    const PreferenceStore& store() const noexcept { return store_; }
    PreferenceView override_preference(int round, std::string text) { return store_.supersede(round, std::move(text)); }

private:
    PolicyConfig config_;
    PolicyDeps deps_;
    PreferenceStore store_;
};

// The ICL-edit baseline keeps raw edits, not preferences.
struct EditExample {
    int round = 0;
    EmbeddingVector embedding;
    std::string response;
    std::string revision;
    HiddenTag source_tag;
};

class EditHistory {
public:
    void append(EditExample example);
    std::size_t size() const noexcept { return examples_.size(); }
    const std::vector<EditExample>& examples() const noexcept { return examples_; }
    std::vector<const EditExample*> retrieve_top_k(const EmbeddingVector& query, int k) const;

private:
    std::vector<EditExample> examples_;
};

class IclEditPolicy final : public Policy {
public:
    IclEditPolicy(const PolicyConfig& config, const PolicyDeps& deps);

    PolicyKind kind() const noexcept override { return PolicyKind::IclEdit; }
    Draft draft(int round, std::string_view context, const std::optional<std::string>& latent_preference) override;
    RoundOutcome learn(const Draft& draft, std::string_view revision, const HiddenTag& source_tag) override;
    void replay(const CommittedRound& round) override;
    int rounds_committed() const noexcept override { return static_cast<int>(history_.size()); }

    const EditHistory& history() const noexcept { return history_; }

private:
    PolicyConfig config_;
    PolicyDeps deps_;
    EditHistory history_;
};

// Oracle, no-learning, explore-then-exploit and continual induction share
// the same shape: a context-free preference and a plain edit history.
class ContextFreePolicy final : public Policy {
public:
    ContextFreePolicy(const PolicyConfig& config, const PolicyDeps& deps);

    PolicyKind kind() const noexcept override { return config_.kind; }
    Draft draft(int round, std::string_view context, const std::optional<std::string>& latent_preference) override;
    RoundOutcome learn(const Draft& draft, std::string_view revision, const HiddenTag& source_tag) override;
    void replay(const CommittedRound& round) override;
    int rounds_committed() const noexcept override { return committed_; }

    const std::optional<std::string>& fixed_preference() const noexcept { return fixed_preference_; }

private:
    PolicyConfig config_;
    PolicyDeps deps_;
    std::vector<EditPair> edits_;
    std::optional<std::string> fixed_preference_;  // e-then-e after exploration
    int committed_ = 0;
};

}  // namespace prelude
