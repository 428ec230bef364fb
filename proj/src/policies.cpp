#include "prelude/policies.hpp"

#include "prelude/error.hpp"

namespace prelude {

std::string_view to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Oracle: return "oracle";
        case PolicyKind::NoLearning: return "no-learning";
        case PolicyKind::EThenE: return "e-then-e";
        case PolicyKind::ContinualLpi: return "continual-lpi";
        case PolicyKind::IclEdit: return "icl-edit";
        case PolicyKind::Cipher: return "cipher";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view s) {
    for (auto k : {PolicyKind::Oracle, PolicyKind::NoLearning, PolicyKind::EThenE, PolicyKind::ContinualLpi,
                   PolicyKind::IclEdit, PolicyKind::Cipher})
        if (to_string(k) == s) return k;
    throw ConfigError("policy.kind: unknown policy '" + std::string(s) + "'");
}

void PolicyConfig::validate() const {
    if ((kind == PolicyKind::Cipher || kind == PolicyKind::IclEdit) && k < 1)
        throw ConfigError("policy.k: must be >= 1 for " + std::string(to_string(kind)) + ", got " + std::to_string(k));
    if (kind == PolicyKind::EThenE && explore_rounds < 1)
        throw ConfigError("policy.explore_rounds: must be >= 1, got " + std::to_string(explore_rounds));
    if (delta < 0) throw ConfigError("policy.delta: must be >= 0, got " + std::to_string(delta));
}

std::string PolicyConfig::label() const {
    std::string out(to_string(kind));
    if (kind == PolicyKind::Cipher || kind == PolicyKind::IclEdit) out += "-" + std::to_string(k);
    return out;
}

// ---------------------------------------------------------------------------

RoundOutcome Policy::step(int round, std::string_view context, const Editor& edit, const HiddenTag& source_tag,
                          const std::optional<std::string>& latent_preference) {
    auto d = draft(round, context, latent_preference);
    auto revision = edit(d);
    return learn(d, revision, source_tag);
}

std::string aggregate_preferences(Gateway& gateway, Task task, std::span<const std::string> preferences) {
    if (preferences.empty()) return {};
    if (preferences.size() == 1) return preferences.front();
    auto req = ChatRequest::user_prompt(prompts::aggregation(task, preferences), CallerRole::Agent, Purpose::Aggregate);
    return gateway.complete(req).text;
}

std::string infer_preference(Gateway& gateway, Task task, std::span<const EditPair> pairs) {
    auto req = ChatRequest::user_prompt(prompts::inference(task, pairs), CallerRole::Agent, Purpose::Infer);
    return gateway.complete(req).text;
}

std::string infer_preference(Gateway& gateway, Task task, std::string_view response, std::string_view revision) {
    EditPair pair{std::string(response), std::string(revision)};
    return infer_preference(gateway, task, std::span<const EditPair>(&pair, 1));
}

namespace {

void require_gateway(const PolicyDeps& deps) {
    if (!deps.gateway) throw ConfigError("policy requires a gateway");
}

void require_embedder(const PolicyDeps& deps, PolicyKind kind) {
    if (!deps.embedder)
        throw ConfigError("policy '" + std::string(to_string(kind)) + "' requires a context embedder");
}

void check_round(int round, int committed) {
    if (round != committed + 1)
        throw UsageError("round " + std::to_string(round) + " is out of order; next round is " +
                         std::to_string(committed + 1));
}

std::string generate(Gateway& gateway, Task task, std::string_view context, std::string_view preference) {
    return gateway.complete(render_generation_prompt(context, preference, task)).text;
}

RoundOutcome base_outcome(const Draft& d, std::string_view revision, const Tokenizer& tokenizer) {
    RoundOutcome out;
    out.preference_used = d.preference_used;
    out.response = d.response;
    out.revision = std::string(revision);
    auto cost = edit_cost(tokenizer, d.response, revision);
    out.cost = cost.distance;
    out.normalized = cost.normalized;
    out.retrieved_rounds = d.retrieved_rounds;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

CipherPolicy::CipherPolicy(const PolicyConfig& config, const PolicyDeps& deps) : config_(config), deps_(deps) {
    config_.validate();
    require_gateway(deps_);
    require_embedder(deps_, PolicyKind::Cipher);
}

Draft CipherPolicy::draft(int round, std::string_view context, const std::optional<std::string>&) {
    check_round(round, rounds_committed());
    Draft d;
    d.round = round;
    d.context = std::string(context);
    d.context_embedding = deps_.embedder->embed(context);

    auto retrieved = store_.retrieve_top_k(d.context_embedding, config_.k);
    std::vector<std::string> prefs;
    for (const auto& r : retrieved) {
        d.retrieved_rounds.push_back(r.round);
        prefs.push_back(r.preference);
    }
    d.preference_used = aggregate_preferences(*deps_.gateway, deps_.task, prefs);
    d.response = generate(*deps_.gateway, deps_.task, context, *d.preference_used);
    return d;
}

RoundOutcome CipherPolicy::learn(const Draft& d, std::string_view revision, const HiddenTag& source_tag) {
    check_round(d.round, rounds_committed());
    auto out = base_outcome(d, revision, deps_.gateway->tokenizer());
    if (out.cost <= static_cast<std::size_t>(config_.delta)) {
        out.stored_preference = d.preference_used;
    } else {
        out.stored_preference = infer_preference(*deps_.gateway, deps_.task, d.response, revision);
        out.inferred = true;
    }
    store_.append({d.context_embedding, *out.stored_preference, d.round, source_tag});
    return out;
}

void CipherPolicy::replay(const CommittedRound& r) {
    check_round(r.round, rounds_committed());
    if (!r.stored_preference) throw UsageError("committed cipher round lacks a stored preference");
    store_.append({deps_.embedder->embed(r.context), *r.stored_preference, r.round, r.source_tag});
}

// ---------------------------------------------------------------------------

void EditHistory::append(EditExample example) {
    if (example.round != static_cast<int>(examples_.size()) + 1)
        throw UsageError("out-of-order edit history append: expected round " + std::to_string(examples_.size() + 1) +
                         ", got " + std::to_string(example.round));
    examples_.push_back(std::move(example));
}

std::vector<const EditExample*> EditHistory::retrieve_top_k(const EmbeddingVector& query, int k) const {
    std::vector<const EmbeddingVector*> candidates;
    candidates.reserve(examples_.size());
    for (const auto& e : examples_) candidates.push_back(&e.embedding);
    std::vector<const EditExample*> out;
    for (auto [idx, sim] : rank_by_cosine(query, candidates, k)) out.push_back(&examples_[idx]);
    return out;
}

IclEditPolicy::IclEditPolicy(const PolicyConfig& config, const PolicyDeps& deps) : config_(config), deps_(deps) {
    config_.validate();
    require_gateway(deps_);
    require_embedder(deps_, PolicyKind::IclEdit);
}

Draft IclEditPolicy::draft(int round, std::string_view context, const std::optional<std::string>&) {
    check_round(round, rounds_committed());
    Draft d;
    d.round = round;
    d.context = std::string(context);
    d.context_embedding = deps_.embedder->embed(context);

    std::vector<EditPair> examples;
    for (const auto* e : history_.retrieve_top_k(d.context_embedding, config_.k)) {
        d.retrieved_rounds.push_back(e->round);
        examples.push_back({e->response, e->revision});
    }
    auto req = ChatRequest::user_prompt(prompts::icl_edit(deps_.task, context, examples), CallerRole::Agent,
                                        Purpose::Generate);
    d.response = deps_.gateway->complete(req).text;
    return d;
}

RoundOutcome IclEditPolicy::learn(const Draft& d, std::string_view revision, const HiddenTag& source_tag) {
    check_round(d.round, rounds_committed());
    auto out = base_outcome(d, revision, deps_.gateway->tokenizer());
    history_.append({d.round, d.context_embedding, d.response, std::string(revision), source_tag});
    return out;
}

void IclEditPolicy::replay(const CommittedRound& r) {
    check_round(r.round, rounds_committed());
    history_.append({r.round, deps_.embedder->embed(r.context), r.response, r.revision, r.source_tag});
}

// ---------------------------------------------------------------------------

ContextFreePolicy::ContextFreePolicy(const PolicyConfig& config, const PolicyDeps& deps)
    : config_(config), deps_(deps) {
    config_.validate();
    require_gateway(deps_);
    if (config_.kind == PolicyKind::Cipher || config_.kind == PolicyKind::IclEdit)
        throw ConfigError("policy.kind: '" + std::string(to_string(config_.kind)) + "' is not context-free");
}

Draft ContextFreePolicy::draft(int round, std::string_view context, const std::optional<std::string>& latent) {
    check_round(round, committed_);
    Draft d;
    d.round = round;
    d.context = std::string(context);

    std::string preference;
    switch (config_.kind) {
        case PolicyKind::Oracle:
            if (!latent) throw UsageError("oracle policy needs the latent preference for round " + std::to_string(round));
            preference = *latent;
            d.preference_used = preference;
            break;
        case PolicyKind::NoLearning:
            break;
        case PolicyKind::EThenE:
            if (fixed_preference_) {
                preference = *fixed_preference_;
            } else if (round == config_.explore_rounds + 1) {
                preference = infer_preference(*deps_.gateway, deps_.task, edits_);
            }
            d.preference_used = preference;
            break;
        case PolicyKind::ContinualLpi:
            if (!edits_.empty()) preference = infer_preference(*deps_.gateway, deps_.task, edits_);
            d.preference_used = preference;
            break;
        default:
            break;
    }
    d.response = generate(*deps_.gateway, deps_.task, context, preference);
    return d;
}

RoundOutcome ContextFreePolicy::learn(const Draft& d, std::string_view revision, const HiddenTag&) {
    check_round(d.round, committed_);
    auto out = base_outcome(d, revision, deps_.gateway->tokenizer());
    replay({d.round, d.context, d.preference_used, d.response, std::string(revision), std::nullopt, {}});
    return out;
}

void ContextFreePolicy::replay(const CommittedRound& r) {
    check_round(r.round, committed_);
    if (config_.kind == PolicyKind::EThenE && !fixed_preference_ && r.round == config_.explore_rounds + 1)
        fixed_preference_ = r.preference_used.value_or("");
    bool keeps_edit = config_.kind == PolicyKind::ContinualLpi ||
                      (config_.kind == PolicyKind::EThenE && r.round <= config_.explore_rounds);
    if (keeps_edit) edits_.push_back({r.response, r.revision});
    ++committed_;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyDeps& deps) {
    switch (config.kind) {
        case PolicyKind::Cipher: return std::make_unique<CipherPolicy>(config, deps);
        case PolicyKind::IclEdit: return std::make_unique<IclEditPolicy>(config, deps);
        default: return std::make_unique<ContextFreePolicy>(config, deps);
    }
}

}  // namespace prelude
