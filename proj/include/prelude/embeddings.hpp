#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/http_client.hpp"

namespace prelude {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dimension() const noexcept { return values.size(); }
    bool is_zero() const noexcept;

    bool operator==(const EmbeddingVector&) const = default;
};

// Context representation function: text -> fixed-dimension vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const std::string& id() const noexcept = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Signed feature hashing of lowercased word unigrams and bigrams. Words are
// the alphanumeric tokens of the fallback tokenizer. Empty text (or text
// without words) maps to the zero vector.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension = 256);

    const std::string& id() const noexcept override { return id_; }
    std::size_t dimension() const noexcept { return dimension_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::size_t dimension_;
    std::string id_;
};

// OpenAI-compatible embeddings endpoint: POST {base_url}/embeddings with
// {"model", "input"}; reads data[0].embedding.
class RemoteEmbedder final : public Embedder {
public:
    struct Options {
        std::string base_url;
        std::string model;
        std::string api_key_env = "OPENAI_API_KEY";
        std::size_t dimension = 0;  // 0: fixed by the first response
        RetryPolicy retry;
    };

    explicit RemoteEmbedder(Options options);

    const std::string& id() const noexcept override { return id_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    Options options_;
    std::string id_;
    mutable std::mutex mu_;
    mutable std::size_t dimension_;
};

// Zero when either side is the zero vector. Throws UsageError on dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct RankedIndex {
    std::size_t index = 0;
    double similarity = 0.0;
};

// Indices of the min(k, n) candidates most similar to the query, by
// descending cosine; equal similarity goes to the lower index.
std::vector<RankedIndex> rank_by_cosine(const EmbeddingVector& query, const std::vector<const EmbeddingVector*>& candidates,
                                        int k);

// Ground-truth label carried next to a stored preference for evaluation
// (retrieval accuracy). Policies receive it only to forward it into the
// store; nothing in a policy reads it.
class HiddenTag {
public:
    HiddenTag() = default;
    explicit HiddenTag(std::string value) : value_(std::move(value)) {}

    // Evaluation-only accessor.
    const std::string& reveal() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    bool operator==(const HiddenTag&) const = default;

private:
    std::string value_;
};

struct PreferenceRecord {
    EmbeddingVector embedding;
    std::string preference;
    int round = 0;
    HiddenTag source_tag;

    bool operator==(const PreferenceRecord&) const = default;
};

// What retrieval hands to a policy: no tag, override-resolved text.
struct RetrievedPreference {
    int round = 0;
    std::string preference;
    double similarity = 0.0;

    bool operator==(const RetrievedPreference&) const = default;
};

struct PreferenceView {
    int round = 0;
    std::string preference;
    bool active = false;
    int revision = 0;  // 0 is the learned text, 1.. are user overrides

    bool operator==(const PreferenceView&) const = default;
};

// The preference history of the retrieval policy. Append-only: learned
// records are added once per round, and user overrides are appended as
// superseding entries that retrieval resolves to the newest text.
class PreferenceStore {
public:
    // Throws UsageError unless record.round == size() + 1, IntegrityError
    // when the embedding disagrees with earlier records on dimension or provider.
    void append(PreferenceRecord record);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<PreferenceRecord>& records() const noexcept { return records_; }

    // min(k, size()) best matches by cosine, descending; equal similarity
    // goes to the earlier round. Throws UsageError for k < 1.
    std::vector<RetrievedPreference> retrieve_top_k(const EmbeddingVector& query, int k) const;

    // Text currently in force for a round (latest override or the learned text).
    const std::string& effective_preference(int round) const;

    // Throws NotFoundError for an unknown round.
    PreferenceView supersede(int round, std::string text);
    std::vector<PreferenceView> views() const;

    struct Override {
        int round = 0;
        std::string text;
        bool operator==(const Override&) const = default;
    };
    const std::vector<Override>& overrides() const noexcept { return overrides_; }

    // Line-delimited JSON: one "record" line per record, one "override" line per override.
    std::string snapshot() const;
    static PreferenceStore from_snapshot(std::string_view jsonl);

    bool operator==(const PreferenceStore&) const = default;

private:
    std::vector<PreferenceRecord> records_;
    std::vector<Override> overrides_;
    std::vector<std::optional<std::size_t>> latest_override_;  // per record, index into overrides_
};

}  // namespace prelude
