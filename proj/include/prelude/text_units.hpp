#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prelude {

using TokenId = std::int64_t;

struct Token {
    TokenId id = 0;
    std::string surface;

    bool operator==(const Token&) const = default;
};

// Ordered tokens plus the id of the tokenizer that produced them. Two
// sequences are only comparable when tokenizer ids match.
struct TokenSequence {
    std::vector<Token> tokens;
    std::string tokenizer_id;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }

    std::vector<TokenId> ids() const;
    // Concatenation of all surfaces; equals the tokenized input.
    std::string text() const;

    bool operator==(const TokenSequence&) const = default;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual const std::string& id() const noexcept = 0;
    virtual TokenSequence tokenize(std::string_view text) const = 0;

    // Shortcut for usage accounting.
    std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Dependency-free splitter: maximal alphanumeric runs, single punctuation
// marks, maximal whitespace runs. Bytes >= 0x80 count as alphanumeric so
// UTF-8 sequences are never split. Ids are a stable 63-bit hash of the
// surface, so they agree across processes.
class FallbackTokenizer final : public Tokenizer {
public:
    static constexpr std::string_view kId = "fallback";

    const std::string& id() const noexcept override { return id_; }
    TokenSequence tokenize(std::string_view text) const override;

private:
    std::string id_{kId};
};

// Byte-level BPE over a tiktoken-style rank file ("<base64 surface> <rank>"
// per line). Text is first split with a cl100k-like pre-tokenizer, then
// each piece is merged greedily by lowest rank.
class BpeTokenizer final : public Tokenizer {
public:
    static std::shared_ptr<BpeTokenizer> load(const std::string& path, std::string id = {});
    static std::shared_ptr<BpeTokenizer> parse(std::string_view contents, std::string id,
                                               std::string_view origin = "<memory>");

    const std::string& id() const noexcept override { return id_; }
    TokenSequence tokenize(std::string_view text) const override;

    std::size_t vocab_size() const noexcept { return ranks_.size(); }

    // Exposed for tests: pre-tokenizer split of raw text.
    static std::vector<std::string_view> pretokenize(std::string_view text);

private:
    BpeTokenizer() = default;
    void encode_piece(std::string_view piece, std::vector<Token>& out) const;

    std::string id_;
    std::unordered_map<std::string, TokenId> ranks_;
};

// Lookup of tokenizers by id. The fallback tokenizer is always present.
class TokenizerRegistry {
public:
    TokenizerRegistry();

    void add(std::shared_ptr<const Tokenizer> tokenizer);
    std::shared_ptr<const Tokenizer> get(const std::string& id) const;
    bool contains(const std::string& id) const;

    TokenSequence tokenize(std::string_view text, const std::string& tokenizer_id) const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Tokenizer>> tokenizers_;
};

struct EditCost {
    std::size_t distance = 0;
    double normalized = 0.0;
    std::size_t len_a = 0;
    std::size_t len_b = 0;
};

// Unit-cost Levenshtein distance over token ids.
std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b);

// Throws UsageError when tokenizer ids differ.
std::size_t edit_distance(const TokenSequence& a, const TokenSequence& b);

// distance / max(|a|, |b|), or 0 when both are empty.
double normalized_cost(const TokenSequence& a, const TokenSequence& b);

EditCost edit_cost(const TokenSequence& a, const TokenSequence& b);

// Text-level convenience used by the round loop.
EditCost edit_cost(const Tokenizer& tokenizer, std::string_view a, std::string_view b);

std::string base64_decode(std::string_view in);

}  // namespace prelude
