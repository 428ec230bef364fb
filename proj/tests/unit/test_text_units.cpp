#include <doctest.h>

#include <random>

#include "prelude/error.hpp"
#include "prelude/text_units.hpp"
#include "support.hpp"

using namespace prelude;
using prelude::testing::oracle_levenshtein;

namespace {

std::string b64(std::string_view bytes) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8 | (unsigned char)bytes[i + 2];
        for (int s = 18; s >= 0; s -= 6) out += tbl[(v >> s) & 63];
    }
    if (i + 1 == bytes.size()) {
        unsigned v = (unsigned char)bytes[i] << 16;
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (unsigned char)bytes[i] << 16 | (unsigned char)bytes[i + 1] << 8;
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

// 256 single bytes plus a few merges.
const std::vector<std::string> kMerges = {"th", "the", "he", " t", " the", "in", "ing", "er", " w", "or"};

std::string rank_file() {
    std::string out;
    for (int b = 0; b < 256; ++b) out += b64(std::string(1, static_cast<char>(b))) + " " + std::to_string(b) + "\n";
    for (std::size_t i = 0; i < kMerges.size(); ++i) out += b64(kMerges[i]) + " " + std::to_string(256 + i) + "\n";
    return out;
}

// Reference byte-pair encoder: repeatedly merge the adjacent pair whose
// concatenation has the lowest rank.
std::vector<TokenId> reference_bpe(const std::string& piece, const std::map<std::string, TokenId>& ranks) {
    std::vector<std::string> parts;
    for (char c : piece) parts.emplace_back(1, c);
    for (;;) {
        TokenId best = -1;
        std::size_t at = 0;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            auto it = ranks.find(parts[i] + parts[i + 1]);
            if (it != ranks.end() && (best < 0 || it->second < best)) {
                best = it->second;
                at = i;
            }
        }
        if (best < 0) break;
        parts[at] += parts[at + 1];
        parts.erase(parts.begin() + static_cast<long>(at) + 1);
    }
    std::vector<TokenId> ids;
    for (const auto& p : parts) ids.push_back(ranks.at(p));
    return ids;
}

}  // namespace

TEST_SUITE("text-units") {

TEST_CASE("fallback tokenizer splits words, punctuation and whitespace") {
    FallbackTokenizer tok;
    auto seq = tok.tokenize("Hi, there!  ok");
    std::vector<std::string> surfaces;
    for (const auto& t : seq.tokens) surfaces.push_back(t.surface);
    CHECK(surfaces == std::vector<std::string>{"Hi", ",", " ", "there", "!", "  ", "ok"});
    CHECK(seq.text() == "Hi, there!  ok");
    CHECK(seq.tokenizer_id == "fallback");
    CHECK(tok.tokenize("").empty());
}

TEST_CASE("fallback tokenizer keeps UTF-8 sequences whole and ids stable") {
    FallbackTokenizer tok;
    auto seq = tok.tokenize("caf\xC3\xA9 na\xC3\xAFve");
    REQUIRE(seq.size() == 3);
    CHECK(seq.tokens[0].surface == "caf\xC3\xA9");
    CHECK(tok.tokenize("word").tokens[0].id == tok.tokenize("a word").tokens[2].id);
    CHECK(tok.tokenize("word").tokens[0].id >= 0);
}

TEST_CASE("levenshtein on a classic pair") {
    std::vector<TokenId> a{'k', 'i', 't', 't', 'e', 'n'}, b{'s', 'i', 't', 't', 'i', 'n', 'g'};
    CHECK(levenshtein(a, b) == 3);
    auto ea = TokenSequence{}, eb = TokenSequence{};
    for (auto x : a) ea.tokens.push_back({x, ""});
    for (auto x : b) eb.tokens.push_back({x, ""});
    CHECK(normalized_cost(ea, eb) == doctest::Approx(3.0 / 7.0));
    CHECK(normalized_cost(TokenSequence{}, TokenSequence{}) == 0.0);
}

TEST_CASE("levenshtein matches the memoized oracle on random pairs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<TokenId> a(rng() % 25), b(rng() % 25);
        auto alphabet = 1 + rng() % 5;
        for (auto& x : a) x = static_cast<TokenId>(rng() % alphabet);
        for (auto& x : b) x = static_cast<TokenId>(rng() % alphabet);
        REQUIRE(levenshtein(a, b) == oracle_levenshtein(a, b));
    }
}

TEST_CASE("edit distance refuses sequences from different tokenizers") {
    TokenSequence a{{}, "fallback"}, b{{}, "bpe:x"};
    CHECK_THROWS_AS(edit_distance(a, b), UsageError);
}

TEST_CASE("identical texts cost zero; any change costs at least one") {
    FallbackTokenizer tok;
    CHECK(edit_cost(tok, "Same text.", "Same text.").distance == 0);
    CHECK(edit_cost(tok, "Same text.", "Same text!").distance == 1);
    CHECK(edit_cost(tok, "", "abc def").normalized == 1.0);
}

TEST_CASE("bpe merges by lowest rank like the reference encoder") {
    auto tok = BpeTokenizer::parse(rank_file(), "bpe:test");
    CHECK(tok->vocab_size() == 256 + kMerges.size());
    std::map<std::string, TokenId> ranks;
    for (int b = 0; b < 256; ++b) ranks[std::string(1, static_cast<char>(b))] = b;
    for (std::size_t i = 0; i < kMerges.size(); ++i) ranks[kMerges[i]] = static_cast<TokenId>(256 + i);

    auto ids = tok->tokenize("the theme").ids();
    CHECK(ids == std::vector<TokenId>{257, 260, 'm', 'e'});

    std::mt19937_64 rng(5);
    const std::string alphabet = "the wingor.,'\n\t 12\xC3\xA9";
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        for (int i = 0, n = static_cast<int>(rng() % 40); i < n; ++i) text += alphabet[rng() % alphabet.size()];
        std::vector<TokenId> expected;
        for (auto piece : BpeTokenizer::pretokenize(text)) {
            auto part = reference_bpe(std::string(piece), ranks);
            expected.insert(expected.end(), part.begin(), part.end());
        }
        auto seq = tok->tokenize(text);
        REQUIRE(seq.ids() == expected);
        REQUIRE(seq.text() == text);
    }
}

TEST_CASE("bpe pre-tokenizer pieces concatenate to the input") {
    const std::string text = "He said it's 12345 apples!!\n\n  and   then\t";
    std::string joined;
    for (auto p : BpeTokenizer::pretokenize(text)) joined += p;
    CHECK(joined == text);
    auto pieces = BpeTokenizer::pretokenize("it's 12345");
    CHECK(std::vector<std::string>(pieces.begin(), pieces.end()) ==
          std::vector<std::string>{"it", "'s", " ", "123", "45"});
}

TEST_CASE("bpe loader reports the offending line") {
    auto bad = [](const std::string& extra) {
        try {
            BpeTokenizer::parse(rank_file() + extra, "bpe:bad", "ranks.tiktoken");
        } catch (const LoadError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(bad("bm9zcGFjZQ==\n").find("ranks.tiktoken:267:") == 0);
    CHECK(bad("@@@@ 900\n").find("ranks.tiktoken:267:") == 0);
    CHECK(bad(b64("xy") + " abc\n").find("rank is not a non-negative integer") != std::string::npos);
    CHECK(bad(b64("xy") + " 3\n").find("already used") != std::string::npos);
    CHECK(bad(b64("th") + " 999\n").find("duplicate surface") != std::string::npos);
    CHECK_THROWS_AS(BpeTokenizer::parse(b64("a") + " 0\n", "bpe:tiny"), LoadError);
    CHECK_THROWS_AS(BpeTokenizer::load("/nonexistent/ranks.tiktoken"), LoadError);
}

TEST_CASE("registry resolves ids and rejects unknown ones") {
    TokenizerRegistry reg;
    CHECK(reg.contains("fallback"));
    reg.add(BpeTokenizer::parse(rank_file(), "bpe:test"));
    CHECK(reg.tokenize("the", "bpe:test").ids() == std::vector<TokenId>{257});
    CHECK_THROWS_AS(reg.get("bpe:missing"), ConfigError);
}

}
