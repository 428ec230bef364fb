#include "prelude/text_units.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include "prelude/error.hpp"
#include "prelude/hash.hpp"

namespace prelude {

namespace {

enum class CharClass { Alnum, Space, Punct };

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
bool is_letter(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_newline(unsigned char c) { return c == '\n' || c == '\r'; }

CharClass classify(unsigned char c) {
    if (is_space(c)) return CharClass::Space;
    if (is_letter(c) || is_digit(c)) return CharClass::Alnum;
    return CharClass::Punct;
}

TokenId surface_id(std::string_view surface) {
    return static_cast<TokenId>(fnv1a64(surface) & 0x7fffffffffffffffULL);
}

}  // namespace

std::vector<TokenId> TokenSequence::ids() const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.id);
    return out;
}

std::string TokenSequence::text() const {
    std::string out;
    for (const auto& t : tokens) out += t.surface;
    return out;
}

TokenSequence FallbackTokenizer::tokenize(std::string_view text) const {
    TokenSequence seq;
    seq.tokenizer_id = id_;
    std::size_t i = 0;
    while (i < text.size()) {
        auto cls = classify(static_cast<unsigned char>(text[i]));
        std::size_t j = i + 1;
        if (cls != CharClass::Punct) {
            while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == cls) ++j;
        }
        auto surface = text.substr(i, j - i);
        seq.tokens.push_back({surface_id(surface), std::string(surface)});
        i = j;
    }
    return seq;
}

// ---------------------------------------------------------------------------
// BPE

std::string base64_decode(std::string_view in) {
    static const auto kTable = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(alphabet[i])] = i;
        return t;
    }();
    std::string out;
    int acc = 0;
    int bits = 0;
    std::size_t pad = 0;
    for (char ch : in) {
        if (ch == '=') {
            ++pad;
            continue;
        }
        if (pad > 0) throw std::invalid_argument("data after padding");
        int v = kTable[static_cast<unsigned char>(ch)];
        if (v < 0) throw std::invalid_argument(std::string("invalid base64 character '") + ch + "'");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xff));
        }
    }
    if (pad > 2 || (in.size() % 4) != 0) throw std::invalid_argument("bad base64 length");
    return out;
}

std::shared_ptr<BpeTokenizer> BpeTokenizer::load(const std::string& path, std::string id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open vocabulary file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    if (id.empty()) {
        auto slash = path.find_last_of('/');
        auto stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
        if (auto dot = stem.find('.'); dot != std::string::npos) stem.resize(dot);
        id = "bpe:" + stem;
    }
    return parse(buf.str(), std::move(id), path);
}

std::shared_ptr<BpeTokenizer> BpeTokenizer::parse(std::string_view contents, std::string id,
                                                  std::string_view origin) {
    std::shared_ptr<BpeTokenizer> tok(new BpeTokenizer());
    tok->id_ = std::move(id);
    std::unordered_map<TokenId, std::size_t> seen_ranks;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < contents.size()) {
        auto eol = contents.find('\n', pos);
        if (eol == std::string_view::npos) eol = contents.size();
        auto line = contents.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        auto fail = [&](const std::string& why) {
            return LoadError(std::string(origin) + ":" + std::to_string(line_no) + ": " + why +
                             ": '" + std::string(line) + "'");
        };
        auto space = line.find(' ');
        if (space == std::string_view::npos) throw fail("expected '<base64> <rank>'");
        std::string surface;
        try {
            surface = base64_decode(line.substr(0, space));
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
        if (surface.empty()) throw fail("empty surface");
        auto rank_text = line.substr(space + 1);
        TokenId rank = 0;
        if (rank_text.empty()) throw fail("missing rank");
        for (char c : rank_text) {
            if (!is_digit(static_cast<unsigned char>(c))) throw fail("rank is not a non-negative integer");
            if (rank > (std::numeric_limits<TokenId>::max() - 9) / 10) throw fail("rank overflows");
            rank = rank * 10 + (c - '0');
        }
        if (auto it = seen_ranks.find(rank); it != seen_ranks.end())
            throw fail("rank " + std::to_string(rank) + " already used on line " +
                       std::to_string(it->second));
        if (!tok->ranks_.emplace(std::move(surface), rank).second) throw fail("duplicate surface");
        seen_ranks.emplace(rank, line_no);
    }

    for (int b = 0; b < 256; ++b) {
        if (!tok->ranks_.contains(std::string(1, static_cast<char>(b)))) {
            std::ostringstream msg;
            msg << origin << ": vocabulary lacks the single-byte token 0x" << std::hex << b;
            throw LoadError(msg.str());
        }
    }
    return tok;
}

std::vector<std::string_view> BpeTokenizer::pretokenize(std::string_view s) {
    // Byte-level approximation of the cl100k split pattern:
    //   's|'t|'re|'ve|'m|'ll|'d | [^\r\n L N]?L+ | N{1,3} | ' '?[^\s L N]+[\r\n]*
    //   | \s*[\r\n]+ | \s+(?!\S) | \s+
    // with L = ASCII letters plus every byte >= 0x80.
    std::vector<std::string_view> out;
    const std::size_t n = s.size();
    auto at = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    auto lower = [](unsigned char c) { return static_cast<unsigned char>(c | 0x20); };
    auto is_other = [&](unsigned char c) { return !is_space(c) && !is_letter(c) && !is_digit(c); };

    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        unsigned char c = at(i);

        if (c == '\'' && i + 1 < n) {
            unsigned char a = lower(at(i + 1));
            unsigned char b = i + 2 < n ? lower(at(i + 2)) : 0;
            if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) {
                j = i + 3;
            } else if (a == 's' || a == 't' || a == 'm' || a == 'd') {
                j = i + 2;
            }
        }
        if (j == i) {
            std::size_t k = i;
            if (!is_letter(c) && !is_digit(c) && !is_newline(c) && i + 1 < n && is_letter(at(i + 1))) ++k;
            if (k < n && is_letter(at(k))) {
                while (k < n && is_letter(at(k))) ++k;
                j = k;
            }
        }
        if (j == i && is_digit(c)) {
            while (j < n && j < i + 3 && is_digit(at(j))) ++j;
        }
        if (j == i) {
            std::size_t k = i;
            if (c == ' ') ++k;
            if (k < n && is_other(at(k))) {
                while (k < n && is_other(at(k))) ++k;
                while (k < n && is_newline(at(k))) ++k;
                j = k;
            }
        }
        if (j == i && is_space(c)) {
            std::size_t end = i;
            while (end < n && is_space(at(end))) ++end;
            std::size_t after_last_nl = 0;
            for (std::size_t k = end; k > i; --k) {
                if (is_newline(at(k - 1))) {
                    after_last_nl = k;
                    break;
                }
            }
            if (after_last_nl != 0) {
                j = after_last_nl;
            } else if (end == n) {
                j = end;
            } else if (end - i >= 2) {
                j = end - 1;
            } else {
                j = end;
            }
        }
        if (j == i) j = i + 1;  // unreachable for well-formed classes
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

void BpeTokenizer::encode_piece(std::string_view piece, std::vector<Token>& out) const {
    if (auto it = ranks_.find(std::string(piece)); it != ranks_.end()) {
        out.push_back({it->second, std::string(piece)});
        return;
    }
    // Boundaries of the current parts; merge the adjacent pair with the lowest rank.
    std::vector<std::size_t> cuts(piece.size() + 1);
    for (std::size_t k = 0; k <= piece.size(); ++k) cuts[k] = k;

    auto pair_rank = [&](std::size_t idx) -> TokenId {
        auto sv = piece.substr(cuts[idx], cuts[idx + 2] - cuts[idx]);
        auto it = ranks_.find(std::string(sv));
        return it == ranks_.end() ? std::numeric_limits<TokenId>::max() : it->second;
    };

    while (cuts.size() > 2) {
        TokenId best = std::numeric_limits<TokenId>::max();
        std::size_t best_idx = 0;
        for (std::size_t k = 0; k + 2 < cuts.size(); ++k) {
            auto r = pair_rank(k);
            if (r < best) {
                best = r;
                best_idx = k;
            }
        }
        if (best == std::numeric_limits<TokenId>::max()) break;
        cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(best_idx) + 1);
    }
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        std::string part(piece.substr(cuts[k], cuts[k + 1] - cuts[k]));
        out.push_back({ranks_.at(part), part});
    }
}

TokenSequence BpeTokenizer::tokenize(std::string_view text) const {
    TokenSequence seq;
    seq.tokenizer_id = id_;
    for (auto piece : pretokenize(text)) encode_piece(piece, seq.tokens);
    return seq;
}

// ---------------------------------------------------------------------------

TokenizerRegistry::TokenizerRegistry() { add(std::make_shared<FallbackTokenizer>()); }

void TokenizerRegistry::add(std::shared_ptr<const Tokenizer> tokenizer) {
    std::lock_guard lock(mu_);
    tokenizers_[tokenizer->id()] = std::move(tokenizer);
}

std::shared_ptr<const Tokenizer> TokenizerRegistry::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = tokenizers_.find(id);
    if (it == tokenizers_.end()) throw ConfigError("unknown tokenizer '" + id + "'");
    return it->second;
}

bool TokenizerRegistry::contains(const std::string& id) const {
    std::lock_guard lock(mu_);
    return tokenizers_.contains(id);
}

TokenSequence TokenizerRegistry::tokenize(std::string_view text, const std::string& tokenizer_id) const {
    return get(tokenizer_id)->tokenize(text);
}

// ---------------------------------------------------------------------------

std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
    while (!a.empty() && !b.empty() && a.front() == b.front()) {
        a = a.subspan(1);
        b = b.subspan(1);
    }
    while (!a.empty() && !b.empty() && a.back() == b.back()) {
        a = a.first(a.size() - 1);
        b = b.first(b.size() - 1);
    }
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({up + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[b.size()];
}

static void check_comparable(const TokenSequence& a, const TokenSequence& b) {
    if (a.tokenizer_id != b.tokenizer_id)
        throw UsageError("cannot compare token sequences from tokenizers '" + a.tokenizer_id +
                         "' and '" + b.tokenizer_id + "'");
}

std::size_t edit_distance(const TokenSequence& a, const TokenSequence& b) {
    check_comparable(a, b);
    auto ia = a.ids();
    auto ib = b.ids();
    return levenshtein(ia, ib);
}

EditCost edit_cost(const TokenSequence& a, const TokenSequence& b) {
    EditCost c;
    c.distance = edit_distance(a, b);
    c.len_a = a.size();
    c.len_b = b.size();
    auto denom = std::max(c.len_a, c.len_b);
    c.normalized = denom == 0 ? 0.0 : static_cast<double>(c.distance) / static_cast<double>(denom);
    return c;
}

double normalized_cost(const TokenSequence& a, const TokenSequence& b) {
    return edit_cost(a, b).normalized;
}

EditCost edit_cost(const Tokenizer& tokenizer, std::string_view a, std::string_view b) {
    return edit_cost(tokenizer.tokenize(a), tokenizer.tokenize(b));
}

}  // namespace prelude
