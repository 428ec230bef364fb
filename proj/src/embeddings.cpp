#include "prelude/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"
#include "prelude/hash.hpp"
#include "prelude/text_units.hpp"

namespace prelude {

using nlohmann::json;

bool EmbeddingVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dimension() != v.dimension())
        throw UsageError("cosine of vectors with dimensions " + std::to_string(u.dimension()) + " and " +
                         std::to_string(v.dimension()));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<RankedIndex> rank_by_cosine(const EmbeddingVector& query, const std::vector<const EmbeddingVector*>& candidates,
                                        int k) {
    if (k < 1) throw UsageError("retrieval k must be >= 1, got " + std::to_string(k));
    std::vector<RankedIndex> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) scored.push_back({i, cosine(query, *candidates[i])});

    auto n = std::min(static_cast<std::size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const RankedIndex& a, const RankedIndex& b) {
                          if (a.similarity != b.similarity) return a.similarity > b.similarity;
                          return a.index < b.index;
                      });
    scored.resize(n);
    return scored;
}

// ---------------------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dimension)
    : dimension_(dimension), id_("hash-" + std::to_string(dimension)) {
    if (dimension == 0) throw ConfigError("hash embedder dimension must be positive");
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
    static const FallbackTokenizer words;
    EmbeddingVector out{std::vector<double>(dimension_, 0.0), id_};

    std::vector<std::string> grams;
    for (auto& tok : words.tokenize(text).tokens) {
        auto c = static_cast<unsigned char>(tok.surface[0]);
        bool alnum = std::isalnum(c) || c >= 0x80;
        if (!alnum) continue;
        std::string w = tok.surface;
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char ch) { return ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch); });
        grams.push_back(std::move(w));
    }
    auto add = [&](std::string_view feature) {
        auto h = fnv1a64(feature);
        auto idx = static_cast<std::size_t>(h % dimension_);
        out.values[idx] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < grams.size(); ++i) {
        add("u:" + grams[i]);
        if (i + 1 < grams.size()) add("b:" + grams[i] + " " + grams[i + 1]);
    }
    return out;
}

// ---------------------------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(Options options)
    : options_(std::move(options)), id_("remote:" + options_.model), dimension_(options_.dimension) {
    if (options_.base_url.empty()) throw ConfigError("remote embedder needs a base_url");
    if (options_.model.empty()) throw ConfigError("remote embedder needs a model");
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    json body = {{"model", options_.model}, {"input", std::string(text)}};
    std::vector<std::pair<std::string, std::string>> headers;
    if (auto key = credential_from_env(options_.api_key_env); !key.empty())
        headers.emplace_back("Authorization", "Bearer " + key);

    auto res = post_json(options_.base_url, "/embeddings", body.dump(), headers, options_.retry);
    EmbeddingVector out;
    out.provider_id = id_;
    try {
        auto parsed = json::parse(res.body);
        for (const auto& x : parsed.at("data").at(0).at("embedding")) out.values.push_back(x.get<double>());
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what(), res.attempts);
    }
    for (double x : out.values)
        if (!std::isfinite(x)) throw IntegrityError("remote embedding contains a non-finite entry");

    std::lock_guard lock(mu_);
    if (dimension_ == 0) dimension_ = out.dimension();
    if (out.dimension() != dimension_)
        throw IntegrityError("embedding dimension drifted from " + std::to_string(dimension_) + " to " +
                             std::to_string(out.dimension()));
    return out;
}

// ---------------------------------------------------------------------------

void PreferenceStore::append(PreferenceRecord record) {
    if (record.round != static_cast<int>(records_.size()) + 1)
        throw UsageError("out-of-order append: expected round " + std::to_string(records_.size() + 1) +
                         ", got " + std::to_string(record.round));
    if (!records_.empty()) {
        const auto& first = records_.front().embedding;
        if (record.embedding.dimension() != first.dimension() || record.embedding.provider_id != first.provider_id)
            throw IntegrityError("embedding from '" + record.embedding.provider_id + "' (dimension " +
                                 std::to_string(record.embedding.dimension()) + ") does not match store ('" +
                                 first.provider_id + "', dimension " + std::to_string(first.dimension()) + ")");
    }
    for (double x : record.embedding.values)
        if (!std::isfinite(x)) throw IntegrityError("embedding contains a non-finite entry");
    records_.push_back(std::move(record));
    latest_override_.emplace_back();
}

std::vector<RetrievedPreference> PreferenceStore::retrieve_top_k(const EmbeddingVector& query, int k) const {
    std::vector<const EmbeddingVector*> candidates;
    candidates.reserve(records_.size());
    for (const auto& rec : records_) candidates.push_back(&rec.embedding);

    std::vector<RetrievedPreference> out;
    for (auto [idx, sim] : rank_by_cosine(query, candidates, k)) {
        const auto& rec = records_[idx];
        out.push_back({rec.round, effective_preference(rec.round), sim});
    }
    return out;
}

const std::string& PreferenceStore::effective_preference(int round) const {
    if (round < 1 || round > static_cast<int>(records_.size()))
        throw NotFoundError("no preference recorded for round " + std::to_string(round));
    auto idx = static_cast<std::size_t>(round - 1);
    if (auto o = latest_override_[idx]) return overrides_[*o].text;
    return records_[idx].preference;
}

PreferenceView PreferenceStore::supersede(int round, std::string text) {
    if (round < 1 || round > static_cast<int>(records_.size()))
        throw NotFoundError("no preference recorded for round " + std::to_string(round));
    overrides_.push_back({round, std::move(text)});
    latest_override_[static_cast<std::size_t>(round - 1)] = overrides_.size() - 1;
    int revision = 0;
    for (const auto& o : overrides_)
        if (o.round == round) ++revision;
    return {round, overrides_.back().text, true, revision};
}

std::vector<PreferenceView> PreferenceStore::views() const {
    std::vector<PreferenceView> out;
    for (const auto& rec : records_) {
        auto idx = static_cast<std::size_t>(rec.round - 1);
        out.push_back({rec.round, rec.preference, !latest_override_[idx].has_value(), 0});
        int revision = 0;
        for (std::size_t i = 0; i < overrides_.size(); ++i) {
            if (overrides_[i].round != rec.round) continue;
            out.push_back({rec.round, overrides_[i].text, latest_override_[idx] == i, ++revision});
        }
    }
    return out;
}

std::string PreferenceStore::snapshot() const {
    std::string out;
    for (const auto& rec : records_) {
        json line = {{"type", "record"},
                     {"round", rec.round},
                     {"preference", rec.preference},
                     {"provider", rec.embedding.provider_id},
                     {"embedding", rec.embedding.values},
                     {"source_tag", rec.source_tag.reveal()}};
        out += line.dump() + "\n";
    }
    for (const auto& o : overrides_) {
        json line = {{"type", "override"}, {"round", o.round}, {"text", o.text}};
        out += line.dump() + "\n";
    }
    return out;
}

PreferenceStore PreferenceStore::from_snapshot(std::string_view jsonl) {
    PreferenceStore store;
    std::size_t pos = 0, line_no = 0;
    while (pos < jsonl.size()) {
        auto eol = jsonl.find('\n', pos);
        if (eol == std::string_view::npos) eol = jsonl.size();
        auto line = jsonl.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            auto type = j.at("type").get<std::string>();
            if (type == "record") {
                PreferenceRecord rec;
                rec.round = j.at("round").get<int>();
                rec.preference = j.at("preference").get<std::string>();
                rec.embedding.provider_id = j.at("provider").get<std::string>();
                rec.embedding.values = j.at("embedding").get<std::vector<double>>();
                rec.source_tag = HiddenTag(j.value("source_tag", ""));
                store.append(std::move(rec));
            } else if (type == "override") {
                store.supersede(j.at("round").get<int>(), j.at("text").get<std::string>());
            } else {
                throw LoadError("unknown snapshot line type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw LoadError("store snapshot line " + std::to_string(line_no) + ": " + e.what());
        } catch (const LoadError& e) {
            throw LoadError("store snapshot line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

}  // namespace prelude
