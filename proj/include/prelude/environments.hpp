#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/embeddings.hpp"
#include "prelude/llm_gateway.hpp"
#include "prelude/metrics.hpp"
#include "prelude/policies.hpp"
#include "prelude/round_log.hpp"
#include "prelude/simulated_user.hpp"

namespace prelude {

struct Document {
    std::string doc_id;
    std::string source;
    std::string text;

    bool operator==(const Document&) const = default;
};

class Corpus {
public:
    Corpus() = default;
    Corpus(Task task, std::vector<Document> documents);

    Task task() const noexcept { return task_; }
    const std::vector<Document>& documents() const noexcept { return documents_; }
    std::size_t size() const noexcept { return documents_.size(); }

    // Throws NotFoundError.
    const Document& get(const std::string& doc_id) const;
    // Sorted, distinct.
    std::vector<std::string> sources() const;

private:
    Task task_ = Task::Summarization;
    std::vector<Document> documents_;
    std::map<std::string, std::size_t> index_;
};

// Line-delimited JSON with string fields doc_id, source, text (non-empty).
// Duplicate ids and, when a registry is given, sources without a latent
// preference are rejected. Errors carry the line number.
Corpus parse_corpus(std::string_view jsonl, Task task, const LatentPreferenceRegistry* registry = nullptr,
                    std::string_view origin = "<memory>");
Corpus load_corpus(const std::string& path, Task task, const LatentPreferenceRegistry* registry = nullptr);

struct Schedule {
    std::vector<std::string> rounds;  // doc ids, length T
    std::uint64_t seed = 0;

    bool operator==(const Schedule&) const = default;
};

// Balanced sampling without replacement: every source contributes
// floor(T/n) or ceil(T/n) documents (which sources get the extra one is
// seed-determined), then the whole list is shuffled. Throws ConfigError when
// a source has fewer than ceil(T/n) documents.
Schedule schedule_rounds(const Corpus& corpus, int rounds, std::uint64_t seed);

struct UserConfig {
    enum class Mode { Rule, Llm };
    Mode mode = Mode::Rule;
    std::map<std::string, std::string> rules;  // source -> rule id (rule mode)
    LatentPreferenceRegistry registry;         // llm mode

    // Latent preference text per source for the given task.
    LatentBySource latent(Task task) const;
};

struct RunComponents {
    PolicyConfig policy;
    std::shared_ptr<const ChatBackend> backend;
    std::shared_ptr<const Tokenizer> tokenizer;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const SimilarityScorer> scorer;  // defaults to token-f1
};

// One policy walking one schedule. Both the batch loop and live sessions
// drive rounds through this: begin_round() drafts the next scheduled
// context, commit_round() takes the revision, lets the policy learn and
// returns the round's log. Ledger entries between the two calls (e.g. a
// simulated user's) are attributed to the round.
class Episode {
public:
    // `latent` is needed only by the oracle policy.
    Episode(const Corpus& corpus, Schedule schedule, const RunComponents& components, LatentBySource latent = {});

    bool done() const noexcept { return next_round_ > static_cast<int>(schedule_.rounds.size()); }
    int next_round() const noexcept { return next_round_; }
    const Document& next_document() const;

    Draft begin_round();
    RoundLog commit_round(const Draft& draft, std::string_view revision);

    // Restores state from an already committed log without LLM calls.
    void replay(const RoundLog& log);

    Gateway& gateway() noexcept { return gateway_; }
    Policy& policy() noexcept { return *policy_; }
    const Schedule& schedule() const noexcept { return schedule_; }
    const std::vector<RoundLog>& logs() const noexcept { return logs_; }

private:
    const Corpus& corpus_;
    Schedule schedule_;
    Gateway gateway_;
    LatentBySource latent_;
    std::unique_ptr<Policy> policy_;
    std::vector<RoundLog> logs_;
    int next_round_ = 1;
    std::size_t ledger_mark_ = 0;
};

struct RunOptions {
    // When set, logs are appended here one line per committed round and an
    // existing file is resumed from its last committed round.
    std::optional<std::string> log_path;
};

struct RunResult {
    std::vector<RoundLog> logs;
    std::vector<LedgerEntry> ledger;
    RunSummary summary;
};

// The interactive loop: for each scheduled context the policy drafts, the
// simulated user edits, the policy learns, and one RoundLog is committed.
// A failing round aborts the run after the completed rounds are flushed.
RunResult run_experiment(const Corpus& corpus, const Schedule& schedule, const RunComponents& components,
                         const UserConfig& user, const RunOptions& options = {});

RunSummary summarize(const std::vector<RoundLog>& logs, const RunComponents& components, Task task,
                     const LatentBySource& latent, std::uint64_t seed);

// Fisher-Yates with an unbiased bounded draw. std::mt19937_64 output is fixed
// by the standard; the std distributions are not, so they are avoided.
class SeededShuffler {
public:
    explicit SeededShuffler(std::uint64_t seed);
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace prelude
