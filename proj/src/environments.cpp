#include "prelude/environments.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"

namespace prelude {

using nlohmann::json;

Corpus::Corpus(Task task, std::vector<Document> documents) : task_(task), documents_(std::move(documents)) {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (!index_.emplace(documents_[i].doc_id, i).second)
            throw LoadError("duplicate doc_id '" + documents_[i].doc_id + "'");
    }
}

const Document& Corpus::get(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) throw NotFoundError("unknown doc_id '" + doc_id + "'");
    return documents_[it->second];
}

std::vector<std::string> Corpus::sources() const {
    std::set<std::string> s;
    for (const auto& d : documents_) s.insert(d.source);
    return {s.begin(), s.end()};
}

Corpus parse_corpus(std::string_view jsonl, Task task, const LatentPreferenceRegistry* registry,
                    std::string_view origin) {
    std::vector<Document> docs;
    std::map<std::string, std::size_t> seen;
    std::size_t pos = 0, line_no = 0;
    while (pos < jsonl.size()) {
        auto eol = jsonl.find('\n', pos);
        if (eol == std::string_view::npos) eol = jsonl.size();
        auto line = jsonl.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        auto where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw LoadError(where + "invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw LoadError(where + "expected an object");
        Document d;
        for (auto [field, target] : {std::pair{"doc_id", &d.doc_id}, {"source", &d.source}, {"text", &d.text}}) {
            if (!j.contains(field) || !j[field].is_string())
                throw LoadError(where + "field '" + field + "' must be a string");
            *target = j[field].get<std::string>();
            if (target->empty()) throw LoadError(where + "field '" + field + "' is empty");
        }
        if (auto [it, fresh] = seen.emplace(d.doc_id, line_no); !fresh)
            throw LoadError(where + "duplicate doc_id '" + d.doc_id + "' (first on line " +
                            std::to_string(it->second) + ")");
        docs.push_back(std::move(d));
    }
    Corpus corpus(task, std::move(docs));
    if (registry) {
        std::string orphans;
        for (const auto& s : corpus.sources()) {
            if (!registry->contains(task, s)) orphans += (orphans.empty() ? "" : ", ") + s;
        }
        if (!orphans.empty())
            throw LoadError(std::string(origin) + ": sources without a latent preference: " + orphans);
    }
    return corpus;
}

Corpus load_corpus(const std::string& path, Task task, const LatentPreferenceRegistry* registry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open corpus '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), task, registry, path);
}

// ---------------------------------------------------------------------------

SeededShuffler::SeededShuffler(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededShuffler::below(std::uint64_t bound) {
    if (bound == 0) throw UsageError("empty range");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

Schedule schedule_rounds(const Corpus& corpus, int rounds, std::uint64_t seed) {
    if (rounds < 1) throw ConfigError("number of rounds must be >= 1");
    auto sources = corpus.sources();
    if (sources.empty()) throw ConfigError("corpus is empty");

    const auto n = sources.size();
    const auto T = static_cast<std::size_t>(rounds);
    const auto base = T / n;
    const auto extra = T % n;
    const auto needed = base + (extra ? 1 : 0);

    std::map<std::string, std::vector<std::string>> by_source;
    for (const auto& d : corpus.documents()) by_source[d.source].push_back(d.doc_id);

    std::string shortfall;
    for (const auto& s : sources) {
        if (by_source[s].size() < needed)
            shortfall += (shortfall.empty() ? "" : ", ") + s + " has " + std::to_string(by_source[s].size());
    }
    if (!shortfall.empty())
        throw ConfigError(std::to_string(rounds) + " rounds over " + std::to_string(n) + " sources need " +
                          std::to_string(needed) + " documents per source; " + shortfall);

    SeededShuffler rng(seed);
    auto order = sources;
    rng.shuffle(order);
    std::map<std::string, std::size_t> quota;
    for (std::size_t i = 0; i < order.size(); ++i) quota[order[i]] = base + (i < extra ? 1 : 0);

    Schedule schedule;
    schedule.seed = seed;
    for (const auto& s : sources) {
        auto ids = by_source[s];
        rng.shuffle(ids);
        ids.resize(quota[s]);
        schedule.rounds.insert(schedule.rounds.end(), ids.begin(), ids.end());
    }
    rng.shuffle(schedule.rounds);
    return schedule;
}

// ---------------------------------------------------------------------------

LatentBySource UserConfig::latent(Task task) const {
    if (mode == Mode::Rule) {
        LatentBySource out;
        for (const auto& [source, rule] : rules) out[source] = builtin_rule(rule).description;
        return out;
    }
    return registry.entries(task);
}

Episode::Episode(const Corpus& corpus, Schedule schedule, const RunComponents& components, LatentBySource latent)
    : corpus_(corpus),
      schedule_(std::move(schedule)),
      gateway_(components.backend, components.tokenizer),
      latent_(std::move(latent)) {
    components.policy.validate();
    for (const auto& id : schedule_.rounds) corpus_.get(id);
    policy_ = make_policy(components.policy, {corpus_.task(), &gateway_, components.embedder});
}

const Document& Episode::next_document() const {
    if (done()) throw UsageError("schedule exhausted");
    return corpus_.get(schedule_.rounds[static_cast<std::size_t>(next_round_ - 1)]);
}

Draft Episode::begin_round() {
    const auto& doc = next_document();
    gateway_.set_round(next_round_);
    ledger_mark_ = gateway_.ledger().size();
    std::optional<std::string> latent;
    if (policy_->kind() == PolicyKind::Oracle) {
        auto it = latent_.find(doc.source);
        if (it == latent_.end()) throw ConfigError("oracle policy has no latent preference for the scheduled document");
        latent = it->second;
    }
    return policy_->draft(next_round_, doc.text, latent);
}

RoundLog Episode::commit_round(const Draft& draft, std::string_view revision) {
    if (draft.round != next_round_) throw UsageError("draft does not belong to the current round");
    const auto& doc = next_document();
    auto outcome = policy_->learn(draft, revision, HiddenTag(doc.source));

    RoundLog log;
    log.round = draft.round;
    log.doc_id = doc.doc_id;
    log.source = doc.source;
    log.preference_used = outcome.preference_used;
    log.response = outcome.response;
    log.revision = outcome.revision;
    log.cost = outcome.cost;
    log.normalized = outcome.normalized;
    log.zero_edit = outcome.cost == 0;
    log.retrieved_rounds = outcome.retrieved_rounds;
    log.stored_preference = outcome.stored_preference;
    auto entries = gateway_.ledger().entries();
    for (auto i = ledger_mark_; i < entries.size(); ++i) {
        const auto& e = entries[i];
        (e.caller_role == CallerRole::Agent ? log.agent_usage : log.user_usage) += e.usage;
        log.calls.push_back(e);
    }
    ledger_mark_ = entries.size();
    logs_.push_back(log);
    ++next_round_;
    return log;
}

void Episode::replay(const RoundLog& log) {
    if (log.round != next_round_) throw UsageError("replayed log is out of order");
    const auto& doc = next_document();
    if (doc.doc_id != log.doc_id)
        throw IntegrityError("log for round " + std::to_string(log.round) + " names document '" + log.doc_id +
                             "' but the schedule has '" + doc.doc_id + "'");
    policy_->replay({log.round, doc.text, log.preference_used, log.response, log.revision, log.stored_preference,
                     HiddenTag(doc.source)});
    for (const auto& e : log.calls) gateway_.ledger().append(e);
    ledger_mark_ = gateway_.ledger().size();
    logs_.push_back(log);
    ++next_round_;
}

// ---------------------------------------------------------------------------

RunSummary summarize(const std::vector<RoundLog>& logs, const RunComponents& components, Task task,
                     const LatentBySource& latent, std::uint64_t seed) {
    RunSummary s;
    s.policy = components.policy.label();
    s.task = std::string(to_string(task));
    s.tokenizer_id = components.tokenizer ? components.tokenizer->id() : "";
    s.embedder_id = components.embedder ? components.embedder->id() : "";
    auto scorer = components.scorer ? components.scorer : make_scorer("token-f1");
    s.scorer_id = scorer->id();
    s.seed = seed;
    s.rounds = static_cast<int>(logs.size());
    for (const auto& l : logs) s.total_cost += l.cost;
    if (latent.size() >= 2) s.accuracy = preference_accuracy(logs, latent, *scorer);
    s.retrieval_accuracy = retrieval_accuracy(logs);
    s.expense = expense_report(ledger_entries(logs));
    return s;
}

RunResult run_experiment(const Corpus& corpus, const Schedule& schedule, const RunComponents& components,
                         const UserConfig& user, const RunOptions& options) {
    const auto task = corpus.task();
    const auto latent = user.latent(task);
    Episode episode(corpus, schedule, components, latent);

    std::unique_ptr<UserSimulator> simulator;
    if (user.mode == UserConfig::Mode::Rule)
        simulator = std::make_unique<RuleUser>(user.rules);
    else
        simulator = std::make_unique<LlmUser>(episode.gateway(), task, user.registry);
    for (const auto& s : corpus.sources()) {
        if (!latent.contains(s)) throw ConfigError("simulated user has no preference for a corpus source");
    }

    std::ofstream sink;
    if (options.log_path) {
        if (std::filesystem::exists(*options.log_path)) {
            for (const auto& log : read_round_logs(*options.log_path)) episode.replay(log);
        }
        sink.open(*options.log_path, std::ios::binary | std::ios::app);
        if (!sink) throw IoError("cannot open round log '" + *options.log_path + "' for appending");
    }

    while (!episode.done()) {
        const auto& doc = episode.next_document();
        auto draft = episode.begin_round();
        auto edit = simulator->edit(doc.text, draft.response, doc.source);
        auto log = episode.commit_round(draft, edit.revision);
        if (sink.is_open()) {
            sink << to_json_line(log) << '\n';
            sink.flush();
            if (!sink) throw IoError("write to round log '" + *options.log_path + "' failed");
        }
    }

    RunResult result;
    result.logs = episode.logs();
    result.ledger = episode.gateway().ledger().entries();
    result.summary = summarize(result.logs, components, task, latent, schedule.seed);
    return result;
}

}  // namespace prelude
