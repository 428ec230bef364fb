#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prelude/llm_gateway.hpp"
#include "prelude/round_log.hpp"

namespace prelude {

struct MetricPoint {
    int round = 0;
    double value = 0.0;

    bool operator==(const MetricPoint&) const = default;
};

// For binned series each point sits at the last round of its bin; the
// final bin may be partial.
struct MetricSeries {
    std::string name;
    std::vector<MetricPoint> points;
    int bin = 0;  // 0: unbinned

    bool operator==(const MetricSeries&) const = default;
};

MetricSeries cumulative_cost(const std::vector<RoundLog>& logs);
MetricSeries binned_normalized(const std::vector<RoundLog>& logs, int bin = 20);
MetricSeries zero_cost_fraction(const std::vector<RoundLog>& logs, int bin = 20);

class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual const std::string& id() const noexcept = 0;
    virtual double score(std::string_view a, std::string_view b) const = 0;
};

class ExactMatchScorer final : public SimilarityScorer {
public:
    const std::string& id() const noexcept override { return id_; }
    double score(std::string_view a, std::string_view b) const override { return a == b ? 1.0 : 0.0; }

private:
    std::string id_{"exact-match"};
};

// F1 over lowercased words after punctuation is stripped. Two empty
// texts score 1, one empty text scores 0.
class TokenF1Scorer final : public SimilarityScorer {
public:
    const std::string& id() const noexcept override { return id_; }
    double score(std::string_view a, std::string_view b) const override;

private:
    std::string id_{"token-f1"};
};

std::shared_ptr<const SimilarityScorer> make_scorer(std::string_view id);

using LatentBySource = std::map<std::string, std::string>;

// Per round: whether the round's true source is the unique argmax of
// scorer(preference_used, latent[d]). Absent for rounds without a
// preference. A scorer failure counts as a miss and is reported in `failures`.
std::vector<std::optional<bool>> accuracy_hits(const std::vector<RoundLog>& logs, const LatentBySource& latent,
                                               const SimilarityScorer& scorer,
                                               std::vector<std::string>* failures = nullptr);

// Mean hit rate over all rounds, or nullopt when the policy keeps no
// preference. Throws UsageError with fewer than two latent entries.
std::optional<double> preference_accuracy(const std::vector<RoundLog>& logs, const LatentBySource& latent,
                                          const SimilarityScorer& scorer,
                                          std::vector<std::string>* failures = nullptr);

// Share of retrieved rounds whose source equals the retrieving round's
// source; nullopt when nothing was retrieved.
std::optional<double> retrieval_accuracy(const std::vector<RoundLog>& logs);

struct ExpenseReport {
    UsageTotals agent;
    UsageTotals user_simulator;

    bool operator==(const ExpenseReport&) const = default;
};

ExpenseReport expense_report(const std::vector<LedgerEntry>& entries);
ExpenseReport expense_report(const UsageLedger& ledger);
// Rebuilds the ledger entries recorded in the logs.
std::vector<LedgerEntry> ledger_entries(const std::vector<RoundLog>& logs);

struct RunSummary {
    std::string policy;
    std::string task;
    std::string tokenizer_id;
    std::string embedder_id;
    std::string scorer_id;
    std::uint64_t seed = 0;
    int rounds = 0;
    std::size_t total_cost = 0;
    std::optional<double> accuracy;
    std::optional<double> retrieval_accuracy;
    ExpenseReport expense;
    std::string accuracy_convention = "mean over all rounds, round 1 included; argmax ties are misses";

    bool operator==(const RunSummary&) const = default;
};

std::string summary_json(const RunSummary& summary);

// Per-run CSV:
// round,doc_id,source,cost,cum_cost,normalized,zero_edit,tokens_in,tokens_out,accuracy_hit
// tokens are agent-side; accuracy_hit is 1/0 or empty when absent.
void emit_run_csv(const std::vector<RoundLog>& logs, const std::vector<std::optional<bool>>& hits,
                  const std::string& path);
std::string run_csv(const std::vector<RoundLog>& logs, const std::vector<std::optional<bool>>& hits);

struct CsvRow {
    int round = 0;
    std::string doc_id;
    std::string source;
    std::size_t cost = 0;
    std::size_t cum_cost = 0;
    double normalized = 0.0;
    bool zero_edit = false;
    std::size_t tokens_in = 0;
    std::size_t tokens_out = 0;
    std::optional<bool> accuracy_hit;
};

std::vector<CsvRow> parse_run_csv(std::string_view text);
std::vector<CsvRow> read_run_csv(const std::string& path);

// One cumulative-cost column per method, keyed by round.
std::string comparison_csv(const std::vector<std::pair<std::string, std::vector<RoundLog>>>& runs);
void emit_comparison_csv(const std::vector<std::pair<std::string, std::vector<RoundLog>>>& runs,
                         const std::string& path);

// Series as "round,value" CSV.
std::string series_csv(const MetricSeries& series);

// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

void write_text_file(const std::string& path, std::string_view contents);

}  // namespace prelude
