#include "prelude/metrics.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prelude/error.hpp"

namespace prelude {

MetricSeries cumulative_cost(const std::vector<RoundLog>& logs) {
    MetricSeries s{"cumulative_cost", {}, 0};
    double sum = 0.0;
    for (const auto& l : logs) {
        sum += static_cast<double>(l.cost);
        s.points.push_back({l.round, sum});
    }
    return s;
}

namespace {

template <typename F>
MetricSeries binned(const std::vector<RoundLog>& logs, int bin, std::string name, F value) {
    if (bin < 1) throw UsageError("bin size must be >= 1");
    MetricSeries s{std::move(name), {}, bin};
    for (std::size_t start = 0; start < logs.size(); start += static_cast<std::size_t>(bin)) {
        auto end = std::min(logs.size(), start + static_cast<std::size_t>(bin));
        double sum = 0.0;
        for (auto i = start; i < end; ++i) sum += value(logs[i]);
        s.points.push_back({logs[end - 1].round, sum / static_cast<double>(end - start)});
    }
    return s;
}

}  // namespace

MetricSeries binned_normalized(const std::vector<RoundLog>& logs, int bin) {
    return binned(logs, bin, "normalized_cost", [](const RoundLog& l) { return l.normalized; });
}

MetricSeries zero_cost_fraction(const std::vector<RoundLog>& logs, int bin) {
    return binned(logs, bin, "zero_cost_fraction", [](const RoundLog& l) { return l.cost == 0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> f1_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        }
        // punctuation is dropped without splitting
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

double TokenF1Scorer::score(std::string_view a, std::string_view b) const {
    auto wa = f1_words(a);
    auto wb = f1_words(b);
    if (wa.empty() && wb.empty()) return 1.0;
    if (wa.empty() || wb.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& w : wa) ++counts[w];
    std::size_t overlap = 0;
    for (const auto& w : wb) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(wa.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(wb.size());
    return 2.0 * precision * recall / (precision + recall);
}

std::shared_ptr<const SimilarityScorer> make_scorer(std::string_view id) {
    if (id == "token-f1") return std::make_shared<TokenF1Scorer>();
    if (id == "exact-match") return std::make_shared<ExactMatchScorer>();
    throw ConfigError("unknown similarity scorer '" + std::string(id) + "'");
}

std::vector<std::optional<bool>> accuracy_hits(const std::vector<RoundLog>& logs, const LatentBySource& latent,
                                               const SimilarityScorer& scorer, std::vector<std::string>* failures) {
    if (latent.size() < 2) throw UsageError("preference accuracy needs at least two latent preferences");
    std::vector<std::optional<bool>> hits;
    hits.reserve(logs.size());
    for (const auto& l : logs) {
        if (!l.preference_used) {
            hits.emplace_back();
            continue;
        }
        try {
            double best = 0.0;
            int best_count = 0;
            double truth = 0.0;
            bool first = true;
            bool truth_seen = false;
            for (const auto& [source, pref] : latent) {
                double s = scorer.score(*l.preference_used, pref);
                if (first || s > best) {
                    best = s;
                    best_count = 1;
                    first = false;
                } else if (s == best) {
                    ++best_count;
                }
                if (source == l.source) {
                    truth = s;
                    truth_seen = true;
                }
            }
            hits.emplace_back(truth_seen && truth == best && best_count == 1);
        } catch (const std::exception& e) {
            if (failures) failures->push_back("round " + std::to_string(l.round) + ": " + e.what());
            hits.emplace_back(false);
        }
    }
    return hits;
}

std::optional<double> preference_accuracy(const std::vector<RoundLog>& logs, const LatentBySource& latent,
                                          const SimilarityScorer& scorer, std::vector<std::string>* failures) {
    auto hits = accuracy_hits(logs, latent, scorer, failures);
    if (hits.empty()) return std::nullopt;
    std::size_t n = 0;
    for (const auto& h : hits) {
        if (!h) return std::nullopt;
        n += *h ? 1 : 0;
    }
    return static_cast<double>(n) / static_cast<double>(hits.size());
}

std::optional<double> retrieval_accuracy(const std::vector<RoundLog>& logs) {
    std::unordered_map<int, const RoundLog*> by_round;
    for (const auto& l : logs) by_round[l.round] = &l;
    std::size_t total = 0, same = 0;
    for (const auto& l : logs) {
        for (int r : l.retrieved_rounds) {
            auto it = by_round.find(r);
            if (it == by_round.end()) throw UsageError("round " + std::to_string(l.round) +
                                                       " retrieved unknown round " + std::to_string(r));
            ++total;
            if (it->second->source == l.source) ++same;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(total);
}

ExpenseReport expense_report(const std::vector<LedgerEntry>& entries) {
    return {usage_total(entries, CallerRole::Agent), usage_total(entries, CallerRole::UserSimulator)};
}

ExpenseReport expense_report(const UsageLedger& ledger) { return expense_report(ledger.entries()); }

std::vector<LedgerEntry> ledger_entries(const std::vector<RoundLog>& logs) {
    std::vector<LedgerEntry> out;
    for (const auto& l : logs) out.insert(out.end(), l.calls.begin(), l.calls.end());
    return out;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

nlohmann::ordered_json totals_json(const UsageTotals& t) {
    return {{"input", t.input}, {"output", t.output}, {"total", t.total}};
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw LoadError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

}  // namespace

std::string summary_json(const RunSummary& s) {
    nlohmann::ordered_json j = {{"policy", s.policy},
                                {"task", s.task},
                                {"tokenizer_id", s.tokenizer_id},
                                {"embedder_id", s.embedder_id},
                                {"scorer_id", s.scorer_id},
                                {"seed", s.seed},
                                {"rounds", s.rounds},
                                {"total_cost", s.total_cost},
                                {"accuracy", optional_json(s.accuracy)},
                                {"accuracy_convention", s.accuracy_convention},
                                {"retrieval_accuracy", optional_json(s.retrieval_accuracy)},
                                {"expense", totals_json(s.expense.agent)},
                                {"user_simulator_tokens", totals_json(s.expense.user_simulator)}};
    return j.dump(2);
}

std::string run_csv(const std::vector<RoundLog>& logs, const std::vector<std::optional<bool>>& hits) {
    std::string out = "round,doc_id,source,cost,cum_cost,normalized,zero_edit,tokens_in,tokens_out,accuracy_hit\n";
    std::size_t cum = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& l = logs[i];
        cum += l.cost;
        std::string hit;
        if (i < hits.size() && hits[i]) hit = *hits[i] ? "1" : "0";
        out += std::to_string(l.round) + "," + csv_field(l.doc_id) + "," + csv_field(l.source) + "," +
               std::to_string(l.cost) + "," + std::to_string(cum) + "," + format_double(l.normalized) + "," +
               (l.zero_edit ? "1" : "0") + "," + std::to_string(l.agent_usage.input_tokens) + "," +
               std::to_string(l.agent_usage.output_tokens) + "," + hit + "\n";
    }
    return out;
}

void write_text_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << contents;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

void emit_run_csv(const std::vector<RoundLog>& logs, const std::vector<std::optional<bool>>& hits,
                  const std::string& path) {
    write_text_file(path, run_csv(logs, hits));
}

std::vector<CsvRow> parse_run_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 10) throw LoadError("csv line " + std::to_string(line_no) + ": expected 10 fields");
        CsvRow r;
        r.round = parse_number<int>(f[0], line_no);
        r.doc_id = f[1];
        r.source = f[2];
        r.cost = parse_number<std::size_t>(f[3], line_no);
        r.cum_cost = parse_number<std::size_t>(f[4], line_no);
        r.normalized = parse_number<double>(f[5], line_no);
        r.zero_edit = f[6] == "1";
        r.tokens_in = parse_number<std::size_t>(f[7], line_no);
        r.tokens_out = parse_number<std::size_t>(f[8], line_no);
        if (!f[9].empty()) r.accuracy_hit = f[9] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<CsvRow> read_run_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_csv(buf.str());
}

std::string comparison_csv(const std::vector<std::pair<std::string, std::vector<RoundLog>>>& runs) {
    std::string out = "round";
    std::size_t max_rounds = 0;
    std::vector<MetricSeries> series;
    for (const auto& [label, logs] : runs) {
        out += "," + csv_field(label);
        series.push_back(cumulative_cost(logs));
        max_rounds = std::max(max_rounds, logs.size());
    }
    out += "\n";
    for (std::size_t i = 0; i < max_rounds; ++i) {
        out += std::to_string(i + 1);
        for (const auto& s : series) {
            out += ",";
            if (i < s.points.size()) out += format_double(s.points[i].value);
        }
        out += "\n";
    }
    return out;
}

void emit_comparison_csv(const std::vector<std::pair<std::string, std::vector<RoundLog>>>& runs,
                         const std::string& path) {
    write_text_file(path, comparison_csv(runs));
}

std::string series_csv(const MetricSeries& s) {
    std::string out = "round," + s.name + "\n";
    for (const auto& p : s.points) out += std::to_string(p.round) + "," + format_double(p.value) + "\n";
    return out;
}

}  // namespace prelude
