#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "prelude/prompts.hpp"

namespace prelude::testing {

std::string data_path(const std::string& name) { return std::string(PRELUDE_DATA_DIR) + "/" + name; }
std::string golden_path(const std::string& name) { return std::string(PRELUDE_GOLDEN_DIR) + "/" + name; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t oracle_levenshtein(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == 0) return j;
        if (j == 0) return i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
        memo[key] = best;
        return best;
    };
    return d(a.size(), b.size());
}

double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> oracle_top_k(const std::vector<double>& query, const std::vector<std::vector<double>>& rows,
                                      int k) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < rows.size(); ++i) scored.emplace_back(oracle_cosine(query, rows[i]), i);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i) out.push_back(scored[i].second);
    return out;
}

std::shared_ptr<const ChatBackend> closure_backend() {
    static auto backend = ScriptedBackend::load(data_path("scripted_rules.json"));
    return backend;
}

Corpus demo_corpus(Task task) { return load_corpus(data_path("demo_corpus.jsonl"), task); }

std::map<std::string, std::string> demo_rules() {
    return {{"news_article", "uppercase"},
            {"reddit_post", "bullets"},
            {"wikipedia_page", "first-3-sentences"},
            {"paper_abstract", "closing"}};
}

UserConfig rule_user() {
    UserConfig u;
    u.mode = UserConfig::Mode::Rule;
    u.rules = demo_rules();
    return u;
}

RunComponents components(PolicyConfig policy, std::shared_ptr<const ChatBackend> backend) {
    RunComponents c;
    c.policy = policy;
    c.backend = std::move(backend);
    c.tokenizer = std::make_shared<FallbackTokenizer>();
    c.embedder = std::make_shared<HashEmbedder>(256);
    c.scorer = make_scorer("token-f1");
    return c;
}

PolicyConfig policy(PolicyKind kind, int k) {
    PolicyConfig p;
    p.kind = kind;
    p.k = k;
    return p;
}

BackendReply RecordingBackend::reply(const ChatRequest& request) const {
    auto r = inner_->reply(request);
    std::lock_guard lock(mu_);
    calls_.push_back({request, r.text});
    return r;
}

std::vector<RecordingBackend::Call> RecordingBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

TempDir::TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("prelude-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::vector<std::pair<std::string, std::string>> golden_instantiations() {
    const std::string X = "The river rose after three days of rain.";
    const std::string N = "meet Sam friday, bring the slides";
    const std::string Y = "River rose after rain.";
    const std::string R = "RIVER ROSE AFTER RAIN.";
    const std::string F = "uppercase everything";
    const std::vector<EditPair> one{{Y, R}};
    const std::vector<EditPair> two{{Y, R}, {"Second draft.", "- Second draft."}};
    const std::vector<std::string> prefs{F, "bullet points for each sentence"};
    using T = Task;
    return {
        {"generation_summarization.txt", prompts::generation(T::Summarization, X, F)},
        {"generation_email.txt", prompts::generation(T::Email, N, F)},
        {"inference_summarization.txt", prompts::inference(T::Summarization, one)},
        {"inference_email.txt", prompts::inference(T::Email, one)},
        {"aggregation_summarization.txt", prompts::aggregation(T::Summarization, prefs)},
        {"aggregation_email.txt", prompts::aggregation(T::Email, prefs)},
        {"icl_edit_summarization.txt", prompts::icl_edit(T::Summarization, X, two)},
        {"icl_edit_email.txt", prompts::icl_edit(T::Email, N, two)},
        {"user_check_summarization.txt", prompts::user_check(T::Summarization, X, Y, F)},
        {"user_check_email.txt", prompts::user_check(T::Email, N, Y, F)},
        {"user_revise_summarization.txt", prompts::user_revise(T::Summarization, Y, F)},
        {"user_revise_email.txt", prompts::user_revise(T::Email, Y, F)},
    };
}

}  // namespace prelude::testing
