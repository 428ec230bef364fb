#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "prelude/config.hpp"
#include "prelude/environments.hpp"
#include "prelude/error.hpp"
#include "support.hpp"

using namespace prelude;
namespace pt = prelude::testing;

TEST_SUITE("environments") {

TEST_CASE("corpus parsing reports line numbers, duplicates and orphan sources") {
    auto ok = parse_corpus(R"({"doc_id": "1", "source": "s", "text": "t"})"
                           "\n\n"
                           R"({"doc_id": "2", "source": "r", "text": "u"})",
                           Task::Summarization);
    CHECK(ok.size() == 2);
    CHECK(ok.sources() == std::vector<std::string>{"r", "s"});
    CHECK(ok.get("2").text == "u");
    CHECK_THROWS_AS(ok.get("3"), NotFoundError);

    CHECK_THROWS_WITH_AS(parse_corpus("{\"doc_id\": \"1\", \"source\": \"s\", \"text\": \"t\"}\n{bad", Task::Email,
                                      nullptr, "c.jsonl"),
                         doctest::Contains("c.jsonl:2"), LoadError);
    CHECK_THROWS_WITH_AS(parse_corpus(R"({"doc_id": "1", "source": "s"})", Task::Email), doctest::Contains("text"),
                         LoadError);
    CHECK_THROWS_WITH_AS(parse_corpus("{\"doc_id\": \"1\", \"source\": \"s\", \"text\": \"t\"}\n"
                                      "{\"doc_id\": \"1\", \"source\": \"s\", \"text\": \"t\"}",
                                      Task::Email),
                         doctest::Contains("duplicate doc_id"), LoadError);
    auto reg = LatentPreferenceRegistry::defaults();
    CHECK_THROWS_WITH_AS(parse_corpus(R"({"doc_id": "1", "source": "zine", "text": "t"})", Task::Summarization, &reg),
                         doctest::Contains("zine"), LoadError);
}

TEST_CASE("schedules are balanced, without replacement and seed-determined") {
    auto corpus = pt::demo_corpus();
    auto s = schedule_rounds(corpus, 202, 9);
    CHECK(s.rounds.size() == 202);
    std::map<std::string, int> per_source;
    std::set<std::string> seen;
    for (const auto& id : s.rounds) {
        ++per_source[corpus.get(id).source];
        CHECK(seen.insert(id).second);
    }
    for (const auto& [source, n] : per_source) CHECK((n == 50 || n == 51));
    CHECK(s == schedule_rounds(corpus, 202, 9));
    CHECK(s.rounds != schedule_rounds(corpus, 202, 10).rounds);
    CHECK_THROWS_WITH_AS(schedule_rounds(corpus, 241, 1), doctest::Contains("need 61"), ConfigError);
    CHECK_THROWS_AS(schedule_rounds(corpus, 0, 1), ConfigError);
}

TEST_CASE("seeded shuffler is reproducible and draws within bounds") {
    SeededShuffler a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        auto x = a.below(7);
        CHECK(x < 7);
        CHECK(x == b.below(7));
    }
    CHECK_THROWS_AS(a.below(0), UsageError);
}

TEST_CASE("a run writes one log per round and resumes from a partial log") {
    auto corpus = pt::demo_corpus();
    auto schedule = schedule_rounds(corpus, 24, 3);
    auto comps = pt::components(pt::policy(PolicyKind::Cipher, 5));
    auto full = run_experiment(corpus, schedule, comps, pt::rule_user());
    REQUIRE(full.logs.size() == 24);

    pt::TempDir dir;
    auto path = (dir.path() / "logs.jsonl").string();
    {
        std::ofstream out(path);
        for (int i = 0; i < 10; ++i) out << to_json_line(full.logs[static_cast<std::size_t>(i)]) << "\n";
    }
    auto resumed = run_experiment(corpus, schedule, comps, pt::rule_user(), RunOptions{path});
    CHECK(resumed.logs == full.logs);
    CHECK(resumed.ledger == full.ledger);
    CHECK(resumed.summary == full.summary);
    CHECK(read_round_logs(path) == full.logs);

    // A log that disagrees with the schedule is refused.
    auto other = schedule_rounds(corpus, 24, 4);
    CHECK_THROWS_AS(run_experiment(corpus, other, comps, pt::rule_user(), RunOptions{path}), IntegrityError);
}

TEST_CASE("summary reports absent accuracy for policies without a preference") {
    auto corpus = pt::demo_corpus();
    auto schedule = schedule_rounds(corpus, 8, 1);
    auto r = run_experiment(corpus, schedule, pt::components(pt::policy(PolicyKind::NoLearning)), pt::rule_user());
    CHECK_FALSE(r.summary.accuracy);
    CHECK(r.summary.rounds == 8);
    CHECK(r.summary.policy == "no-learning");
    auto c = run_experiment(corpus, schedule, pt::components(pt::policy(PolicyKind::Cipher, 1)), pt::rule_user());
    CHECK(c.summary.accuracy);
    CHECK(c.summary.retrieval_accuracy);
}

TEST_CASE("llm-mode user runs through the same gateway and is billed separately") {
    auto corpus = pt::demo_corpus();
    auto schedule = schedule_rounds(corpus, 8, 2);
    UserConfig user;
    user.mode = UserConfig::Mode::Llm;
    for (const auto& [source, rule] : pt::demo_rules())
        user.registry.set(Task::Summarization, source, builtin_rule(rule).description);
    auto r = run_experiment(corpus, schedule, pt::components(pt::policy(PolicyKind::Cipher, 1)), user);
    CHECK(r.summary.expense.user_simulator.total > 0);
    CHECK(r.summary.expense.agent.total > 0);
    for (const auto& l : r.logs) CHECK(l.user_usage.total() > 0);
}

TEST_CASE("experiment config reports the offending field") {
    using nlohmann::json;
    auto base = json::parse(pt::read_file(pt::data_path("experiment.json")));
    auto dir = std::string(PRELUDE_DATA_DIR);
    CHECK_NOTHROW(parse_experiment_config(base, dir));
    auto bad = [&](const char* pointer, json value) {
        auto j = base;
        j[json::json_pointer(pointer)] = value;
        try {
            parse_experiment_config(j, dir);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(bad("/policy/k", 0).find("policy.k") == 0);
    CHECK(bad("/policy/kind", "magic").find("policy.kind") == 0);
    CHECK(bad("/tokenizer/kind", "sentencepiece").find("tokenizer.kind") == 0);
    CHECK(bad("/embedder/kind", "word2vec").find("embedder.kind") == 0);
    CHECK(bad("/backend/kind", "carrier-pigeon").find("backend.kind") == 0);
    CHECK(bad("/user/rules/news_article", "shout").find("user.rules.news_article") == 0);
    CHECK(bad("/rounds", 0).find("rounds") == 0);
    CHECK(bad("/task", "poetry").find("task") == 0);
    CHECK(bad("/policy/delta", "many").find("policy.delta") == 0);
    auto cfg = load_experiment_config(pt::data_path("experiment.json"));
    CHECK(cfg.components.policy.label() == "cipher-5");
    CHECK(load_experiment_corpus(cfg).size() == 240);
}

}
