#include <doctest.h>

#include "prelude/error.hpp"
#include "prelude/simulated_user.hpp"
#include "prelude/text_transforms.hpp"
#include "support.hpp"

using namespace prelude;
namespace pt = prelude::testing;

TEST_SUITE("simulated-user") {

TEST_CASE("default registry carries the nine published preferences") {
    auto r = LatentPreferenceRegistry::defaults();
    const auto S = Task::Summarization, E = Task::Email;
    CHECK(r.sources(S).size() == 5);
    CHECK(r.sources(E).size() == 4);
    CHECK(r.preference(S, "news_article") ==
          "targeted to young children, storytelling, short sentences, playful language, interactive, positive");
    CHECK(r.preference(S, "reddit_post") ==
          "second person narrative, brief, show emotions, invoke personal reflection, immersive");
    CHECK(r.preference(S, "wikipedia_page") == "bullet points, parallel structure, brief");
    CHECK(r.preference(S, "paper_abstract") ==
          "tweet style, simple English, inquisitive, skillful foreshadowing, with emojis");
    CHECK(r.preference(S, "movie_review") == "question answering style, direct, concise");
    CHECK(r.preference(E, "personal_problem") == "informal, conversational, short, no closing");
    CHECK(r.preference(E, "paper_review") == "casual tone, positive, clear, call to action");
    CHECK(r.preference(E, "paper_tweet") == "engaging, personalized, professional tone, thankful closing");
    CHECK(r.preference(E, "paper_summary") ==
          "structured, straight to the points, respectful, professional greeting and closing");
    CHECK_THROWS_AS(r.preference(S, "personal_problem"), NotFoundError);
}

TEST_CASE("registry loads from JSON") {
    auto r = LatentPreferenceRegistry::from_json(R"({"summarization": {"a": "x"}, "email": {"b": "y"}})");
    CHECK(r.preference(Task::Email, "b") == "y");
    CHECK_THROWS_AS(LatentPreferenceRegistry::from_json("[1"), LoadError);
}

TEST_CASE("sentence splitting and the four transforms") {
    namespace tf = transforms;
    const std::string text = "First one. Second one! Third one? Fourth one.";
    CHECK(tf::split_sentences(text).size() == 4);
    CHECK(tf::split_sentences("No terminator").size() == 1);
    CHECK(tf::split_sentences("Version 2.5 shipped.").size() == 1);
    CHECK(tf::uppercase("Mixed Case 1") == "MIXED CASE 1");
    CHECK(tf::bulletize(text) == "- First one.\n- Second one!\n- Third one?\n- Fourth one.");
    CHECK(tf::bulletize(tf::bulletize(text)) == tf::bulletize(text));
    CHECK(tf::first_sentences(text, 3) == "First one. Second one! Third one?");
    CHECK(tf::append_closing("Hi.") == "Hi.\n\nCheers, the editor.");
    CHECK(tf::append_closing(tf::append_closing("Hi.")) == tf::append_closing("Hi."));
    CHECK_THROWS_AS(tf::apply("reverse", text), ConfigError);
}

TEST_CASE("every rule is idempotent: the edit of an edit is unchanged") {
    const std::string text = "Alpha beta gamma. Delta epsilon. Zeta eta theta. Iota kappa. Lambda mu.";
    for (const auto& id : builtin_rule_ids()) {
        auto rule = builtin_rule(id);
        CHECK_FALSE(rule.satisfied(text));
        auto once = rule_user_edit(text, rule);
        CHECK(rule.satisfied(once));
        CHECK(rule_user_edit(once, rule) == once);
    }
    CHECK_THROWS_AS(builtin_rule("nope"), ConfigError);
}

TEST_CASE("rule user edits by source and exposes its registry") {
    RuleUser user(pt::demo_rules());
    auto r = user.edit("ctx", "Some text. More text.", "news_article");
    CHECK(r.revision == "SOME TEXT. MORE TEXT.");
    CHECK_FALSE(r.satisfied);
    CHECK(user.edit("ctx", "DONE.", "news_article").satisfied);
    CHECK(user.registry(Task::Summarization).preference(Task::Summarization, "reddit_post") ==
          "bullet points for each sentence");
    CHECK_THROWS_AS(user.edit("ctx", "x", "movie_review"), NotFoundError);
}

TEST_CASE("yes/no parsing reads the first alphabetic word") {
    bool odd = false;
    CHECK(parse_yes_no("Yes, it is.", &odd));
    CHECK_FALSE(odd);
    CHECK_FALSE(parse_yes_no("  no.", &odd));
    CHECK_FALSE(odd);
    CHECK_FALSE(parse_yes_no("Yesterday was fine", &odd));
    CHECK(odd);
    CHECK_FALSE(parse_yes_no("**Maybe**", &odd));
    CHECK(odd);
    CHECK_FALSE(parse_yes_no("", &odd));
    CHECK(odd);
}

TEST_CASE("llm user: yes skips the edit, no triggers one revision call") {
    auto backend = ScriptedBackend::from_json(R"({"rules": [
        {"purpose": "user-check", "contains": ["Summary: GOOD"], "response": "Yes."},
        {"purpose": "user-check", "contains": ["Summary: weird"], "response": "Perhaps"},
        {"purpose": "user-check", "response": "No."},
        {"purpose": "user-edit", "echo": {"after": "Summary: ", "until": "\nPlease revise"}, "transform": "uppercase"}]})");
    Gateway gw(backend, std::make_shared<FallbackTokenizer>());
    LatentPreferenceRegistry reg;
    reg.set(Task::Summarization, "src", "uppercase everything");
    LlmUser user(gw, Task::Summarization, reg);

    auto ok = user.edit("article", "GOOD", "src");
    CHECK(ok.satisfied);
    CHECK(ok.revision == "GOOD");
    CHECK(gw.ledger().size() == 1);

    auto fixed = user.edit("article", "bad draft", "src");
    CHECK_FALSE(fixed.satisfied);
    CHECK(fixed.revision == "BAD DRAFT");
    CHECK(gw.ledger().size() == 3);
    for (const auto& e : gw.ledger().entries()) CHECK(e.caller_role == CallerRole::UserSimulator);

    auto odd = user.edit("article", "weird", "src");
    CHECK(odd.parse_anomaly);
    CHECK(odd.revision == "WEIRD");
    CHECK(user.anomalies() == std::vector<std::string>{"Perhaps"});
    CHECK_THROWS_AS(user.edit("article", "x", "unknown"), NotFoundError);
}

}
