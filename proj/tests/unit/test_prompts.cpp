#include <doctest.h>

#include "prelude/prompts.hpp"
#include "support.hpp"

using namespace prelude;
namespace pt = prelude::testing;

namespace {

const std::string X = "The river rose after three days of rain.";
const std::string F = "uppercase everything";

std::string golden(const std::string& name) { return pt::read_file(pt::golden_path(name)); }

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("every template row matches its golden file byte for byte") {
    for (const auto& [file, text] : pt::golden_instantiations()) {
        CAPTURE(file);
        CHECK(text == golden(file));
    }
}

TEST_CASE("generation request carries the agent role and generate purpose") {
    auto req = render_generation_prompt(X, F, Task::Summarization);
    REQUIRE(req.messages.size() == 1);
    CHECK(req.caller_role == CallerRole::Agent);
    CHECK(req.purpose == Purpose::Generate);
    CHECK(req.greedy);
    CHECK(req.messages[0].content == golden("generation_summarization.txt"));
}

TEST_CASE("several induction pairs stack their blocks before one question") {
    const std::vector<EditPair> pairs{{"a", "b"}, {"c", "d"}};
    auto p = prompts::inference(Task::Summarization, pairs);
    CHECK(p.find("Original summary of an article: a\nRevised summary by a user: b\n"
                 "Original summary of an article: c\nRevised summary by a user: d\nBased on") == 0);
}

TEST_CASE("icl-edit without history keeps only the task instruction") {
    CHECK(prompts::icl_edit(Task::Summarization, "A.", {}) == "Article: A.\nPlease summarize the above article:");
    CHECK(prompts::icl_edit(Task::Email, "n", {}) ==
          "Notes: n\nPlease write an email based on the above notes for this user:");
}

TEST_CASE("task names parse") {
    CHECK(parse_task("summarization") == Task::Summarization);
    CHECK(parse_task("email") == Task::Email);
    CHECK(parse_task("email-writing") == Task::Email);
    CHECK_THROWS(parse_task("poetry"));
}

}
