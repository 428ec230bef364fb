#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prelude/error.hpp"
#include "prelude/llm_gateway.hpp"
#include "support.hpp"

using namespace prelude;
using nlohmann::json;

namespace {

std::shared_ptr<ScriptedBackend> rules(const std::string& body) { return ScriptedBackend::from_json(body); }

}  // namespace

TEST_SUITE("llm-gateway") {

TEST_CASE("scripted rules: first match wins, echo and transform") {
    auto b = rules(R"({"rules": [
        {"purpose": "infer", "response": "infer reply"},
        {"purpose": "generate", "contains": ["shout"], "echo": {"after": "Text: ", "until": "\n"}, "transform": "uppercase"},
        {"purpose": "generate", "matches": "Text: [0-9]+", "response": "digits"},
        {"purpose": "generate", "response": "plain"}]})");
    auto ask = [&](std::string p, Purpose purpose = Purpose::Generate) {
        return b->reply(ChatRequest::user_prompt(std::move(p), CallerRole::Agent, purpose)).text;
    };
    CHECK(ask("Text: quiet words\nshout please") == "QUIET WORDS");
    CHECK(ask("Text: 123\n") == "digits");
    CHECK(ask("Text: abc\n") == "plain");
    CHECK(ask("anything", Purpose::Infer) == "infer reply");
}

TEST_CASE("scripted backend fails loudly on unmatched requests and bad fixtures") {
    auto b = rules(R"({"rules": [{"purpose": "generate", "response": "x"}]})");
    auto req = ChatRequest::user_prompt("hi", CallerRole::Agent, Purpose::Aggregate);
    try {
        b->reply(req);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("aggregate") != std::string::npos);
        CHECK(std::string(e.what()).find(req.digest()) != std::string::npos);
    }
    CHECK_THROWS_AS(rules(R"({"rules": [{"purpose": "generate"}]})"), ConfigError);
    CHECK_THROWS_AS(rules(R"({"rules": [{"purpose": "generate", "response": "a", "echo": {"after": "x"}}]})"),
                    ConfigError);
    CHECK_THROWS_AS(rules(R"({"rules": [{"purpose": "nope", "response": "a"}]})"), ConfigError);
    CHECK_THROWS_AS(rules(R"({"rules": [{"matches": "(", "response": "a"}]})"), ConfigError);
    CHECK_THROWS_AS(rules("not json"), LoadError);
}

TEST_CASE("gateway ledger counts every call with the configured tokenizer") {
    auto tok = std::make_shared<FallbackTokenizer>();
    Gateway gw(rules(R"({"rules": [{"response": "two words"}]})"), tok);
    gw.set_round(4);
    auto c = gw.complete(ChatRequest::user_prompt("one two three", CallerRole::UserSimulator, Purpose::UserCheck));
    CHECK(c.text == "two words");
    CHECK(c.usage.input_tokens == 5);
    CHECK(c.usage.output_tokens == 3);
    gw.complete(ChatRequest::user_prompt("x", CallerRole::Agent, Purpose::Generate));
    auto entries = gw.ledger().entries();
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].round == 4);
    CHECK(entries[0].caller_role == CallerRole::UserSimulator);
    CHECK(entries[0].source == UsageSource::Tokenizer);
    CHECK(usage_total(gw.ledger(), CallerRole::Agent).total == 1 + 3);
    CHECK(usage_total(gw.ledger()).total == 8 + 4);
    CHECK_THROWS_AS(gw.complete(ChatRequest{}), UsageError);
}

TEST_CASE("request digest depends on content, caller and purpose") {
    auto a = ChatRequest::user_prompt("p", CallerRole::Agent, Purpose::Generate);
    auto b = ChatRequest::user_prompt("p", CallerRole::Agent, Purpose::Infer);
    auto c = ChatRequest::user_prompt("p", CallerRole::UserSimulator, Purpose::Generate);
    CHECK(a.digest() != b.digest());
    CHECK(a.digest() != c.digest());
    CHECK(a.digest() == ChatRequest::user_prompt("p", CallerRole::Agent, Purpose::Generate).digest());
    CHECK(a.digest().size() == 16);
}

TEST_CASE("remote backend speaks the chat-completions shape, retries and reads usage") {
    httplib::Server server;
    std::atomic<int> hits{0};
    json last;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (hits++ == 0) {
            res.status = 503;
            return;
        }
        last = json::parse(req.body);
        CHECK(req.get_header_value("Authorization") == "Bearer sk-test");
        res.set_content(
            R"({"choices": [{"message": {"role": "assistant", "content": "hello"}}],
                "usage": {"prompt_tokens": 11, "completion_tokens": 2}})",
            "application/json");
    });
    server.Post("/v1/broken/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("bad", "text/plain");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("PRELUDE_TEST_KEY", "sk-test", 1);
    RemoteChatBackend::Options o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    o.model = "test-model";
    o.api_key_env = "PRELUDE_TEST_KEY";
    o.retry.initial_backoff = std::chrono::milliseconds(1);
    auto backend = std::make_shared<RemoteChatBackend>(o);
    Gateway gw(backend, std::make_shared<FallbackTokenizer>());
    auto c = gw.complete(ChatRequest::user_prompt("prompt", CallerRole::Agent, Purpose::Generate));
    CHECK(c.text == "hello");
    CHECK(c.usage == TokenUsage{11, 2});
    auto entry = gw.ledger().entries().at(0);
    CHECK(entry.source == UsageSource::Provider);
    CHECK(entry.attempts == 2);
    CHECK(last["model"] == "test-model");
    CHECK(last["temperature"] == 0);
    CHECK(last["messages"][0]["content"] == "prompt");

    o.base_url += "/broken";
    RemoteChatBackend broken(o);
    CHECK_THROWS_AS(broken.reply(ChatRequest::user_prompt("p", CallerRole::Agent, Purpose::Generate)), TransportError);

    o.base_url = "http://127.0.0.1:1";
    o.retry.max_retries = 1;
    RemoteChatBackend unreachable(o);
    try {
        unreachable.reply(ChatRequest::user_prompt("p", CallerRole::Agent, Purpose::Generate));
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 2);
    }
    server.stop();
    t.join();
}

}
