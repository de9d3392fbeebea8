#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "curator/backend.hpp"
#include "curator/error.hpp"

using namespace curator;

namespace {

MockScript script_from(const char* json) { return MockScript::from_json_text(json); }

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "curator_backend_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("mock backend answers by tag rule and bills the ledger") {
  MockBackend backend(script_from(R"({"rules":[{"tag":"tagging","respond":"PERSON"}]})"));
  CostLedger ledger;
  LlmRequest request = LlmRequest::prompt("sys", "label: Ann", "tagging");
  LlmResponse response = backend.complete(request, ledger);
  CHECK(response.text == "PERSON");
  CHECK(response.completion_tokens == 1);
  CHECK(ledger.snapshot().total.llm_calls == 1);
  CHECK(ledger.snapshot().per_tag.at("tagging").llm_calls == 1);
}

TEST_CASE("mock rules match on the last message substring, in order") {
  MockBackend backend(script_from(
      R"({"rules":[{"contains":"alpha","respond":"A"},{"contains":"beta","respond":"B"}],
          "default":"D"})"));
  CostLedger ledger;
  CHECK(backend.complete(LlmRequest::prompt("", "has alpha and beta", "t"), ledger).text == "A");
  CHECK(backend.complete(LlmRequest::prompt("", "only beta", "t"), ledger).text == "B");
  CHECK(backend.complete(LlmRequest::prompt("", "neither", "t"), ledger).text == "D");
}

TEST_CASE("once rules are consumed in order") {
  MockBackend backend(script_from(
      R"({"rules":[{"tag":"gen","respond":"bad code","once":true},
                   {"tag":"gen","respond":"good code","once":true}]})"));
  CostLedger ledger;
  LlmRequest request = LlmRequest::prompt("", "write code", "gen");
  CHECK(backend.complete(request, ledger).text == "bad code");
  CHECK(backend.complete(request, ledger).text == "good code");
  CHECK_THROWS_AS(backend.complete(request, ledger), Error);  // exhausted, no default
  CHECK(ledger.snapshot().total.llm_calls == 2);
}

TEST_CASE("mock without matching rule or default raises MockExhausted") {
  MockBackend backend(script_from(R"({"rules":[{"tag":"other","respond":"x"}]})"));
  CostLedger ledger;
  try {
    backend.complete(LlmRequest::prompt("", "hi", "t"), ledger);
    FAIL("expected MockExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MockExhausted);
  }
  CHECK(ledger.snapshot().total.llm_calls == 0);
}

TEST_CASE("request invariants checked before completion") {
  MockBackend backend(script_from(R"({"default":"x"})"));
  CostLedger ledger;
  LlmRequest no_tag = LlmRequest::prompt("", "hi", "");
  CHECK_THROWS_AS(backend.complete(no_tag, ledger), Error);
  LlmRequest bad_temp = LlmRequest::prompt("", "hi", "t");
  bad_temp.temperature = 3.0;
  CHECK_THROWS_AS(backend.complete(bad_temp, ledger), Error);
  LlmRequest no_messages;
  no_messages.tag = "t";
  CHECK_THROWS_AS(backend.complete(no_messages, ledger), Error);
}

TEST_CASE("cache_key is deterministic, tag-blind and content-sensitive") {
  LlmRequest a = LlmRequest::prompt("sys", "hello world", "tag1");
  LlmRequest b = LlmRequest::prompt("sys", "hello world", "tag2");
  CHECK(cache_key(a) == cache_key(b));  // tag excluded

  LlmRequest c = a;
  c.messages[0].text = "hello worle";
  CHECK(cache_key(a) != cache_key(c));

  LlmRequest d = a;
  d.temperature = 0.0004;  // truncates to the same 3 decimals
  CHECK(cache_key(a) == cache_key(d));
  d.temperature = 0.002;
  CHECK(cache_key(a) != cache_key(d));
}

TEST_CASE("cache_key has no collisions over a generated corpus") {
  // derived oracle: 10^4 distinct requests, all keys distinct
  std::mt19937 rng(99);
  std::set<std::string> keys;
  for (int i = 0; i < 10000; ++i) {
    LlmRequest r = LlmRequest::prompt("s", "msg-" + std::to_string(i) + "-" +
                                               std::to_string(rng()), "t");
    r.max_tokens = 1 + static_cast<int>(rng() % 512);
    keys.insert(cache_key(r));
  }
  CHECK(keys.size() == 10000);
}

TEST_CASE("cached backend stores, replays and survives reload") {
  std::string cache_file = temp_path("replay.jsonl");
  std::remove(cache_file.c_str());

  auto mock = std::make_shared<MockBackend>(script_from(R"({"default":"the answer"})"));
  CostLedger ledger;
  LlmRequest request = LlmRequest::prompt("", "question", "t");

  {
    CachedBackend cached(mock, cache_file);
    LlmResponse first = cached.complete(request, ledger);
    LlmResponse second = cached.complete(request, ledger);
    CHECK(first.text == second.text);
    LedgerSnapshot snap = ledger.snapshot();
    CHECK(snap.total.llm_calls == 1);
    CHECK(snap.total.cache_hits == 1);
  }

  // a fresh instance reads the JSON-lines file back
  {
    CachedBackend cached(mock, cache_file);
    LlmResponse replayed = cached.complete(request, ledger);
    CHECK(replayed.text == "the answer");
    CHECK(ledger.snapshot().total.llm_calls == 1);  // still one real call ever
    CHECK(ledger.snapshot().total.cache_hits == 2);
  }
  std::remove(cache_file.c_str());
}

TEST_CASE("cached backend never bills llm_calls on a key hit") {
  std::string cache_file = temp_path("replay2.jsonl");
  std::remove(cache_file.c_str());
  auto mock = std::make_shared<MockBackend>(script_from(R"({"default":"r"})"));
  CachedBackend cached(mock, cache_file);
  CostLedger ledger;
  for (int i = 0; i < 5; ++i) {
    cached.complete(LlmRequest::prompt("", "same", "t"), ledger);
  }
  CHECK(ledger.snapshot().total.llm_calls == 1);
  CHECK(ledger.snapshot().total.cache_hits == 4);
  std::remove(cache_file.c_str());
}

TEST_CASE("mock backend is safe under concurrent completes") {
  MockBackend backend(script_from(R"({"default":"ok"})"));
  CostLedger ledger;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        backend.complete(LlmRequest::prompt("", "m" + std::to_string(t), "tag"), ledger);
      }
    });
  }
  for (std::thread& t : threads) t.join();
  CHECK(ledger.snapshot().total.llm_calls == 200);
  CHECK(ledger.snapshot().per_tag.at("tag").llm_calls == 200);
}

TEST_CASE("backend selector parsing") {
  CHECK_THROWS_AS(make_backend("bogus:x"), Error);
  CHECK_THROWS_AS(make_backend("cached:justfile"), Error);
  CHECK_THROWS_AS(make_backend("mock:/nonexistent/path.json"), Error);
}

TEST_CASE("word_count splits on whitespace") {
  CHECK(word_count("") == 0);
  CHECK(word_count("one") == 1);
  CHECK(word_count("  two  words \n") == 2);
}

#include <httplib.h>

TEST_CASE("http backend speaks the chat-completions shape") {
  httplib::Server server;
  std::string seen_auth, seen_body;
  int failures_left = 0;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_auth = req.get_header_value("Authorization");
                seen_body = req.body;
                if (failures_left > 0) {
                  --failures_left;
                  res.status = 500;
                  return;
                }
                res.set_content(
                    R"({"choices":[{"message":{"role":"assistant","content":"pong"}}],
                        "usage":{"prompt_tokens":7,"completion_tokens":2}})",
                    "application/json");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("CURATOR_TEST_KEY", "sk-test", 1);
  HttpConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.model = "test-model";
  config.api_key_env = "CURATOR_TEST_KEY";
  config.max_retries = 1;

  SUBCASE("success path bills the ledger and parses usage") {
    HttpBackend backend(config);
    CostLedger ledger;
    LlmRequest request = LlmRequest::prompt("sys", "ping", "t");
    LlmResponse response = backend.complete(request, ledger);
    CHECK(response.text == "pong");
    CHECK(response.prompt_tokens == 7);
    CHECK(response.completion_tokens == 2);
    CHECK(ledger.snapshot().total.llm_calls == 1);
    CHECK(seen_auth == "Bearer sk-test");

    auto body = nlohmann::ordered_json::parse(seen_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("messages").at(0).at("role") == "system");
    CHECK(body.at("messages").at(1).at("content") == "ping");
    CHECK(body.at("temperature") == 0.0);
    CHECK(body.contains("max_tokens"));
  }

  SUBCASE("5xx responses exhaust retries into BackendUnavailable") {
    failures_left = 10;
    HttpBackend backend(config);  // max_retries = 1: one attempt, no backoff sleep
    CostLedger ledger;
    try {
      backend.complete(LlmRequest::prompt("", "ping", "t"), ledger);
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BackendUnavailable);
    }
    CHECK(ledger.snapshot().total.llm_calls == 0);
  }

  server.stop();
  server_thread.join();
}
