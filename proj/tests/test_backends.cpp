// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "specagent/http_backend.hpp"
#include "specagent/scripted_backend.hpp"

using namespace specagent;
using nlohmann::json;

namespace {

const char* kScenario = R"({
  "version": 1,
  "task_id": "t",
  "question": "q?",
  "entries": [
    {"role": "slm", "step": 0, "mode": "with_reasoning", "text": "<think>r</think>x",
     "tokens": ["<think>", "r", "</think>", "x"], "logprobs": [-0.1, -0.2, -0.3, -0.4], "latency_ms": 300},
    {"role": "critic", "step": 0, "topk": [["No", -2.5], ["Yes", -0.1]], "latency_ms": 40},
    {"role": "llm", "step": 1, "mode": "action_only", "error": "timeout", "latency_ms": 700}
  ]
})";

}  // namespace

TEST_CASE("scenario loading") {
  const auto s = load_scenario(kScenario);
  CHECK(s.task_id == "t");
  CHECK(s.entries.size() == 3);
  const auto& crit = s.entries.at({Role::Critic, 0, GenerationMode::ActionOnly});
  const auto& dist = std::get<NextTokenDistribution>(crit.payload);
  CHECK(dist.entries.front().token == "Yes");  // sorted by logprob
  CHECK(crit.latency == Millis{40});
}

TEST_CASE("scenario errors") {
  SUBCASE("syntax error reports line and column") {
    try {
      load_scenario("{\n  \"version\": 1,\n  \"entries\": [,]\n}");
      FAIL("expected ScenarioParseError");
    } catch (const ScenarioParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() > 0);
    }
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(load_scenario(R"({"version":1,"entries":[
      {"role":"slm","step":0,"mode":"action_only","text":"a"},
      {"role":"slm","step":0,"mode":"action_only","text":"b"}]})"),
                    DuplicateKeyError);
  }
  SUBCASE("schema problems") {
    CHECK_THROWS_AS(load_scenario(R"({"entries":[]})"), ScenarioParseError);
    CHECK_THROWS_AS(load_scenario(R"({"version":1,"entries":[{"role":"xx","step":0,"mode":"action_only","text":"a"}]})"),
                    ScenarioParseError);
    CHECK_THROWS_AS(load_scenario(R"({"version":1,"entries":[{"role":"slm","step":0,"mode":"action_only","text":"a","colour":1}]})"),
                    ScenarioParseError);
    CHECK_THROWS_AS(load_scenario(R"({"version":1,"entries":[{"role":"critic","step":0,"topk":[]}]})"),
                    ScenarioParseError);
    CHECK_THROWS_AS(load_scenario(R"({"version":1,"entries":[{"role":"slm","step":0,"mode":"action_only","text":"a","tokens":["a"],"logprobs":[-1,-2]}]})"),
                    ScenarioParseError);
  }
}

TEST_CASE("scripted backend replays entries and logs calls") {
  ScriptedBackend b(load_scenario(kScenario));
  GenerationRequest g{Role::SLM, 0, "ctx", GenerationMode::WithReasoning, {}};
  const auto r = b.generate(g);
  CHECK(r.text == "<think>r</think>x");
  CHECK(r.latency == Millis{300});

  JudgeRequest j{Role::Critic, 0, "prompt", 20};
  const auto d = b.judge_next_token(j);
  CHECK(d.k == 2);  // fewer scripted than requested: no padding
  CHECK(d.latency == Millis{40});

  g = {Role::LLM, 1, "ctx", GenerationMode::ActionOnly, {}};
  try {
    b.generate(g);
    FAIL("expected a scripted timeout");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::Timeout);
    CHECK(e.latency() == Millis{700});
  }
  g = {Role::LLM, 5, "ctx", GenerationMode::WithReasoning, {}};
  CHECK_THROWS_AS(b.generate(g), BackendError);
  CHECK(b.calls().size() == 4);
  CHECK(b.count_calls(Role::LLM) == 2);
  CHECK(b.count_calls(Role::SLM, GenerationMode::WithReasoning) == 1);
}

TEST_CASE("request preconditions") {
  GenerationRequest g{Role::SLM, 0, "", GenerationMode::WithReasoning, {}};
  CHECK_THROWS_AS(check_preconditions(g), std::invalid_argument);
  g.context = "x";
  g.params.max_tokens = 0;
  CHECK_THROWS_AS(check_preconditions(g), std::invalid_argument);
  JudgeRequest j{Role::Critic, 0, "p", 5};
  CHECK_THROWS_AS(check_preconditions(j), std::invalid_argument);
}

TEST_CASE("distribution validation") {
  NextTokenDistribution d{{{"a", -0.5}, {"b", -1.5}}, 2, Millis{0}};
  CHECK_NOTHROW(validate(d));
  d.entries = {{"a", -1.5}, {"b", -0.5}};
  CHECK_THROWS(validate(d));
  d.entries = {{"a", -0.01}, {"b", -0.01}};  // mass above 1
  CHECK_THROWS(validate(d));
}

TEST_CASE("chat completion parsing") {
  const auto r = parse_chat_completion(R"({"choices":[{"message":{"content":"ab","reasoning_content":"hm"},
    "finish_reason":"length","logprobs":{"content":[{"token":"a","logprob":-0.1},{"token":"b","logprob":-0.2}]}}]})");
  CHECK(r.text == "<think>hm</think>\nab");
  CHECK(r.finish_reason == FinishReason::Length);
  CHECK(r.token_logprobs == std::vector<double>{-0.1, -0.2});
  CHECK_THROWS_AS(parse_chat_completion("{\"choices\":[]}"), BackendError);
  CHECK_THROWS_AS(parse_chat_completion("not json"), BackendError);
}

TEST_CASE("judge parsing demands k alternatives") {
  json alts = json::array();
  for (int i = 0; i < 5; ++i) alts.push_back({{"token", "t" + std::to_string(i)}, {"logprob", -3.0}});
  json body = {{"choices", {{{"message", {{"content", "t0"}}},
                             {"logprobs", {{"content", {{{"token", "t0"}, {"logprob", -3.0}, {"top_logprobs", alts}}}}}}}}}};
  try {
    parse_judge_completion(body.dump(), 20);
    FAIL("expected InsufficientTopK");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::InsufficientTopK);
  }
}

TEST_CASE("request bodies") {
  HttpBackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.model = "m";
  HttpChatBackend b(cfg);
  const auto ao = json::parse(b.build_generate_body({Role::SLM, 0, "ctx", GenerationMode::ActionOnly, {}}));
  CHECK(ao["logprobs"] == true);
  CHECK(ao["chat_template_kwargs"]["enable_thinking"] == false);
  CHECK(ao["messages"][0]["content"].get<std::string>().find("action only") != std::string::npos);
  const auto wr = json::parse(b.build_generate_body({Role::SLM, 0, "ctx", GenerationMode::WithReasoning, {}}));
  CHECK_FALSE(wr.contains("chat_template_kwargs"));
  const auto jd = json::parse(b.build_judge_body({Role::Critic, 0, "p", 20}));
  CHECK(jd["max_tokens"] == 1);
  CHECK(jd["top_logprobs"] == 20);
}

TEST_CASE("http backend against a stub server") {
  httplib::Server server;
  std::atomic<int> failures_left{1};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (failures_left.fetch_sub(1) > 0) {
      res.status = 503;
      return;
    }
    const auto body = json::parse(req.body);
    if (body.contains("top_logprobs")) {
      json alts = json::array();
      for (int i = 0; i < 20; ++i) alts.push_back({{"token", "t" + std::to_string(i)}, {"logprob", std::log(1.0 / 20)}});
      json resp = {{"choices", {{{"message", {{"content", "t0"}}},
                                 {"logprobs", {{"content", {{{"token", "t0"}, {"logprob", std::log(1.0 / 20)}, {"top_logprobs", alts}}}}}}}}}};
      res.set_content(resp.dump(), "application/json");
      return;
    }
    json resp = {{"choices", {{{"message", {{"content", "ab"}}},
                               {"finish_reason", "stop"},
                               {"logprobs", {{"content", {{{"token", "a"}, {"logprob", -0.1}}, {{"token", "b"}, {"logprob", -0.2}}}}}}}}}};
    res.set_content(resp.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "stub";
  cfg.backoff_initial_ms = 1;
  HttpChatBackend b(cfg);

  const auto r = b.generate({Role::LLM, 0, "hello", GenerationMode::WithReasoning, {}});  // first call retried
  CHECK(r.text == "ab");
  CHECK(r.tokens == std::vector<std::string>{"a", "b"});
  CHECK(r.token_logprobs == std::vector<double>{-0.1, -0.2});

  const auto d = b.judge_next_token({Role::Critic, 0, "audit", 20});
  CHECK(d.k == 20);
  CHECK(d.entries.size() == 20);
  for (const auto& e : d.entries) CHECK(e.logprob == doctest::Approx(-2.9957).epsilon(1e-4));

  server.stop();
  th.join();

  HttpBackendConfig dead = cfg;
  dead.base_url = "http://127.0.0.1:" + std::to_string(port);
  dead.max_retries = 0;
  dead.timeout_ms = 500;
  HttpChatBackend gone(dead);
  CHECK_THROWS_AS(gone.generate({Role::LLM, 0, "x", GenerationMode::WithReasoning, {}}), BackendError);
}
