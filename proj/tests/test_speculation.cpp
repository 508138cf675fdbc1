// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <thread>

#include "specagent/speculation.hpp"
#include "support.hpp"

using namespace specagent;
using testsupport::generation;

namespace {

BackendResponse text_only(std::string text) {
  BackendResponse r;
  r.text = std::move(text);
  return r;
}

Draft draft_of(DraftSource src, const Action& a, std::size_t reasoning_tokens) {
  Draft d;
  d.source = src;
  d.action = a;
  if (src == DraftSource::System2) d.reasoning = ReasoningTrace{"r", reasoning_tokens, {}};
  return d;
}

/// Sleeps for a fixed real duration per role, then answers.
class SleepyBackend final : public ModelBackend {
 public:
  SleepyBackend(Millis slm, Millis llm) : slm_(slm), llm_(llm) {}
  BackendResponse generate(const GenerationRequest& r) override {
    const auto d = r.role == Role::SLM ? slm_ : llm_;
    std::this_thread::sleep_for(d);
    auto out = generation(std::nullopt, Action::search("q"));
    out.latency = d;
    return out;
  }
  NextTokenDistribution judge_next_token(const JudgeRequest&) override { throw std::logic_error("unused"); }

 private:
  Millis slm_, llm_;
};

}  // namespace

TEST_CASE("parse tool_call output with reasoning") {
  const auto r = generation(std::string("look it up"), Action::search("paris population"), -0.2, -0.5);
  const auto p = parse_model_output(r);
  CHECK(p.action == Action::search("paris population"));
  REQUIRE(p.reasoning.has_value());
  CHECK(p.reasoning->text == "look it up");
  // "<think>", "look ", "it ", "up</think>", "\n" precede the action.
  CHECK(p.reasoning->token_count == 5);
  CHECK(p.action_logprobs.size() + p.reasoning->token_count == r.tokens.size());
  for (double lp : p.action_logprobs) CHECK(lp == -0.2);
}

TEST_CASE("parse alternative output forms") {
  CHECK(parse_model_output(text_only(R"(<tool_call>{"name":"visit","arguments":{"url":"https://a.b","goal":"x"}}</tool_call>)"))
            .action == Action::visit("https://a.b", "x"));
  CHECK(parse_model_output(text_only(R"(<tool_call>{"name":"search","arguments":"{\"q\":\"k\"}"}</tool_call>)")).action ==
        Action::search("k"));
  CHECK(parse_model_output(text_only("<think>done</think><answer>Paris</answer>")).action == Action::finish("Paris"));
  CHECK(parse_model_output(text_only("thinking without an opening tag</think>\nsearch{query=\"z\"}")).action ==
        Action::search("z"));
  const auto empty = parse_model_output(text_only("<think>  </think><answer>a</answer>"));
  CHECK_FALSE(empty.reasoning.has_value());
  const auto words = parse_model_output(text_only("<think>one two three</think><answer>a</answer>"));
  CHECK(words.reasoning->token_count == 3);  // no tokens: word count
  CHECK_THROWS_AS(parse_model_output(text_only("I am not sure.")), ActionParseError);
}

TEST_CASE("selection truth table") {
  const SelectionPolicy pol{512};
  const std::vector<Action> kinds = {Action::search("q"), Action::visit("https://a.b", "i"), Action::finish("f"),
                                     Action::other_tool("calc")};
  for (const auto& a : kinds) {
    for (std::size_t len : {std::size_t{0}, std::size_t{512}, std::size_t{513}}) {
      DraftPair both;
      both.system2 = draft_of(DraftSource::System2, a, len);
      both.system1 = draft_of(DraftSource::System1, Action::search("other"), 0);
      const bool visit_short = a.kind() == ActionKind::Visit && len <= 512;
      CHECK(select_draft(both, pol).source == (visit_short ? DraftSource::System1 : DraftSource::System2));

      DraftPair only2;
      only2.system2 = both.system2;
      CHECK(select_draft(only2, pol).source == DraftSource::System2);

      DraftPair only1;
      only1.system1 = both.system1;
      CHECK(select_draft(only1, pol).source == DraftSource::System1);
    }
  }
  CHECK_THROWS_AS(select_draft(DraftPair{}, pol), BothDraftsFailed);
}

TEST_CASE("system1 drafts drop reasoning") {
  const auto d = make_draft(DraftSource::System1, generation(std::string("r"), Action::search("q")));
  CHECK_FALSE(d.reasoning.has_value());
  CHECK(reasoning_length(d) == 0);
}

TEST_CASE("draft pair wall time on the scripted clock") {
  ScenarioScript s;
  s.entries[{Role::SLM, 0, GenerationMode::WithReasoning}] = {generation(std::string("r"), Action::search("q")), Millis{300}};
  s.entries[{Role::LLM, 0, GenerationMode::ActionOnly}] = {generation(std::nullopt, Action::search("q")), Millis{500}};
  auto b = std::make_shared<ScriptedBackend>(s);
  ManualClock clock;
  Drafter drafter(Backends{b, b, b}, clock);
  const auto pair = drafter.draft_pair("prompt", 0);
  CHECK(pair.wall == Millis{500});
  CHECK(clock.now() == Millis{500});
  CHECK(latency_of(pair.system2) == Millis{300});
  CHECK(latency_of(pair.system1) == Millis{500});
}

TEST_CASE("draft pair issues both calls concurrently") {
  auto b = std::make_shared<SleepyBackend>(Millis{300}, Millis{500});
  SteadyClock clock;
  Drafter drafter(Backends{b, b, b}, clock);
  Stopwatch sw;
  const auto pair = drafter.draft_pair("prompt", 0);
  const auto elapsed = sw.elapsed();
  CHECK(elapsed >= Millis{500});
  CHECK(elapsed < Millis{800});
  CHECK(pair.system2_draft() != nullptr);
  CHECK(pair.system1_draft() != nullptr);
}

TEST_CASE("a failing side is reported, not thrown") {
  ScenarioScript s;
  s.entries[{Role::SLM, 0, GenerationMode::WithReasoning}] = {ScriptedFailure{BackendErrorKind::Timeout}, Millis{900}};
  s.entries[{Role::LLM, 0, GenerationMode::ActionOnly}] = {generation(std::nullopt, Action::visit("https://a.b", "i")),
                                                           Millis{200}};
  auto b = std::make_shared<ScriptedBackend>(s);
  ManualClock clock;
  Drafter drafter(Backends{b, b, b}, clock);
  const auto pair = drafter.draft_pair("prompt", 0);
  CHECK(pair.system2_draft() == nullptr);
  CHECK(std::get<DraftFailure>(pair.system2).latency == Millis{900});
  CHECK(pair.wall == Millis{900});
  CHECK(select_draft(pair, {}).source == DraftSource::System1);
  CHECK(to_record(pair.system2).error.has_value());
}
